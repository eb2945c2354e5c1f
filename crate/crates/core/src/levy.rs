//! Lévy functions on the unit interval and the Lévy–Mellin transform.
//!
//! Pairs `(c, d)` with `1 ≤ c < d` coprime index reduced matrices, primitive
//! intervals in `[0, 1]` and consecutive convergent denominators. Formal
//! Dirichlet series are truncated coefficient lists.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::boundary::{ContinuedFraction, Mat2, QMat2, P1, Q, Z};
use crate::error::{Error, Result};
use crate::farey::Segment;
use crate::measure::{Group, PseudoMeasure, RationalAction, Scalars};
use crate::modular::{hecke_reps, Hecke};

/// Reduced matrices with lower row `(c, d)`: determinant −1 and +1. The
/// marginal row `(1, 1)` has no `g_plus`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducedPair {
    pub g_minus: Mat2,
    pub g_plus: Option<Mat2>,
}

/// Non-negative entries, non-decreasing along rows and down columns.
pub fn is_reduced(g: &Mat2) -> bool {
    !g.a.is_negative() && g.a <= g.b && g.c <= g.d && g.a <= g.c && g.b <= g.d
}

fn check_pair(c: u64, d: u64) -> Result<()> {
    if c == 0 || c > d || c.gcd(&d) != 1 || (c == d && c != 1) {
        return Err(Error::Domain(format!("({c}, {d}) is not a coprime pair with 1 ≤ c < d or (1, 1)")));
    }
    Ok(())
}

fn reduced_with_det(c: u64, d: u64, eps: i64) -> Option<Mat2> {
    let (ci, di) = (c as i128, d as i128);
    // a·d ≡ eps (mod c), so a ranges over one residue class in [0, c].
    let inv = (di % ci).extended_gcd(&ci).x.rem_euclid(ci);
    let a0 = (eps as i128 * inv).rem_euclid(ci);
    [a0, a0 + ci].into_iter().filter(|&a| a <= ci).find_map(|a| {
        let num = a * di - eps as i128;
        if num % ci != 0 {
            return None;
        }
        let g = Mat2::new(Z::from(a), Z::from(num / ci), Z::from(c), Z::from(d));
        is_reduced(&g).then_some(g)
    })
}

pub fn reduced_pair(c: u64, d: u64) -> Result<ReducedPair> {
    check_pair(c, d)?;
    let g_minus = reduced_with_det(c, d, -1).ok_or_else(|| Error::Inconsistent(format!("no g⁻ for ({c}, {d})")))?;
    let g_plus = if c == d { None } else { reduced_with_det(c, d, 1) };
    if c != d && g_plus.is_none() {
        return Err(Error::Inconsistent(format!("no g⁺ for ({c}, {d})")));
    }
    Ok(ReducedPair { g_minus, g_plus })
}

/// The segment `g(0) → g(1)`. Its start has denominator d and is included
/// in the half-open interval; its end has denominator c + d and is not.
pub fn unit_image(g: &Mat2) -> Segment {
    Segment { from: g.act(&P1::int(0)), to: g.act(&P1::int(1)) }
}

fn as_q(x: &P1) -> Q {
    x.to_q().expect("finite endpoint")
}

fn lies_left(s: &Segment) -> bool {
    let half = Q::new(Z::one(), Z::from(2));
    as_q(&s.from) <= half && as_q(&s.to) <= half
}

/// `(I⁻, I⁺)` with `I⁻ ⊂ [0, 1/2]` and `I⁺ = 1 − I⁻ ⊂ [1/2, 1]`.
///
/// Which of `g⁻`, `g⁺` produces the left interval depends on `(c, d)`; for
/// the marginal pair the left interval is `[0, 1/2]` by convention.
pub fn farey_interval_pair(c: u64, d: u64) -> Result<(Segment, Segment)> {
    let pair = reduced_pair(c, d)?;
    let reflect = Mat2::from_i64(-1, 1, 0, 1);
    let first = unit_image(&pair.g_minus);
    let second = match &pair.g_plus {
        Some(g) => unit_image(g),
        None => first.map(&reflect),
    };
    debug_assert_eq!(second, first.map(&reflect));
    Ok(if lies_left(&first) { (first, second) } else { (second, first) })
}

/// Inverse of [`farey_interval_pair`] on either interval: `(c, d)` read off
/// the endpoint denominators.
pub fn interval_pair_index(s: &Segment) -> Result<(u64, u64)> {
    let d = s.from.den();
    let c = s.to.den() - d;
    let conv = |x: &Z| -> Result<u64> { x.try_into().map_err(|_| Error::Domain(format!("bad interval {s:?}"))) };
    let (c, d) = (conv(&c)?, conv(d)?);
    check_pair(c, d)?;
    Ok((c, d))
}

/// The reduced matrix `g` with `g(0) → g(1)` equal to the interval.
pub fn interval_matrix(s: &Segment) -> Result<Mat2> {
    let (c, d) = interval_pair_index(s)?;
    let b = s.from.num().clone();
    let a = s.to.num() - &b;
    let g = Mat2::new(a, b, Z::from(c), Z::from(d));
    if is_reduced(&g) && g.is_unimodular() {
        Ok(g)
    } else {
        Err(Error::Domain(format!("interval {s:?} is not the image of a reduced matrix")))
    }
}

/// Membership in the half-open interval: start included, end excluded.
pub fn half_open_contains(s: &Segment, x: &Q) -> bool {
    let (a, b) = (as_q(&s.from), as_q(&s.to));
    let (lo, hi) = if a <= b { (&a, &b) } else { (&b, &a) };
    lo <= x && x <= hi && *x != b
}

/// Coprime pairs `1 ≤ c < d ≤ max_d`.
pub fn pairs_up_to(max_d: u64) -> impl Iterator<Item = (u64, u64)> {
    (2..=max_d).flat_map(|d| (1..d).filter(move |c| c.gcd(&d) == 1).map(move |c| (c, d)))
}

/// Consecutive denominators `(q_n, q_{n+1})`, n ≥ 0, of the canonical
/// continued fraction of x.
pub fn consecutive_denominators(x: &Q) -> Vec<(Z, Z)> {
    let qs: Vec<Z> = ContinuedFraction::expand(x).convergent_pairs().into_iter().skip(1).map(|(_, q)| q).collect();
    qs.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

/// Half of the unit interval a Lévy interval lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Minus,
    Plus,
}

/// A coefficient rule on primitive intervals.
#[derive(Clone)]
pub struct LevyFunction<V> {
    zero: V,
    rule: Arc<dyn Fn(&Segment) -> V + Send + Sync>,
}

impl<V: Group> LevyFunction<V> {
    pub fn new(zero: V, rule: impl Fn(&Segment) -> V + Send + Sync + 'static) -> Self {
        LevyFunction { zero, rule: Arc::new(rule) }
    }

    /// A rule depending only on `(c, d)` and the half, so invariant under
    /// integer translation. The marginal interval is passed as `(1, 1)`.
    pub fn from_denominators(zero: V, f: impl Fn(Side, &Z, &Z) -> V + Send + Sync + 'static) -> Self {
        LevyFunction::new(zero, move |s| {
            let d = s.from.den().clone();
            let c = s.to.den() - &d;
            let a = as_q(&s.from);
            let b = as_q(&s.to);
            let lo = if a <= b { a } else { b };
            let frac = &lo - lo.floor();
            let side = if frac < Q::new(Z::one(), Z::from(2)) { Side::Minus } else { Side::Plus };
            f(side, &c, &d)
        })
    }

    pub fn zero(&self) -> V {
        self.zero.clone()
    }

    pub fn value(&self, s: &Segment) -> V {
        (self.rule)(s)
    }
}

fn translate(s: &Segment, k: &Z) -> Segment {
    s.map(&Mat2::new(Z::one(), k.clone(), Z::zero(), Z::one()))
}

fn marginal_left() -> Segment {
    Segment { from: P1::int(0), to: P1::frac(1, 2) }
}

/// `f(I_{1,1}) + Σ f(I)` over intervals with `d ≤ depth` containing α, on the
/// interval system translated to the unit cell of α.
pub fn levy_eval<V: Group>(f: &LevyFunction<V>, alpha: &Q, depth: u64) -> V {
    let k = alpha.floor().to_integer();
    let beta = alpha - Q::from_integer(k.clone());
    let mut acc = f.value(&translate(&marginal_left(), &k));
    for (c, d) in pairs_up_to(depth) {
        let (lo, hi) = farey_interval_pair(c, d).expect("enumerated pair");
        for s in [lo, hi] {
            if half_open_contains(&s, &beta) {
                acc = acc.add(&f.value(&translate(&s, &k)));
            }
        }
    }
    acc
}

/// The same sum read off the convergent denominators of α, counting pairs
/// with `q_{n+1} ≤ depth`. Agrees with [`levy_eval`] unless α is an endpoint
/// of one of the enumerated intervals.
pub fn levy_eval_classical<V: Group>(f: &LevyFunction<V>, alpha: &Q, depth: u64) -> V {
    let k = alpha.floor().to_integer();
    let beta = alpha - Q::from_integer(k.clone());
    let half = Q::new(Z::one(), Z::from(2));
    let mut acc = f.value(&translate(&marginal_left(), &k));
    for (qa, qb) in consecutive_denominators(&beta) {
        if qa >= qb || qb > Z::from(depth) {
            continue;
        }
        let (lo, hi) = farey_interval_pair(u64::try_from(&qa).unwrap(), u64::try_from(&qb).unwrap()).expect("pair");
        if beta <= half {
            acc = acc.add(&f.value(&translate(&lo, &k)));
        }
        if beta >= half {
            acc = acc.add(&f.value(&translate(&hi, &k)));
        }
    }
    acc
}

/// Formal integer combination of rational matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupRing(BTreeMap<QMat2, Z>);

impl GroupRing {
    pub fn zero() -> GroupRing {
        GroupRing(BTreeMap::new())
    }

    pub fn element(g: QMat2) -> GroupRing {
        GroupRing(BTreeMap::from([(g, Z::one())]))
    }

    pub fn one() -> GroupRing {
        GroupRing::element(QMat2::identity())
    }

    pub fn terms(&self) -> &BTreeMap<QMat2, Z> {
        &self.0
    }

    pub fn mul(&self, o: &GroupRing) -> GroupRing {
        let mut out = BTreeMap::new();
        for (g, m) in &self.0 {
            for (h, n) in &o.0 {
                *out.entry(g.mul(h)).or_insert_with(Z::zero) += m * n;
            }
        }
        out.retain(|_, v: &mut Z| !v.is_zero());
        GroupRing(out)
    }

    /// `Σ n_g g[v]`.
    pub fn act<W: RationalAction>(&self, v: &W) -> W {
        self.0.iter().fold(v.sub(v), |acc, (g, n)| acc.add(&v.act_q(g).times(n)))
    }
}

impl Group for GroupRing {
    fn add(&self, o: &Self) -> Self {
        let mut out = self.0.clone();
        for (g, n) in &o.0 {
            *out.entry(g.clone()).or_insert_with(Z::zero) += n;
        }
        out.retain(|_, v| !v.is_zero());
        GroupRing(out)
    }
    fn neg(&self) -> Self {
        GroupRing(self.0.iter().map(|(g, n)| (g.clone(), -n)).collect())
    }
    fn vanishes(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for GroupRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(g, n)| if n.is_one() { g.to_string() } else { format!("{n}·{g}") }).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A bilinear pairing of coefficient groups.
pub trait Compose<B> {
    type Output: Group;
    fn compose(&self, b: &B) -> Self::Output;
}

impl Compose<GroupRing> for GroupRing {
    type Output = GroupRing;
    fn compose(&self, b: &GroupRing) -> GroupRing {
        self.mul(b)
    }
}

impl<W: RationalAction> Compose<W> for GroupRing {
    type Output = W;
    fn compose(&self, b: &W) -> W {
        self.act(b)
    }
}

impl<A: Group> Compose<A> for Z {
    type Output = A;
    fn compose(&self, b: &A) -> A {
        b.times(self)
    }
}

/// `Σ_{n ≤ N} a_n n^{−s}`; absent coefficients are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalDirichletSeries<A> {
    truncation: usize,
    zero: A,
    coeffs: BTreeMap<usize, A>,
}

impl<A: Group> FormalDirichletSeries<A> {
    pub fn new(truncation: usize, zero: A) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Domain("truncation must be at least 1".into()));
        }
        Ok(FormalDirichletSeries { truncation, zero, coeffs: BTreeMap::new() })
    }

    pub fn from_fn(truncation: usize, zero: A, f: impl Fn(usize) -> A) -> Result<Self> {
        let mut s = FormalDirichletSeries::new(truncation, zero)?;
        for n in 1..=truncation {
            s.set(n, f(n))?;
        }
        Ok(s)
    }

    /// `a_1 = one`, all others zero.
    pub fn unit(truncation: usize, one: A) -> Result<Self> {
        let zero = one.sub(&one);
        let mut s = FormalDirichletSeries::new(truncation, zero)?;
        s.set(1, one)?;
        Ok(s)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn set(&mut self, n: usize, a: A) -> Result<()> {
        if n == 0 || n > self.truncation {
            return Err(Error::Domain(format!("index {n} outside 1..={}", self.truncation)));
        }
        if a.vanishes() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, a);
        }
        Ok(())
    }

    pub fn get(&self, n: usize) -> A {
        self.coeffs.get(&n).cloned().unwrap_or_else(|| self.zero.clone())
    }

    /// Non-zero coefficients in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &A)> {
        self.coeffs.iter().map(|(n, a)| (*n, a))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let truncation = self.truncation.min(o.truncation);
        FormalDirichletSeries::from_fn(truncation, self.zero.clone(), |n| self.get(n).add(&o.get(n))).expect("positive")
    }

    /// `a_n ↦ n^w a_n`, the argument shift `s ↦ s − w`.
    pub fn shift(&self, w: u32) -> Self {
        let mut out = self.clone();
        for (n, a) in out.coeffs.iter_mut() {
            *a = a.times(&num_traits::pow(Z::from(*n), w as usize));
        }
        out
    }
}

impl<A: Scalars> FormalDirichletSeries<A> {
    /// Argument shift by a possibly negative integer.
    pub fn shift_rational(&self, w: i32) -> Self {
        let mut out = self.clone();
        for (n, a) in out.coeffs.iter_mut() {
            let base = Q::from_integer(Z::from(*n));
            let f = if w >= 0 { num_traits::pow(base, w as usize) } else { num_traits::pow(base.recip(), (-w) as usize) };
            *a = a.scale(&f);
        }
        out
    }
}

/// `c_n = Σ_{d₁d₂ = n} a_{d₁} · b_{d₂}`, truncated at `min(N_A, N_B)`.
pub fn dirichlet_mul<A, B>(a: &FormalDirichletSeries<A>, b: &FormalDirichletSeries<B>) -> FormalDirichletSeries<A::Output>
where
    A: Group + Compose<B>,
    B: Group,
{
    let truncation = a.truncation.min(b.truncation);
    let zero = a.zero.compose(&b.zero);
    let mut coeffs: BTreeMap<usize, A::Output> = BTreeMap::new();
    for (i, x) in a.iter() {
        for (j, y) in b.iter() {
            let n = i * j;
            if n > truncation {
                break;
            }
            let t = x.compose(y);
            let e = coeffs.entry(n).or_insert_with(|| zero.clone());
            *e = e.add(&t);
        }
    }
    coeffs.retain(|_, v| !v.vanishes());
    FormalDirichletSeries { truncation, zero, coeffs }
}

/// `Z₋(s) = Σ diag(1, 1/d) d^{−s}`.
pub fn z_minus(truncation: usize) -> Result<FormalDirichletSeries<GroupRing>> {
    FormalDirichletSeries::from_fn(truncation, GroupRing::zero(), |d| {
        GroupRing::element(QMat2::diag(Q::one(), Q::new(Z::one(), Z::from(d))))
    })
}

/// `Z₊(s) = Σ diag(1/d, 1) d^{−s}`.
pub fn z_plus(truncation: usize) -> Result<FormalDirichletSeries<GroupRing>> {
    FormalDirichletSeries::from_fn(truncation, GroupRing::zero(), |d| {
        GroupRing::element(QMat2::diag(Q::new(Z::one(), Z::from(d)), Q::one()))
    })
}

/// `(1, −c/d; 0, 1/d)`.
pub fn lm_matrix(c: u64, d: u64) -> QMat2 {
    let d = Z::from(d);
    QMat2::new(Q::one(), -Q::new(Z::from(c), d.clone()), Q::zero(), Q::new(Z::one(), d))
}

/// Coefficient at d: `Σ_c (1, −c/d; 0, 1/d)[μ(∞, c/d)]` over coprime
/// `1 ≤ c < d`, and over the marginal `c = d = 1`.
pub fn lm_coefficient<M>(mu: &M, d: u64) -> M::V
where
    M: PseudoMeasure,
    M::V: RationalAction,
{
    let cs: Vec<u64> = if d == 1 { vec![1] } else { (1..d).filter(|c| c.gcd(&d) == 1).collect() };
    cs.into_iter().fold(mu.zero(), |acc, c| {
        let v = mu.eval(&P1::infinity(), &P1::frac(c as i64, d as i64));
        acc.add(&v.act_q(&lm_matrix(c, d)))
    })
}

pub fn lm_transform<M>(mu: &M, truncation: usize) -> Result<FormalDirichletSeries<M::V>>
where
    M: PseudoMeasure,
    M::V: RationalAction,
{
    FormalDirichletSeries::from_fn(truncation, mu.zero(), |d| lm_coefficient(mu, d as u64))
}

/// `(d, d₁, d₂, c)` with `δ = (d₂, c·d₁; 0, d·d₁)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RepFactors {
    pub d: u64,
    pub d1: u64,
    pub d2: u64,
    pub c: u64,
}

impl RepFactors {
    pub fn matrix(&self) -> QMat2 {
        let z = |x: u64| Q::from_integer(Z::from(x));
        QMat2::new(z(self.d2), z(self.c * self.d1), Q::zero(), z(self.d * self.d1))
    }

    /// `diag(1/d₂, 1) · diag(1, 1/d₁) · (1, −c/d; 0, 1/d)`.
    pub fn inverse_product(&self) -> QMat2 {
        let r = |x: u64| Q::new(Z::one(), Z::from(x));
        QMat2::diag(r(self.d2), Q::one()).mul(&QMat2::diag(Q::one(), r(self.d1))).mul(&lm_matrix(self.c, self.d))
    }
}

/// Splits an upper-triangular Hecke representative `(a, b; 0, D)`.
pub fn factor_hecke_rep(delta: &QMat2) -> Option<RepFactors> {
    let m = delta.to_integer()?;
    if !m.c.is_zero() {
        return None;
    }
    let conv = |x: &Z| u64::try_from(x).ok();
    let (a, b, dd) = (conv(&m.a)?, conv(&m.b)?, conv(&m.d)?);
    if a == 0 || b == 0 || b > dd {
        return None;
    }
    let d1 = b.gcd(&dd);
    let f = RepFactors { d: dd / d1, d1, d2: a, c: b / d1 };
    check_pair(f.c, f.d).ok()?;
    Some(f)
}

/// All `(d, d₁, d₂, c)` with `d·d₁·d₂ = n` and `(c, d)` coprime or marginal.
pub fn rep_factors(n: u64) -> Vec<RepFactors> {
    let mut out = Vec::new();
    for d in 1..=n {
        for d1 in 1..=n / d {
            if n % (d * d1) != 0 {
                continue;
            }
            let d2 = n / (d * d1);
            let cs: Vec<u64> = if d == 1 { vec![1] } else { (1..d).filter(|c| c.gcd(&d) == 1).collect() };
            out.extend(cs.into_iter().map(|c| RepFactors { d, d1, d2, c }));
        }
    }
    out.sort();
    out
}

/// The representatives of level n correspond one-to-one to the factor
/// tuples, and each inverse splits as the three-matrix product.
pub fn factorization_holds(n: u64) -> bool {
    let mut from_reps = Vec::new();
    for delta in hecke_reps(n) {
        let Some(f) = factor_hecke_rep(&delta) else { return false };
        if f.matrix() != delta || f.inverse_product() != delta.inverse() {
            return false;
        }
        from_reps.push(f);
    }
    from_reps.sort();
    from_reps == rep_factors(n)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientRow<V> {
    pub n: usize,
    pub lhs: V,
    pub rhs: V,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletReport<V> {
    pub truncation: usize,
    pub rows: Vec<CoefficientRow<V>>,
    pub pass: bool,
}

impl<V> DirichletReport<V> {
    pub fn mismatches(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.equal).map(|r| r.n).collect()
    }
}

/// Compares `Z₊·Z₋·LM_μ` with `Σ (T_n μ)(∞, 0) n^{−s}` coefficient by
/// coefficient.
pub fn verify_dirichlet_identity<M>(mu: &M, truncation: usize) -> Result<DirichletReport<M::V>>
where
    M: PseudoMeasure,
    M::V: RationalAction,
{
    let zz = dirichlet_mul(&z_plus(truncation)?, &z_minus(truncation)?);
    let lhs = dirichlet_mul(&zz, &lm_transform(mu, truncation)?);
    let rows: Vec<CoefficientRow<M::V>> = (1..=truncation)
        .map(|n| {
            let rhs = Hecke::new(mu, n as u64).eval(&P1::infinity(), &P1::int(0));
            let l = lhs.get(n);
            let equal = l == rhs;
            CoefficientRow { n, lhs: l, rhs, equal }
        })
        .collect();
    let pass = rows.iter().all(|r| r.equal);
    Ok(DirichletReport { truncation, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{q, qi};
    use crate::coeff::Poly;
    use crate::measure::ZeroMeasure;
    use crate::modular::{basis_measures, seed_space};

    fn seg(a: &str, b: &str) -> Segment {
        Segment { from: a.parse().unwrap(), to: b.parse().unwrap() }
    }

    /// All reduced matrices with lower row (c, d) and entries in 0..=d.
    fn brute_reduced(c: i64, d: i64) -> Vec<Mat2> {
        let mut out = Vec::new();
        for a in 0..=d {
            for b in 0..=d {
                let g = Mat2::from_i64(a, b, c, d);
                if g.is_unimodular() && is_reduced(&g) {
                    out.push(g);
                }
            }
        }
        out
    }

    #[test]
    fn reduced_pair_examples() {
        let p = reduced_pair(1, 2).unwrap();
        assert_eq!(p.g_minus, Mat2::from_i64(0, 1, 1, 2));
        assert_eq!(p.g_plus, Some(Mat2::from_i64(1, 1, 1, 2)));
        let m = reduced_pair(1, 1).unwrap();
        assert_eq!(m.g_minus, Mat2::from_i64(0, 1, 1, 1));
        assert_eq!(m.g_plus, None);
        let t = reduced_pair(2, 3).unwrap();
        assert_eq!(t.g_minus, Mat2::from_i64(1, 2, 2, 3));
        assert_eq!(t.g_plus, Some(Mat2::from_i64(1, 1, 2, 3)));
        assert!(reduced_pair(2, 4).is_err());
        assert!(reduced_pair(3, 2).is_err());
        assert!(reduced_pair(0, 1).is_err());
    }

    #[test]
    fn reduced_pairs_match_brute_force() {
        for d in 1..=25u64 {
            for c in 1..=d {
                if c.gcd(&d) != 1 || (c == d && c != 1) {
                    continue;
                }
                let brute = brute_reduced(c as i64, d as i64);
                let p = reduced_pair(c, d).unwrap();
                let mut ours = vec![p.g_minus.clone()];
                ours.extend(p.g_plus.clone());
                assert_eq!(brute.len(), ours.len(), "({c},{d})");
                for g in &ours {
                    assert!(brute.contains(g));
                }
                assert_eq!(p.g_minus.det(), Z::from(-1));
                if let Some(g) = &p.g_plus {
                    assert_eq!(g.det(), Z::one());
                }
            }
        }
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = farey_interval_pair(1, 2).unwrap();
        assert_eq!(lo, seg("1/2", "1/3"));
        assert_eq!(hi, seg("1/2", "2/3"));
        let (lo, hi) = farey_interval_pair(1, 1).unwrap();
        assert_eq!(lo, seg("0", "1/2"));
        assert_eq!(hi, seg("1", "1/2"));
        let len = as_q(&lo.from) - as_q(&lo.to);
        assert_eq!(len.abs(), q(1, 2));
        let (lo, _) = farey_interval_pair(1, 2).unwrap();
        assert_eq!((as_q(&lo.from) - as_q(&lo.to)).abs(), q(1, 6));
    }

    #[test]
    fn intervals_and_bijections_up_to_60() {
        let half = q(1, 2);
        for (c, d) in pairs_up_to(60) {
            let pair = reduced_pair(c, d).unwrap();
            let (lo, hi) = farey_interval_pair(c, d).unwrap();
            let (a, b) = (as_q(&lo.from), as_q(&lo.to));
            assert_eq!((a.clone() - b.clone()).abs(), Q::new(Z::one(), Z::from(d * (c + d))));
            assert!(a <= half && b <= half && !a.is_negative() && !b.is_negative());
            assert_eq!(as_q(&hi.from), qi(1) - a);
            assert_eq!(as_q(&hi.to), qi(1) - b);
            // S → L and S → R.
            assert_eq!(interval_pair_index(&lo).unwrap(), (c, d));
            assert_eq!(interval_pair_index(&hi).unwrap(), (c, d));
            let mut back = [interval_matrix(&lo).unwrap(), interval_matrix(&hi).unwrap()];
            back.sort_by_key(|g| g.det());
            assert_eq!(back[0], pair.g_minus);
            assert_eq!(Some(back[1].clone()), pair.g_plus);
        }
    }

    #[test]
    fn intervals_are_covered_by_convergent_pairs() {
        // α with denominator above 2·depth is interior to every enumerated
        // interval, so membership matches its convergent denominators.
        let depth = 12u64;
        for den in [29i64, 31, 37, 41] {
            for num in 1..den {
                let x = q(num, den);
                let mut expected: Vec<(u64, u64)> = consecutive_denominators(&x)
                    .into_iter()
                    .filter(|(a, b)| a < b && *b <= Z::from(depth))
                    .map(|(a, b)| (u64::try_from(a).unwrap(), u64::try_from(b).unwrap()))
                    .collect();
                expected.sort();
                let mut found = Vec::new();
                for (c, d) in pairs_up_to(depth) {
                    let (lo, hi) = farey_interval_pair(c, d).unwrap();
                    if half_open_contains(&lo, &x) || half_open_contains(&hi, &x) {
                        found.push((c, d));
                    }
                }
                assert_eq!(found, expected, "{x}");
            }
        }
    }

    fn counting() -> LevyFunction<Z> {
        LevyFunction::new(Z::zero(), |_| Z::one())
    }

    #[test]
    fn levy_eval_examples() {
        let third = q(1, 3);
        // Depth 2: only the marginal term; 1/3 is the excluded end of I⁻_{1,2}.
        assert_eq!(levy_eval(&counting(), &third, 2), Z::one());
        // Depth 3 adds [1/4, 1/3] and [1/3, 2/5), both starting at 1/3.
        assert_eq!(levy_eval(&counting(), &third, 3), Z::from(3));
        let none = LevyFunction::new(Z::zero(), |_| Z::zero());
        assert_eq!(levy_eval(&none, &third, 10), Z::zero());
    }

    fn cf_defined() -> LevyFunction<Q> {
        LevyFunction::from_denominators(Q::zero(), |side, c, d| {
            let s = if side == Side::Minus { qi(1) } else { qi(-2) };
            s * Q::new(c.clone(), d * d + Z::one())
        })
    }

    #[test]
    fn position_dependent_rule_is_not_periodic() {
        let f = LevyFunction::new(Q::zero(), |s| as_q(&s.from));
        let x = q(2, 7);
        assert_ne!(levy_eval(&f, &x, 10), levy_eval(&f, &(x.clone() + qi(1)), 10));
    }

    #[test]
    fn dirichlet_units_and_shift() {
        let u = FormalDirichletSeries::unit(10, Z::one()).unwrap();
        assert_eq!(dirichlet_mul(&u, &u), u);
        let s = FormalDirichletSeries::from_fn(6, Q::zero(), |n| Q::new(Z::one(), Z::from(n))).unwrap();
        let t = s.shift(2);
        for n in 1..=6 {
            assert_eq!(t.get(n), Q::from_integer(Z::from(n)));
        }
        assert_eq!(s.shift_rational(-1).get(3), q(1, 9));
        let short = FormalDirichletSeries::unit(4, Z::one()).unwrap();
        assert_eq!(dirichlet_mul(&u, &short).truncation(), 4);
        assert!(FormalDirichletSeries::new(0, Z::zero()).is_err());
        let mut v = FormalDirichletSeries::new(3, Z::zero()).unwrap();
        assert!(v.set(4, Z::one()).is_err());
    }

    #[test]
    fn zeta_squared_counts_divisors() {
        let zeta = FormalDirichletSeries::from_fn(30, Z::zero(), |_| Z::one()).unwrap();
        let sq = dirichlet_mul(&zeta, &zeta);
        for n in 1..=30u64 {
            let tau = (1..=n).filter(|d| n % d == 0).count();
            assert_eq!(sq.get(n as usize), Z::from(tau));
        }
    }

    #[test]
    fn z_plus_z_minus_at_two() {
        let zz = dirichlet_mul(&z_plus(5).unwrap(), &z_minus(5).unwrap());
        let expected = GroupRing::element(QMat2::diag(q(1, 2), qi(1))).add(&GroupRing::element(QMat2::diag(qi(1), q(1, 2))));
        assert_eq!(zz.get(2), expected);
        assert_eq!(zz.get(1), GroupRing::one());
    }

    #[test]
    fn lm_small_coefficients() {
        let mu = basis_measures(&seed_space(2)).remove(0);
        let lm = lm_transform(&mu, 4).unwrap();
        let inf = P1::infinity();
        assert_eq!(lm.get(1), mu.eval(&inf, &P1::int(1)).act_q(&QMat2::new(qi(1), qi(-1), qi(0), qi(1))));
        assert_eq!(lm.get(2), mu.eval(&inf, &P1::frac(1, 2)).act_q(&QMat2::new(qi(1), q(-1, 2), qi(0), q(1, 2))));
        let zero = ZeroMeasure(Poly::zero(2));
        assert!(lm_transform(&zero, 10).unwrap().is_zero());
    }

    #[test]
    fn factorization_of_representatives() {
        let four: Vec<RepFactors> = hecke_reps(4).iter().map(|d| factor_hecke_rep(d).unwrap()).collect();
        assert_eq!(four.len(), 7);
        for f in &four {
            assert_eq!(f.d * f.d1 * f.d2, 4);
        }
        for n in 1..=30 {
            assert!(factorization_holds(n), "n = {n}");
        }
    }

    #[test]
    fn dirichlet_identity_at_weight_two() {
        for mu in basis_measures(&seed_space(2)) {
            let r = verify_dirichlet_identity(&mu, 12).unwrap();
            assert!(r.pass, "mismatch at {:?}", r.mismatches());
            assert_eq!(r.rows[0].rhs, mu.eval(&P1::infinity(), &P1::int(0)));
        }
    }

    #[test]
    fn dropping_the_marginal_term_breaks_the_first_coefficient() {
        let mu = basis_measures(&seed_space(2)).remove(0);
        let zz = dirichlet_mul(&z_plus(3).unwrap(), &z_minus(3).unwrap());
        let mut lm = lm_transform(&mu, 3).unwrap();
        lm.set(1, mu.zero()).unwrap();
        let lhs = dirichlet_mul(&zz, &lm);
        assert_ne!(lhs.get(1), mu.eval(&P1::infinity(), &P1::int(0)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn periodic_for_cf_defined_rules(num in 1i64..200, den in 2i64..200, depth in 2u64..25) {
                prop_assume!(num < den);
                let x = q(num, den);
                let f = cf_defined();
                prop_assert_eq!(levy_eval(&f, &x, depth), levy_eval(&f, &(x.clone() + qi(1)), depth));
                prop_assert_eq!(levy_eval(&f, &x, depth), levy_eval(&f, &(x - qi(3)), depth));
            }

            #[test]
            fn classical_route_agrees_off_endpoints(num in 1i64..400, depth in 2u64..15) {
                let den = 401i64;
                let x = q(num, den);
                let f = cf_defined();
                prop_assert_eq!(levy_eval(&f, &x, depth), levy_eval_classical(&f, &x, depth));
            }

            #[test]
            fn dirichlet_product_is_associative(
                a in prop::collection::vec(-3i64..4, 12),
                b in prop::collection::vec(-3i64..4, 12),
                c in prop::collection::vec(-3i64..4, 12),
            ) {
                let s = |v: &Vec<i64>| FormalDirichletSeries::from_fn(12, Z::zero(), |n| Z::from(v[n - 1])).unwrap();
                let (a, b, c) = (s(&a), s(&b), s(&c));
                prop_assert_eq!(dirichlet_mul(&dirichlet_mul(&a, &b), &c), dirichlet_mul(&a, &dirichlet_mul(&b, &c)));
                prop_assert_eq!(dirichlet_mul(&a, &b), dirichlet_mul(&b, &a));
            }
        }
    }
}
