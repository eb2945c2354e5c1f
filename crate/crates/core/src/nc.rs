//! Pseudo-measures with values in non-commutative groups: free groups,
//! truncated tensor algebras, modular measures from a seed, cocycles, and
//! iterated integrals of step forms.
//!
//! Chain products are ordered right to left: along `α₁ → α₂ → … → α_{n+1}`
//! the value is `J(α_n, α_{n+1}) ··· J(α₁, α₂)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::boundary::{Mat2, P1, Q, Z};
use crate::coeff::UPoly;
use crate::error::{Error, Result};
use crate::farey::{primitive_chain, Segment};
use crate::linalg::Matrix;
use crate::measure::{farey_triangles, Bounds, Group, PseudoMeasure, Report};

/// Multiplicatively written group; the identity comes from context.
pub trait NcGroup: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn mul(&self, other: &Self) -> Self;
    fn inv(&self) -> Self;
    fn is_identity(&self) -> bool;
}

/// Reduced word in a free group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreeWord<G> {
    /// Letters with exponent ±1, no adjacent cancelling pair.
    letters: Vec<(G, i8)>,
}

impl<G: Clone + Eq> FreeWord<G> {
    pub fn one() -> Self {
        FreeWord { letters: Vec::new() }
    }

    pub fn generator(g: G) -> Self {
        FreeWord { letters: vec![(g, 1)] }
    }

    pub fn letters(&self) -> &[(G, i8)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Applies a substitution of generators.
    pub fn map<H: Clone + Eq>(&self, f: impl Fn(&G) -> H) -> FreeWord<H> {
        self.letters.iter().fold(FreeWord::one(), |acc, (g, e)| {
            let x = FreeWord::generator(f(g));
            acc.times(&if *e > 0 { x } else { x.inverse() })
        })
    }

    fn times(&self, o: &Self) -> Self {
        let mut out = self.letters.clone();
        for (g, e) in &o.letters {
            match out.last() {
                Some((h, f)) if h == g && *f == -*e => {
                    out.pop();
                }
                _ => out.push((g.clone(), *e)),
            }
        }
        FreeWord { letters: out }
    }

    fn inverse(&self) -> Self {
        FreeWord { letters: self.letters.iter().rev().map(|(g, e)| (g.clone(), -e)).collect() }
    }
}

impl<G: Clone + Eq + fmt::Debug + Send + Sync> NcGroup for FreeWord<G> {
    fn mul(&self, o: &Self) -> Self {
        self.times(o)
    }
    fn inv(&self) -> Self {
        self.inverse()
    }
    fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }
}

impl<G: fmt::Display> fmt::Display for FreeWord<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (g, e) in &self.letters {
            write!(f, "<{g}>")?;
            if *e < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// An abelian group written multiplicatively.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Additive<V>(pub V);

impl<V: Group> NcGroup for Additive<V> {
    fn mul(&self, o: &Self) -> Self {
        Additive(self.0.add(&o.0))
    }
    fn inv(&self) -> Self {
        Additive(self.0.neg())
    }
    fn is_identity(&self) -> bool {
        self.0.vanishes()
    }
}

/// The opposite group: `a ∘ b = b·a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Opposite<U>(pub U);

impl<U: NcGroup> NcGroup for Opposite<U> {
    fn mul(&self, o: &Self) -> Self {
        Opposite(o.0.mul(&self.0))
    }
    fn inv(&self) -> Self {
        Opposite(self.0.inv())
    }
    fn is_identity(&self) -> bool {
        self.0.is_identity()
    }
}

/// Element of the tensor algebra on `dim` generators modulo degree
/// `order + 1`, as a map from words to coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncatedTensor {
    dim: usize,
    order: usize,
    coeffs: BTreeMap<Vec<usize>, Q>,
}

/// All words of length `n` over `dim` letters, in lexicographic order.
pub fn words(dim: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|w| (0..dim).map(move |i| [w.clone(), vec![i]].concat())).collect();
    }
    out
}

/// Shuffles of two words, with multiplicity.
pub fn shuffles(u: &[usize], v: &[usize]) -> Vec<Vec<usize>> {
    if u.is_empty() {
        return vec![v.to_vec()];
    }
    if v.is_empty() {
        return vec![u.to_vec()];
    }
    let mut out: Vec<Vec<usize>> = shuffles(&u[1..], v).into_iter().map(|w| [&u[..1], &w[..]].concat()).collect();
    out.extend(shuffles(u, &v[1..]).into_iter().map(|w| [&v[..1], &w[..]].concat()));
    out
}

impl TruncatedTensor {
    pub fn zero(dim: usize, order: usize) -> Self {
        TruncatedTensor { dim, order, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, order: usize, c: Q) -> Self {
        let mut t = TruncatedTensor::zero(dim, order);
        t.set(Vec::new(), c);
        t
    }

    pub fn one(dim: usize, order: usize) -> Self {
        TruncatedTensor::scalar(dim, order, Q::one())
    }

    /// `Σ v_i e_i`.
    pub fn linear(order: usize, v: &[Q]) -> Self {
        let mut t = TruncatedTensor::zero(v.len(), order);
        for (i, c) in v.iter().enumerate() {
            t.set(vec![i], c.clone());
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, w: &[usize]) -> Q {
        self.coeffs.get(w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, w: Vec<usize>, c: Q) {
        assert!(w.len() <= self.order && w.iter().all(|&i| i < self.dim), "word outside the truncation");
        if c.is_zero() {
            self.coeffs.remove(&w);
        } else {
            self.coeffs.insert(w, c);
        }
    }

    /// Non-zero coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Q)> {
        self.coeffs.iter()
    }

    /// Degree-n component as a dense list over [`words`]`(dim, n)`.
    pub fn degree(&self, n: usize) -> Vec<Q> {
        words(self.dim, n).iter().map(|w| self.coeff(w)).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &o.coeffs {
            let v = out.coeff(w) + c;
            out.set(w.clone(), v);
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = TruncatedTensor::zero(self.dim, self.order);
        for (w, x) in &self.coeffs {
            out.set(w.clone(), x * c);
        }
        out
    }

    pub fn product(&self, o: &Self) -> Self {
        assert_eq!((self.dim, self.order), (o.dim, o.order), "incompatible tensors");
        let mut acc: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (u, x) in &self.coeffs {
            for (v, y) in &o.coeffs {
                if u.len() + v.len() > self.order {
                    continue;
                }
                *acc.entry([&u[..], &v[..]].concat()).or_insert_with(Q::zero) += x * y;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        TruncatedTensor { dim: self.dim, order: self.order, coeffs: acc }
    }

    /// Inverse of an element with non-zero constant term.
    pub fn inverse(&self) -> Self {
        let c0 = self.coeff(&[]);
        assert!(!c0.is_zero(), "constant term must be invertible");
        let inv0 = c0.recip();
        // x = c0 (1 + y), x⁻¹ = c0⁻¹ Σ (−y)^j.
        let mut y = self.scale(&inv0);
        y.set(Vec::new(), Q::zero());
        let neg_y = y.scale(&-Q::one());
        let mut term = TruncatedTensor::one(self.dim, self.order);
        let mut sum = term.clone();
        for _ in 0..self.order {
            term = term.product(&neg_y);
            sum = sum.add(&term);
        }
        sum.scale(&inv0)
    }

    /// `exp(x)` for x without constant term.
    pub fn exp(x: &Self) -> Self {
        assert!(x.coeff(&[]).is_zero(), "exp needs a nilpotent argument");
        let mut term = TruncatedTensor::one(x.dim, x.order);
        let mut sum = term.clone();
        for j in 1..=x.order {
            term = term.product(x).scale(&Q::new(Z::one(), Z::from(j)));
            sum = sum.add(&term);
        }
        sum
    }

    /// Image under the algebra map induced by a linear map of generators;
    /// column j of `rho` is the image of `e_j`.
    pub fn act_linear(&self, rho: &Matrix) -> Self {
        let mut out = TruncatedTensor::zero(self.dim, self.order);
        for (w, c) in &self.coeffs {
            let mut partial: Vec<(Vec<usize>, Q)> = vec![(Vec::new(), c.clone())];
            for &letter in w {
                let mut next = Vec::new();
                for (prefix, x) in &partial {
                    for (i, row) in rho.iter().enumerate() {
                        if !row[letter].is_zero() {
                            next.push(([&prefix[..], &[i]].concat(), x * &row[letter]));
                        }
                    }
                }
                partial = next;
            }
            for (word, x) in partial {
                let v = out.coeff(&word) + x;
                out.set(word, v);
            }
        }
        out
    }

    /// Shuffle relations `c(u)·c(v) = Σ_{w ∈ u ⧢ v} c(w)` for non-empty words
    /// with `|u| + |v| ≤ max_total`, and constant term 1.
    pub fn shuffle_report(&self, max_total: usize) -> Report {
        if !self.coeff(&[]).is_one() {
            return Report::fail(0, "constant term is not 1".into());
        }
        let mut checked = 0;
        for total in 2..=max_total.min(self.order) {
            for lu in 1..total {
                for u in words(self.dim, lu) {
                    for v in words(self.dim, total - lu) {
                        let lhs = self.coeff(&u) * self.coeff(&v);
                        let rhs: Q = shuffles(&u, &v).iter().map(|w| self.coeff(w)).sum();
                        if lhs != rhs {
                            return Report::fail(checked, format!("{u:?} ⧢ {v:?}"));
                        }
                        checked += 1;
                    }
                }
            }
        }
        Report::ok(checked)
    }
}

impl NcGroup for TruncatedTensor {
    fn mul(&self, o: &Self) -> Self {
        self.product(o)
    }
    fn inv(&self) -> Self {
        self.inverse()
    }
    fn is_identity(&self) -> bool {
        self.coeffs.len() == 1 && self.coeff(&[]).is_one()
    }
}

/// A group-valued pre-measure, extended along chains.
pub trait NcPseudoMeasure: Send + Sync {
    type U: NcGroup;

    fn one(&self) -> Self::U;

    /// `J(s.from, s.to)` on a primitive segment.
    fn premeasure(&self, s: &Segment) -> Self::U;

    /// Product along a chain, later segments on the left.
    fn eval_chain(&self, chain: &[Segment]) -> Self::U {
        chain.iter().fold(self.one(), |acc, s| self.premeasure(s).mul(&acc))
    }

    fn eval(&self, a: &P1, b: &P1) -> Self::U {
        self.eval_chain(&primitive_chain(a, b))
    }
}

impl<J: NcPseudoMeasure + ?Sized> NcPseudoMeasure for &J {
    type U = J::U;
    fn one(&self) -> J::U {
        (**self).one()
    }
    fn premeasure(&self, s: &Segment) -> J::U {
        (**self).premeasure(s)
    }
    fn eval(&self, a: &P1, b: &P1) -> J::U {
        (**self).eval(a, b)
    }
}

impl<J: NcPseudoMeasure + ?Sized> NcPseudoMeasure for Arc<J> {
    type U = J::U;
    fn one(&self) -> J::U {
        (**self).one()
    }
    fn premeasure(&self, s: &Segment) -> J::U {
        (**self).premeasure(s)
    }
    fn eval(&self, a: &P1, b: &P1) -> J::U {
        (**self).eval(a, b)
    }
}

/// `J(a, b)`.
pub fn nc_evaluate<J: NcPseudoMeasure>(j: &J, a: &P1, b: &P1) -> J::U {
    j.eval(a, b)
}

/// Pre-measure given by a closure.
pub struct NcRule<U, F> {
    one: U,
    rule: F,
}

impl<U: NcGroup, F: Fn(&Segment) -> U + Send + Sync> NcRule<U, F> {
    pub fn new(one: U, rule: F) -> Self {
        NcRule { one, rule }
    }
}

impl<U: NcGroup, F: Fn(&Segment) -> U + Send + Sync> NcPseudoMeasure for NcRule<U, F> {
    type U = U;
    fn one(&self) -> U {
        self.one.clone()
    }
    fn premeasure(&self, s: &Segment) -> U {
        (self.rule)(s)
    }
}

/// `(α, β) ↦ ⟨β⟩⟨α⟩⁻¹` with `⟨∞⟩ = 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NcUniversal;

fn bracket(x: &P1) -> FreeWord<Q> {
    x.to_q().map_or_else(FreeWord::one, FreeWord::generator)
}

impl NcPseudoMeasure for NcUniversal {
    type U = FreeWord<Q>;
    fn one(&self) -> FreeWord<Q> {
        FreeWord::one()
    }
    fn premeasure(&self, s: &Segment) -> FreeWord<Q> {
        self.eval(&s.from, &s.to)
    }
    fn eval(&self, a: &P1, b: &P1) -> FreeWord<Q> {
        bracket(b).mul(&bracket(a).inv())
    }
}

/// A commutative measure viewed multiplicatively.
pub struct Abelian<M>(pub M);

impl<M: PseudoMeasure> NcPseudoMeasure for Abelian<M> {
    type U = Additive<M::V>;
    fn one(&self) -> Self::U {
        Additive(self.0.zero())
    }
    fn premeasure(&self, s: &Segment) -> Self::U {
        Additive(self.0.premeasure(s))
    }
}

/// Pointwise inverse `J(α, β)⁻¹`, a measure with values in the opposite
/// group.
pub struct PointwiseInverse<J>(pub J);

impl<J: NcPseudoMeasure> NcPseudoMeasure for PointwiseInverse<J> {
    type U = Opposite<J::U>;
    fn one(&self) -> Self::U {
        Opposite(self.0.one())
    }
    fn premeasure(&self, s: &Segment) -> Self::U {
        Opposite(self.0.premeasure(s).inv())
    }
}

/// Checks `J(x, y) J(y, x) = 1` and the closure `J(z, x) J(y, z) J(x, y) = 1`
/// on every Farey triangle within the bounds.
pub fn nc_validate<J: NcPseudoMeasure>(j: &J, bounds: &Bounds) -> Report {
    let mut checked = 0;
    for [x, y, z] in farey_triangles(bounds) {
        let seg = |a: &P1, b: &P1| j.premeasure(&Segment { from: a.clone(), to: b.clone() });
        for (a, b) in [(&x, &y), (&y, &z), (&z, &x)] {
            if !seg(a, b).mul(&seg(b, a)).is_identity() {
                return Report::fail(checked, format!("inverse relation fails on ({a}, {b})"));
            }
        }
        if !seg(&z, &x).mul(&seg(&y, &z)).mul(&seg(&x, &y)).is_identity() {
            return Report::fail(checked, format!("triangle ({x}, {y}, {z}) does not close"));
        }
        checked += 1;
    }
    Report::ok(checked)
}

/// `R(p+q, q)·R(p, p+q) = R(p, q)` for coprime `p, q ≥ 1`, `p + q ≤ bound`.
pub fn nc_reciprocity_validate<U: NcGroup>(r: impl Fn(&Z, &Z) -> U, bound: u64) -> bool {
    use num_integer::Integer;
    (2..=bound).all(|s| {
        (1..s).filter(|p| p.gcd(&(s - p)) == 1).all(|p| {
            let (p, q) = (Z::from(p), Z::from(s - p));
            let t = &p + &q;
            r(&t, &q).mul(&r(&p, &t)) == r(&p, &q)
        })
    })
}

/// `R_n(p, q) = J(n + a/p, n + b/q)` with `[a/p, b/q]` the segment of `(p, q)`.
pub fn nc_reciprocity_from_measure<J: NcPseudoMeasure>(j: &J, n: i64) -> impl Fn(&Z, &Z) -> J::U + '_ {
    let shift = Q::from_integer(Z::from(n));
    move |p, q| {
        let s = crate::dedekind::segment_of_pair(p, q).expect("coprime positive pair");
        let t = |x: &P1| P1::from_q(&(x.to_q().expect("finite") + &shift));
        j.premeasure(&Segment { from: t(&s.from), to: t(&s.to) })
    }
}

/// A left action of SL(2,Z) on a group by automorphisms.
pub type NcAction<U> = Arc<dyn Fn(&U, &Mat2) -> U + Send + Sync>;

/// `(σ[u]·u, τ²[u]·τ[u]·u)`.
pub fn seed_obstruction<U: NcGroup>(u: &U, act: &NcAction<U>) -> (U, U) {
    let (s, t) = (Mat2::sigma(), Mat2::tau());
    let first = act(u, &s).mul(u);
    let second = act(u, &t.mul(&t)).mul(&act(u, &t)).mul(u);
    (first, second)
}

/// The modular measure with `J(g∞, g0) = g[u]`.
#[derive(Clone)]
pub struct NcFromSeed<U> {
    u: U,
    one: U,
    act: NcAction<U>,
}

impl<U: NcGroup> NcFromSeed<U> {
    pub fn seed(&self) -> &U {
        &self.u
    }

    pub fn action(&self) -> &NcAction<U> {
        &self.act
    }
}

impl<U: NcGroup> NcPseudoMeasure for NcFromSeed<U> {
    type U = U;
    fn one(&self) -> U {
        self.one.clone()
    }
    fn premeasure(&self, s: &Segment) -> U {
        (self.act)(&self.u, &s.matrix())
    }
}

pub fn nc_from_seed<U: NcGroup>(u: U, act: NcAction<U>) -> Result<NcFromSeed<U>> {
    if act(&u, &Mat2::identity().neg()) != u {
        return Err(Error::SeedInvariant("seed is not fixed by −1".into()));
    }
    let (a, b) = seed_obstruction(&u, &act);
    if !a.is_identity() {
        return Err(Error::SeedInvariant("σ[u]·u ≠ 1".into()));
    }
    if !b.is_identity() {
        return Err(Error::SeedInvariant("τ²[u]·τ[u]·u ≠ 1".into()));
    }
    let one = u.mul(&u.inv());
    Ok(NcFromSeed { u, one, act })
}

/// `J(gα, gβ) = g[J(α, β)]` on Farey-triangle edges within the bounds.
pub fn nc_modularity_check<J: NcPseudoMeasure>(j: &J, act: &NcAction<J::U>, gens: &[Mat2], bounds: &Bounds) -> Report {
    let mut checked = 0;
    for tri in farey_triangles(bounds) {
        for k in 0..3 {
            let (a, b) = (&tri[k], &tri[(k + 1) % 3]);
            let v = j.eval(a, b);
            for g in gens {
                if j.eval(&g.act(a), &g.act(b)) != act(&v, g) {
                    return Report::fail(checked, format!("fails for g = {g} on ({a}, {b})"));
                }
                checked += 1;
            }
        }
    }
    Report::ok(checked)
}

/// `c_α(g) = J(gα, α)`.
pub fn nc_cocycle<J: NcPseudoMeasure>(j: &J, alpha: &P1, g: &Mat2) -> J::U {
    j.eval(&g.act(alpha), alpha)
}

/// `c_α(gh) = c_α(g)·g[c_α(h)]` for all ordered pairs from `elements`.
pub fn nc_cocycle_check<J: NcPseudoMeasure>(j: &J, act: &NcAction<J::U>, alpha: &P1, elements: &[Mat2]) -> Report {
    let mut checked = 0;
    for g in elements {
        for h in elements {
            let lhs = nc_cocycle(j, alpha, &g.mul(h));
            let rhs = nc_cocycle(j, alpha, g).mul(&act(&nc_cocycle(j, alpha, h), g));
            if lhs != rhs {
                return Report::fail(checked, format!("g = {g}, h = {h}"));
            }
            checked += 1;
        }
    }
    Report::ok(checked)
}

/// `c_β(g) = J(α, β)·c_α(g)·(g[J(α, β)])⁻¹`.
pub fn nc_base_change_check<J: NcPseudoMeasure>(j: &J, act: &NcAction<J::U>, alpha: &P1, beta: &P1, elements: &[Mat2]) -> Report {
    let jab = j.eval(alpha, beta);
    let mut checked = 0;
    for g in elements {
        let rhs = jab.mul(&nc_cocycle(j, alpha, g)).mul(&act(&jab, g).inv());
        if nc_cocycle(j, beta, g) != rhs {
            return Report::fail(checked, format!("g = {g}"));
        }
        checked += 1;
    }
    Report::ok(checked)
}

/// Step function: `values[i]` on `[breaks[i], breaks[i+1])`, zero outside.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepForm {
    #[serde(with = "q_vec")]
    pub breaks: Vec<Q>,
    #[serde(with = "q_vec")]
    pub values: Vec<Q>,
}

mod q_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(crate::boundary::fmt_q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter().map(|s| crate::boundary::parse_q(s).map_err(serde::de::Error::custom)).collect()
    }
}

impl StepForm {
    pub fn new(breaks: Vec<Q>, values: Vec<Q>) -> Result<StepForm> {
        if breaks.len() != values.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("step form needs increasing breaks and one value per piece".into()));
        }
        Ok(StepForm { breaks, values })
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: Q, hi: Q) -> Result<StepForm> {
        StepForm::new(vec![lo, hi], vec![Q::one()])
    }

    /// Value on the open piece containing x (breakpoints are measure zero).
    pub fn value_at(&self, x: &Q) -> Q {
        for (i, v) in self.values.iter().enumerate() {
            if &self.breaks[i] <= x && x < &self.breaks[i + 1] {
                return v.clone();
            }
        }
        Q::zero()
    }

    pub fn support_min(&self) -> Q {
        self.breaks[0].clone()
    }
}

/// Continuous piecewise polynomial on `[points[0], points.last()]`.
struct Piecewise {
    points: Vec<Q>,
    pieces: Vec<UPoly>,
}

fn antiderivative(p: &UPoly) -> UPoly {
    let mut c = vec![Q::zero()];
    c.extend(p.coeffs().iter().enumerate().map(|(j, x)| x / Q::from_integer(Z::from(j + 1))));
    UPoly::new(c)
}

impl Piecewise {
    fn constant(a: &Q, b: &Q) -> Piecewise {
        Piecewise { points: vec![a.clone(), b.clone()], pieces: vec![UPoly::one()] }
    }

    /// `t ↦ ∫_a^t f(z)·self(z) dz`.
    fn integrate_against(&self, f: &StepForm) -> Piecewise {
        let (a, b) = (self.points[0].clone(), self.points.last().unwrap().clone());
        let mut points: Vec<Q> = self.points.clone();
        points.extend(f.breaks.iter().filter(|x| **x > a && **x < b).cloned());
        points.sort();
        points.dedup();
        let mut pieces = Vec::new();
        let mut acc = Q::zero();
        for w in points.windows(2) {
            let mid = (&w[0] + &w[1]) / Q::from_integer(Z::from(2));
            let base = self.piece_at(&mid);
            let h = antiderivative(&base.scale(&f.value_at(&mid)));
            // G(t) = acc + H(t) − H(w0) on this piece.
            let shift = &acc - h.eval(&w[0]);
            let g = h.add(&UPoly::constant(shift));
            acc = g.eval(&w[1]);
            pieces.push(g);
        }
        Piecewise { points, pieces }
    }

    fn piece_at(&self, x: &Q) -> &UPoly {
        let i = self.points.windows(2).position(|w| &w[0] <= x && x <= &w[1]).expect("inside the domain");
        &self.pieces[i]
    }

    fn eval(&self, x: &Q) -> Q {
        self.piece_at(x).eval(x)
    }
}

/// `∫_{b > z₁ > … > z_n > a} f₁(z₁)···f_n(z_n)`, with `f₁` outermost.
pub fn iterated_integral(a: &Q, b: &Q, forms: &[StepForm]) -> Result<Q> {
    if a >= b {
        return Err(Error::Domain(format!("need a < b, got {a} and {b}")));
    }
    if forms.is_empty() {
        return Ok(Q::one());
    }
    let mut g = Piecewise::constant(a, b);
    for f in forms.iter().rev() {
        g = g.integrate_against(f);
    }
    Ok(g.eval(b))
}

/// [`iterated_integral`] with indicator integrands.
pub fn iterated_step_integral(a: &Q, b: &Q, intervals: &[(Q, Q)]) -> Result<Q> {
    let forms = intervals.iter().map(|(lo, hi)| StepForm::indicator(lo.clone(), hi.clone())).collect::<Result<Vec<_>>>()?;
    iterated_integral(a, b, &forms)
}

/// `J(α, β) = 1 + Σ_n Σ_w J(n)(f_w) e_w` over the given step forms, truncated
/// at the given order. The point ∞ stands for a point left of every support.
#[derive(Clone, Debug)]
pub struct IteratedMeasure {
    forms: Vec<StepForm>,
    order: usize,
    left: Q,
}

pub fn iterated_measure(forms: Vec<StepForm>, order: usize) -> Result<IteratedMeasure> {
    if order == 0 || forms.is_empty() {
        return Err(Error::Domain("need order ≥ 1 and at least one form".into()));
    }
    let left = forms.iter().map(StepForm::support_min).min().unwrap() - Q::one();
    Ok(IteratedMeasure { forms, order, left })
}

impl IteratedMeasure {
    pub fn forms(&self) -> &[StepForm] {
        &self.forms
    }

    fn point(&self, x: &P1) -> Q {
        x.to_q().unwrap_or_else(|| self.left.clone())
    }

    fn forward(&self, a: &Q, b: &Q) -> TruncatedTensor {
        let dim = self.forms.len();
        let mut t = TruncatedTensor::one(dim, self.order);
        for n in 1..=self.order {
            for w in words(dim, n) {
                let fs: Vec<StepForm> = w.iter().map(|&i| self.forms[i].clone()).collect();
                let v = iterated_integral(a, b, &fs).expect("a < b");
                t.set(w, v);
            }
        }
        t
    }

    /// Value between arbitrary points, computed directly.
    pub fn direct(&self, a: &P1, b: &P1) -> TruncatedTensor {
        let (x, y) = (self.point(a), self.point(b));
        match x.cmp(&y) {
            std::cmp::Ordering::Less => self.forward(&x, &y),
            std::cmp::Ordering::Greater => self.forward(&y, &x).inverse(),
            std::cmp::Ordering::Equal => TruncatedTensor::one(self.forms.len(), self.order),
        }
    }
}

impl NcPseudoMeasure for IteratedMeasure {
    type U = TruncatedTensor;
    fn one(&self) -> TruncatedTensor {
        TruncatedTensor::one(self.forms.len(), self.order)
    }
    fn premeasure(&self, s: &Segment) -> TruncatedTensor {
        self.direct(&s.from, &s.to)
    }
}

/// Step form with one to three pieces, breaks in `[-12, 12]` with
/// denominators below 5 and small rational values.
pub fn random_step_form<R: rand::Rng>(rng: &mut R) -> StepForm {
    let k = rng.gen_range(1..4);
    let mut breaks: Vec<Q> = (0..=k).map(|_| Q::new(Z::from(rng.gen_range(-12..13)), Z::from(rng.gen_range(1..5)))).collect();
    breaks.sort();
    breaks.dedup();
    if breaks.len() < 2 {
        breaks.push(breaks[0].clone() + Q::one());
    }
    let values = (0..breaks.len() - 1).map(|_| Q::new(Z::from(rng.gen_range(-4..5)), Z::from(rng.gen_range(1..4)))).collect();
    StepForm::new(breaks, values).expect("sorted distinct breaks")
}
