//! The PSL(2,Z) Gauss shift, its coset-tracking extension, the associated
//! shift space, and limiting pseudo-measures along periodic continued
//! fractions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::boundary::{fmt_q, ContinuedFraction, Mat2, P1, Q, Z};
use crate::coeff::{CosetTable, Induced, Trivial};
use crate::error::{Error, Result};
use crate::farey::Segment;
use crate::linalg;
use crate::measure::{Group, PseudoMeasure};
use crate::modular::{from_seed, FromSeed};
use crate::quadratic::{ln_big, Lyapunov, PeriodicCF, QuadSurd};
use crate::tree::{end_paths, BoundaryPoint, Current, TreeEdge};

/// `x ↦ −sign(x)(1/|x| − ⌊1/|x|⌋)`; `None` once the orbit reaches 0.
pub fn gauss_shift(x: &Q) -> Result<Option<Q>> {
    Ok(gauss_step(x)?.map(|(_, y)| y))
}

/// Signed digit `sign(x)·⌊1/|x|⌋` and the image of `x`.
pub fn gauss_step(x: &Q) -> Result<Option<(i64, Q)>> {
    if x.abs() > Q::one() {
        return Err(Error::Domain(format!("{} is outside [-1, 1]", fmt_q(x))));
    }
    if x.is_zero() {
        return Ok(None);
    }
    let y = x.abs().recip();
    let n = y.floor();
    let frac = &y - &n;
    let n = n.to_integer().to_i64().ok_or_else(|| Error::Limit("partial quotient overflows i64".into()))?;
    let s: i64 = if x.is_positive() { 1 } else { -1 };
    Ok(Some((s * n, if s > 0 { -frac } else { frac })))
}

/// The same step on a quadratic irrational of absolute value below 1.
pub fn gauss_step_surd(x: &QuadSurd) -> Result<(i64, QuadSurd)> {
    if x.is_rational() {
        return Err(Error::Domain("orbit point must be irrational".into()));
    }
    let s = x.signum();
    let y = x.abs().inv()?;
    let n = y.floor();
    let frac = y.sub(&QuadSurd::rational(Q::from_integer(n.clone())));
    let n = n.to_i64().ok_or_else(|| Error::Limit("partial quotient overflows i64".into()))?;
    Ok((i64::from(s) * n, if s > 0 { frac.neg() } else { frac }))
}

/// `S·T^k`.
pub fn letter_matrix(k: i64) -> Mat2 {
    Mat2::sigma().mul(&Mat2::translation(k))
}

/// Letter of the shift alphabet `Z^× × P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ShiftLetter {
    pub x: i64,
    pub s: usize,
}

impl ShiftLetter {
    pub fn new(x: i64, s: usize) -> Result<ShiftLetter> {
        if x == 0 {
            return Err(Error::Domain("shift letters have nonzero digit".into()));
        }
        Ok(ShiftLetter { x, s })
    }
}

/// Right action of the letters `S·T^k` on the cosets of a finite-index
/// subgroup, memoized.
pub struct ShiftSpace {
    table: Arc<CosetTable>,
    cache: Mutex<HashMap<(usize, i64), usize>>,
}

impl ShiftSpace {
    pub fn new(table: Arc<CosetTable>) -> ShiftSpace {
        ShiftSpace { table, cache: Mutex::new(HashMap::new()) }
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.table
    }

    /// `τ_k(s) = [g·S·T^k]` for `s = Γg`.
    pub fn tau(&self, s: usize, k: i64) -> usize {
        if let Some(&t) = self.cache.lock().expect("cache lock").get(&(s, k)) {
            return t;
        }
        let g = self.table.reps()[s].mul(&letter_matrix(k));
        let t = self.table.locate(&g).expect("complete coset table").0;
        self.cache.lock().expect("cache lock").insert((s, k), t);
        t
    }

    /// One step of the generalized shift on a rational point.
    pub fn generalized_shift(&self, x: &Q, s: usize) -> Result<Option<(Q, usize)>> {
        Ok(gauss_step(x)?.map(|(k, y)| (y, self.tau(s, k))))
    }

    pub fn generalized_shift_surd(&self, x: &QuadSurd, s: usize) -> Result<(QuadSurd, usize)> {
        let (k, y) = gauss_step_surd(x)?;
        Ok((y, self.tau(s, k)))
    }

    /// 1 iff the digits alternate in sign and `s_b = τ_{x_a}(s_a)`.
    pub fn admissible(&self, a: &ShiftLetter, b: &ShiftLetter) -> u8 {
        u8::from(a.x.signum() * b.x.signum() < 0 && b.s == self.tau(a.s, a.x))
    }

    /// The variant written with the coset condition `s_a = s_b·S·T^{x_b}`.
    pub fn admissible_alias(&self, a: &ShiftLetter, b: &ShiftLetter) -> u8 {
        u8::from(a.x.signum() * b.x.signum() < 0 && a.s == self.tau(b.s, b.x))
    }

    /// Letters `b` with `|x_b| ≤ bound` such that every `x ∈ X` admits `b`
    /// and no `y ∈ Y` does.
    pub fn separating_letters(&self, xs: &[ShiftLetter], ys: &[ShiftLetter], bound: i64) -> Vec<ShiftLetter> {
        let mut out = Vec::new();
        for x in (-bound..=bound).filter(|&x| x != 0) {
            for s in 0..self.table.index() {
                let b = ShiftLetter { x, s };
                if xs.iter().all(|a| self.admissible(a, &b) == 1) && ys.iter().all(|a| self.admissible(a, &b) == 0) {
                    out.push(b);
                }
            }
        }
        out
    }
}

/// `Π_{i=1}^{k} S·T^{k_i}` along the orbit of `x`, the matrix through
/// which the k-th iterate acts on cosets.
pub fn iterate_matrix(x: &Q, k: usize) -> Result<Mat2> {
    let mut g = Mat2::identity();
    let mut y = x.clone();
    for i in 0..k {
        let (d, next) = gauss_step(&y)?.ok_or_else(|| Error::Domain(format!("orbit of {} ends after {i} steps", fmt_q(x))))?;
        g = g.mul(&letter_matrix(d));
        y = next;
    }
    Ok(g.psl_canonical())
}

/// The same matrix from the convergents `p_j/q_j` of `|x|`:
/// `(−sign(x) p_{k−1}, (−1)^k p_k; q_{k−1}, sign(x)(−1)^{k+1} q_k)`.
pub fn iterate_matrix_closed(x: &Q, k: usize) -> Result<Mat2> {
    if x.is_zero() || x.abs() > Q::one() {
        return Err(Error::Domain(format!("{} is not a nonzero point of [-1, 1]", fmt_q(x))));
    }
    let cf = ContinuedFraction::expand(&x.abs());
    if k == 0 || k > cf.partials.len() {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ {}", cf.partials.len())));
    }
    let pq = cf.convergent_pairs();
    let (p1, q1) = &pq[k];
    let (p, qk) = &pq[k + 1];
    let s = if x.is_positive() { Z::one() } else { -Z::one() };
    let alt = if k % 2 == 0 { Z::one() } else { -Z::one() };
    Ok(Mat2::new(-&s * p1, &alt * p, q1.clone(), -(s * alt) * qk).psl_canonical())
}

/// The matrices `g_k`, k = −1, 0, 1, …, with `g_k(∞) = p_k/q_k` and
/// `g_k(0) = p_{k+1}/q_{k+1}` for the convergents of θ.
struct Convergents<'a> {
    theta: &'a PeriodicCF,
    j: usize,
    prev: (Z, Z),
    cur: (Z, Z),
}

impl<'a> Convergents<'a> {
    fn new(theta: &'a PeriodicCF) -> Self {
        Convergents { theta, j: 0, prev: (Z::one(), Z::zero()), cur: (Z::from(theta.digit(0)), Z::one()) }
    }
}

impl Iterator for Convergents<'_> {
    type Item = Mat2;
    fn next(&mut self) -> Option<Mat2> {
        let g = if self.j % 2 == 0 {
            Mat2::new(self.prev.0.clone(), self.cur.0.clone(), self.prev.1.clone(), self.cur.1.clone())
        } else {
            Mat2::new(self.prev.0.clone(), -&self.cur.0, self.prev.1.clone(), -&self.cur.1)
        };
        self.j += 1;
        let a = Z::from(self.theta.digit(self.j));
        let next = (&a * &self.cur.0 + &self.prev.0, &a * &self.cur.1 + &self.prev.1);
        self.prev = std::mem::replace(&mut self.cur, next);
        Some(g)
    }
}

/// `g_{−1}, …, g_{n−2}` for θ.
pub fn convergent_matrices(theta: &PeriodicCF, n: usize) -> Vec<Mat2> {
    Convergents::new(theta).take(n).collect()
}

/// A Γ-modular measure with values in the permutation module `Q^P`:
/// `μ(g∞, g0)(i) = ω([r_i g])`.
pub struct CosetModule {
    table: Arc<CosetTable>,
    seed: Vec<Q>,
    measure: FromSeed<Induced<Trivial<Q>>>,
}

impl CosetModule {
    pub fn new(table: Arc<CosetTable>, seed: Vec<Q>) -> Result<CosetModule> {
        let omega = Induced::wrap(table.clone(), seed.iter().cloned().map(Trivial).collect())?;
        let measure = from_seed(omega)?;
        Ok(CosetModule { table, seed, measure })
    }

    /// Basis of the seeds: vectors in `Q^P` killed by `1 + σ` and `1 + τ + τ²`.
    pub fn seed_basis(table: &CosetTable) -> Vec<Vec<Q>> {
        let k = table.index();
        let (s, t) = (table.sigma_perm(), table.tau_perm());
        let mut rows = vec![vec![Q::zero(); k]; 2 * k];
        // (gω)(i) = ω(i·g), so (1 + σ)ω has i-th entry ω(i) + ω(iσ).
        for i in 0..k {
            rows[i][i] += Q::one();
            rows[i][s[i]] += Q::one();
            rows[k + i][i] += Q::one();
            rows[k + i][t[i]] += Q::one();
            rows[k + i][t[t[i]]] += Q::one();
        }
        linalg::kernel(&rows, k)
    }

    /// The `index`-th basis seed on Γ₀(N).
    pub fn gamma0(level: u64, index: usize) -> Result<CosetModule> {
        let table = Arc::new(CosetTable::gamma0(level));
        let basis = CosetModule::seed_basis(&table);
        let seed = basis
            .get(index)
            .cloned()
            .ok_or_else(|| Error::Domain(format!("seed space for level {level} has dimension {}", basis.len())))?;
        CosetModule::new(table, seed)
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.table
    }

    pub fn seed(&self) -> &[Q] {
        &self.seed
    }

    /// `i ↦ [r_i g]`.
    pub fn coset_key(&self, g: &Mat2) -> Vec<usize> {
        self.table.reps().iter().map(|r| self.table.locate(&r.mul(g)).expect("complete coset table").0).collect()
    }

    pub fn coordinates(v: &Induced<Trivial<Q>>) -> Vec<Q> {
        v.unwrap_values().iter().map(|t| t.0.clone()).collect()
    }
}

impl PseudoMeasure for CosetModule {
    type V = Induced<Trivial<Q>>;
    fn zero(&self) -> Self::V {
        self.measure.zero()
    }
    fn premeasure(&self, s: &Segment) -> Self::V {
        self.measure.premeasure(s)
    }
}

/// Finite sum `Σ_u w_u / log u` over quadratic units `u > 1` that are not
/// proper powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LimitValue {
    dim: usize,
    terms: BTreeMap<QuadSurd, Vec<Q>>,
}

/// `(η, m)` with `η^m = ε` and `m` maximal.
fn unit_root(eps: &QuadSurd) -> (QuadSurd, u32) {
    let e = eps.to_f64();
    let d = eps.radicand().clone();
    let max_m = (e.ln() / 0.481_211_825).floor() as u32 + 1;
    for m in (2..=max_m).rev() {
        let eta = e.powf(1.0 / f64::from(m));
        for sign in [1.0, -1.0] {
            let conj = sign / eta;
            let (a2, b2) = ((eta + conj).round(), ((eta - conj) / (d.to_f64().unwrap_or(1.0)).sqrt()).round());
            let cand = QuadSurd::new(Q::new(Z::from(a2 as i64), Z::from(2)), Q::new(Z::from(b2 as i64), Z::from(2)), d.clone());
            if let Ok(c) = cand {
                if c.cmp_q(&Q::one()).is_gt() && (0..m).fold(QuadSurd::rational(Q::one()), |acc, _| acc.mul(&c)) == *eps {
                    return (c, m);
                }
            }
        }
    }
    (eps.clone(), 1)
}

impl LimitValue {
    pub fn zero(dim: usize) -> LimitValue {
        LimitValue { dim, terms: BTreeMap::new() }
    }

    /// `v / λ`.
    pub fn over_lyapunov(lambda: &Lyapunov, v: Vec<Q>) -> LimitValue {
        let (eta, m) = unit_root(&lambda.unit);
        let c = Q::new(Z::from(lambda.period), Z::from(2 * m));
        let dim = v.len();
        LimitValue::zero(dim).add(&LimitValue { dim, terms: BTreeMap::from([(eta, v.into_iter().map(|x| x * &c).collect())]) })
    }

    pub fn add(&self, o: &LimitValue) -> LimitValue {
        let mut terms = self.terms.clone();
        for (u, w) in &o.terms {
            let e = terms.entry(u.clone()).or_insert_with(|| vec![Q::zero(); w.len()]);
            for (x, y) in e.iter_mut().zip(w) {
                *x += y;
            }
        }
        terms.retain(|_, w| w.iter().any(|x| !x.is_zero()));
        LimitValue { dim: self.dim.max(o.dim), terms }
    }

    pub fn neg(&self) -> LimitValue {
        LimitValue { dim: self.dim, terms: self.terms.iter().map(|(u, w)| (u.clone(), w.iter().map(|x| -x).collect())).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&QuadSurd, &[Q])> {
        self.terms.iter().map(|(u, w)| (u, w.as_slice()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (u, w) in &self.terms {
            let l = u.to_f64().ln();
            for (o, x) in out.iter_mut().zip(w) {
                *o += x.to_f64().unwrap_or(f64::NAN) / l;
            }
        }
        out
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(u, w)| format!("[{}]/log({u})", w.iter().map(fmt_q).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for LimitValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            log_of: String,
            coeffs: Vec<String>,
        }
        let terms: Vec<Term> =
            self.terms.iter().map(|(u, w)| Term { log_of: u.to_string(), coeffs: w.iter().map(fmt_q).collect() }).collect();
        let mut st = s.serialize_struct("LimitValue", 2)?;
        st.serialize_field("terms", &terms)?;
        st.serialize_field("approx", &self.to_f64())?;
        st.end()
    }
}

/// Which side of θ the summands measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `μ^lim(∞, θ)`, summands `μ(g_k∞, g_k0)`.
    FromInfinity,
    /// `μ^lim(θ, ∞)`, summands `μ(g_k0, g_k∞)`.
    ToInfinity,
}

/// Indices `start..start+len` (counted from `g_{−1}`) of one period of the
/// summand sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodWindow {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedForm {
    pub value: LimitValue,
    pub window: PeriodWindow,
    pub lambda: Lyapunov,
}

const MAX_ORBIT: usize = 1_000_000;

/// Exact Cesàro limit of the summands, from one period of the eventually
/// periodic sequence of coset data along the convergents.
pub fn limiting_measure(m: &CosetModule, theta: &PeriodicCF, side: Side) -> Result<ClosedForm> {
    let mut seen: HashMap<(Vec<usize>, usize, usize), usize> = HashMap::new();
    let mut summands: Vec<Vec<Q>> = Vec::new();
    for (j, g) in Convergents::new(theta).enumerate() {
        if j > MAX_ORBIT {
            return Err(Error::Limit(format!("no period found within {MAX_ORBIT} convergents")));
        }
        let state = (m.coset_key(&g), j % 2, theta.phase(j + 1));
        if let Some(&start) = seen.get(&state) {
            let len = j - start;
            let mut avg = vec![Q::zero(); m.table.index()];
            for v in &summands[start..] {
                for (a, x) in avg.iter_mut().zip(v) {
                    *a += x;
                }
            }
            let avg = avg.into_iter().map(|a| a / Q::from_integer(Z::from(len))).collect();
            let lambda = theta.lyapunov();
            return Ok(ClosedForm { value: LimitValue::over_lyapunov(&lambda, avg), window: PeriodWindow { start, len }, lambda });
        }
        seen.insert(state, j);
        let s = Segment::of_matrix(&g);
        let s = match side {
            Side::FromInfinity => s,
            Side::ToInfinity => s.reversed(),
        };
        summands.push(CosetModule::coordinates(&m.premeasure(&s)));
    }
    unreachable!("convergent stream is infinite")
}

/// `μ^lim(θ, η) = μ^lim(θ, ∞) + μ^lim(∞, η)`.
pub fn limiting_pair(m: &CosetModule, theta: &PeriodicCF, eta: &PeriodicCF) -> Result<LimitValue> {
    let a = limiting_measure(m, theta, Side::ToInfinity)?;
    let b = limiting_measure(m, eta, Side::FromInfinity)?;
    Ok(a.value.add(&b.value))
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericLimit {
    pub n: usize,
    /// `2·log q_n / n`.
    pub lambda: f64,
    pub value: Vec<f64>,
}

/// `(1/(λn)) Σ_{k=1}^{n+1}` of the summands, with the orbit generated by the
/// generalized Gauss shift on the exact value of θ and `λn = 2 log q_n`.
pub fn limiting_numeric(m: &CosetModule, theta: &PeriodicCF, n: usize, side: Side) -> Result<NumericLimit> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let space = ShiftSpace::new(m.table.clone());
    let table = &m.table;
    let k = table.index();
    let a0 = theta.digit(0);
    let mut pi: Vec<usize> = table.reps().iter().map(|r| table.locate(&r.mul(&Mat2::translation(a0))).expect("complete table").0).collect();
    let mut x = QuadSurd::rational(Q::from_integer(Z::from(a0))).sub(&theta.value());
    let sigma = table.sigma_perm();
    let mut counts = vec![vec![0u64; k]; k];
    for step in 0..=n {
        for (i, &c) in pi.iter().enumerate() {
            let c = match side {
                Side::FromInfinity => c,
                Side::ToInfinity => sigma[c],
            };
            counts[i][c] += 1;
        }
        if step == n {
            break;
        }
        let (d, y) = gauss_step_surd(&x)?;
        for c in pi.iter_mut() {
            *c = space.tau(*c, d);
        }
        x = y;
    }
    let lambda_n = 2.0 * ln_big(&theta.denominator(n));
    let value = counts
        .iter()
        .map(|row| {
            let s: Q = row.iter().zip(&m.seed).map(|(&c, w)| w * Q::from_integer(Z::from(c))).sum();
            s.to_f64().unwrap_or(f64::NAN) / lambda_n
        })
        .collect();
    Ok(NumericLimit { n, lambda: lambda_n / n as f64, value })
}

/// Both pipelines and the sup-norm gap between them.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub lambda: f64,
    pub value: LimitValue,
    pub numeric: Option<NumericLimit>,
    pub gap: Option<f64>,
}

pub fn limiting_report(m: &CosetModule, theta: &PeriodicCF, numeric_n: Option<usize>) -> Result<LimitReport> {
    let closed = limiting_measure(m, theta, Side::FromInfinity)?;
    let exact = closed.value.to_f64();
    let numeric = numeric_n.map(|n| limiting_numeric(m, theta, n, Side::FromInfinity)).transpose()?;
    let gap = numeric.as_ref().map(|nl| nl.value.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    Ok(LimitReport { lambda: closed.lambda.to_f64(), value: closed.value, numeric, gap })
}

/// Averages of a measure whose action does not factor through finite data,
/// at `n/2` and `n` terms.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceProbe {
    pub n: usize,
    pub lambda: f64,
    /// `log10` of the sup norm of the average at `n/2` and `n` terms.
    pub log10_norm_half: f64,
    pub log10_norm_full: f64,
    pub converged: bool,
}

/// Largest `n` accepted by [`limiting_probe`].
pub const PROBE_CAP: usize = 400;

pub fn limiting_probe<M: PseudoMeasure>(
    mu: &M,
    theta: &PeriodicCF,
    n: usize,
    coords: impl Fn(&M::V) -> Vec<Q>,
) -> Result<ConvergenceProbe> {
    if n < 2 || n > PROBE_CAP {
        return Err(Error::Limit(format!("probe needs 2 ≤ n ≤ {PROBE_CAP}")));
    }
    let log10_abs = |x: &Q| {
        if x.is_zero() {
            f64::NEG_INFINITY
        } else {
            (ln_big(&x.numer().abs()) - ln_big(x.denom())) / std::f64::consts::LN_10
        }
    };
    let mut sum: Vec<Q> = Vec::new();
    let mut half = f64::NEG_INFINITY;
    for (j, g) in Convergents::new(theta).take(n + 1).enumerate() {
        let v = coords(&mu.premeasure(&Segment::of_matrix(&g)));
        if sum.is_empty() {
            sum = vec![Q::zero(); v.len()];
        }
        for (a, x) in sum.iter_mut().zip(&v) {
            *a += x;
        }
        if j == n / 2 {
            half = sum.iter().map(log10_abs).fold(f64::NEG_INFINITY, f64::max) - ((n / 2 + 1) as f64).log10();
        }
    }
    let full = sum.iter().map(log10_abs).fold(f64::NEG_INFINITY, f64::max) - ((n + 1) as f64).log10();
    let lambda = theta.lyapunov().to_f64();
    let converged = full == f64::NEG_INFINITY || (full - half).abs() < 1e-3;
    let shift = lambda.log10();
    Ok(ConvergenceProbe { n, lambda, log10_norm_half: half - shift, log10_norm_full: full - shift, converged })
}

/// Oriented edges on the path from the base vertex to θ whose Farey sides
/// join consecutive convergents, each with the sign relating its end set to
/// `I_k = (g_k∞, g_k0)`: `+1` when they coincide, `−1` when `I_k` is the
/// complement.
pub fn convergent_path_edges(theta: &PeriodicCF, count: usize) -> Vec<(TreeEdge, i8)> {
    let mats = convergent_matrices(theta, count);
    let ends: Vec<P1> = mats.iter().map(|g| g.act(&P1::infinity())).chain(mats.last().map(|g| g.act(&P1::int(0)))).collect();
    let x = BoundaryPoint::Quadratic(theta.value());
    let mut out = Vec::new();
    let mut steps = 8;
    while out.len() < count {
        out.clear();
        let path = end_paths(&x, steps).pop().expect("irrational point has a path");
        let mut k = 0;
        for e in path {
            if k >= count {
                break;
            }
            let v = e.interval();
            let target = Segment { from: ends[k].clone(), to: ends[k + 1].clone() };
            if v == target {
                out.push((e, 1));
                k += 1;
            } else if v == target.reversed() {
                out.push((e, -1));
                k += 1;
            }
        }
        steps *= 2;
    }
    out
}

/// Cesàro average of `±c(e_k)` over the convergent edges of θ's path, taken
/// over one period window of the summands.
pub fn limiting_via_current<V: Group>(
    c: &Current<V>,
    theta: &PeriodicCF,
    window: PeriodWindow,
    coords: impl Fn(&V) -> Vec<Q>,
) -> LimitValue {
    let edges = convergent_path_edges(theta, window.start + window.len);
    let mut sum: Vec<Q> = Vec::new();
    for (e, sign) in &edges[window.start..] {
        let v = c.value(e);
        let v = if *sign > 0 { v } else { v.neg() };
        let x = coords(&v);
        if sum.is_empty() {
            sum = vec![Q::zero(); x.len()];
        }
        for (a, b) in sum.iter_mut().zip(&x) {
            *a += b;
        }
    }
    let len = Q::from_integer(Z::from(window.len.max(1)));
    LimitValue::over_lyapunov(&theta.lyapunov(), sum.into_iter().map(|a| a / &len).collect())
}
