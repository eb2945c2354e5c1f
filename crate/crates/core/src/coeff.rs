//! Coefficient modules: homogeneous polynomials with the GL(2) action,
//! rational differentials, and modules induced from a finite-index subgroup.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boundary::{parse_q, Mat2, QMat2, Q, Z};
use crate::error::{Error, Result};
use crate::measure::{Group, RationalAction, Scalars, UnimodularAction};

/// Homogeneous polynomial of degree w; `coeffs[i]` multiplies X^{w−i} Y^i.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Q>,
}

fn binomial_row(n: usize) -> Vec<Z> {
    let mut row = vec![Z::one()];
    for k in 0..n {
        let next = &row[k] * Z::from(n - k) / Z::from(k + 1);
        row.push(next);
    }
    row
}

/// Coefficients of (uX + vY)^k.
fn linear_power(u: &Q, v: &Q, k: usize) -> Vec<Q> {
    let binom = binomial_row(k);
    let mut upow = vec![Q::one()];
    let mut vpow = vec![Q::one()];
    for i in 0..k {
        upow.push(&upow[i] * u);
        vpow.push(&vpow[i] * v);
    }
    (0..=k).map(|i| Q::from_integer(binom[i].clone()) * &upow[k - i] * &vpow[i]).collect()
}

fn convolve(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Poly {
    pub fn new(coeffs: Vec<Q>) -> Poly {
        assert!(!coeffs.is_empty(), "a polynomial of weight w has w+1 coefficients");
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| Q::from_integer(Z::from(c))).collect())
    }

    pub fn zero(w: usize) -> Poly {
        Poly { coeffs: vec![Q::zero(); w + 1] }
    }

    /// X^{w−i} Y^i.
    pub fn monomial(w: usize, i: usize) -> Poly {
        let mut p = Poly::zero(w);
        p.coeffs[i] = Q::one();
        p
    }

    /// X^w − Y^w.
    pub fn eisenstein(w: usize) -> Poly {
        Poly::monomial(w, 0).add(&Poly::monomial(w, w).neg())
    }

    pub fn weight(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// (P g)(X, Y) = P((aX + bY)/det, (cX + dY)/det).
    pub fn right_act(&self, g: &QMat2) -> Poly {
        let w = self.weight();
        let det = g.det();
        assert!(!det.is_zero(), "singular matrix");
        let (u1, v1) = (&g.a / &det, &g.b / &det);
        let (u2, v2) = (&g.c / &det, &g.d / &det);
        let p1: Vec<Vec<Q>> = (0..=w).map(|k| linear_power(&u1, &v1, k)).collect();
        let p2: Vec<Vec<Q>> = (0..=w).map(|k| linear_power(&u2, &v2, k)).collect();
        let mut out = vec![Q::zero(); w + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, t) in convolve(&p1[w - i], &p2[i]).into_iter().enumerate() {
                out[j] += c * t;
            }
        }
        Poly { coeffs: out }
    }

    /// g[P] = P g⁻¹.
    pub fn left_act(&self, g: &QMat2) -> Poly {
        self.right_act(&g.inverse())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Value at (X, Y).
    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        let w = self.weight();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * num_traits::pow(x.clone(), w - i) * num_traits::pow(y.clone(), i))
            .sum()
    }

    /// Dehomogenized coefficients of P(z, 1), lowest degree first.
    pub fn dehomogenize(&self) -> UPoly {
        UPoly::new(self.coeffs.iter().rev().cloned().collect())
    }
}

impl Group for Poly {
    fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.weight(), o.weight(), "weight mismatch");
        Poly { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }
    fn neg(&self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

impl Scalars for Poly {
    fn scale(&self, c: &Q) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }
}

impl UnimodularAction for Poly {
    fn act(&self, g: &Mat2) -> Poly {
        // det g = ±1, so g⁻¹ is the signed adjugate.
        self.right_act(&g.inverse().expect("unimodular").to_q())
    }
}

impl RationalAction for Poly {
    fn act_q(&self, g: &QMat2) -> Poly {
        self.left_act(g)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.weight();
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mono = match (w - i, i) {
                (0, 0) => String::new(),
                (a, 0) => pow_str("X", a),
                (0, b) => pow_str("Y", b),
                (a, b) => format!("{}{}", pow_str("X", a), pow_str("Y", b)),
            };
            let coef = if mono.is_empty() || !c.abs().is_one() {
                c.abs().to_string()
            } else {
                String::new()
            };
            let sign = if c.is_negative() { "-" } else { "+" };
            terms.push((sign, format!("{coef}{mono}")));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (sign, t)) in terms.iter().enumerate() {
            match (k, *sign) {
                (0, "-") => write!(f, "-{t}")?,
                (0, _) => write!(f, "{t}")?,
                (_, s) => write!(f, " {s} {t}")?,
            }
        }
        Ok(())
    }
}

fn pow_str(v: &str, e: usize) -> String {
    if e == 1 {
        v.to_string()
    } else {
        format!("{v}^{e}")
    }
}

fn q_strings(v: &[Q]) -> Vec<String> {
    v.iter().map(|c| c.to_string()).collect()
}

fn parse_q_strings(v: &[String]) -> Result<Vec<Q>> {
    v.iter().map(|s| parse_q(s)).collect()
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        q_strings(&self.coeffs).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Poly, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let c = parse_q_strings(&v).map_err(serde::de::Error::custom)?;
        if c.is_empty() {
            return Err(serde::de::Error::custom("empty coefficient list"));
        }
        Ok(Poly::new(c))
    }
}

/// Univariate polynomial over Q, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct UPoly(Vec<Q>);

impl UPoly {
    pub fn new(mut c: Vec<Q>) -> UPoly {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        UPoly(c)
    }

    pub fn from_i64(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&x| Q::from_integer(Z::from(x))).collect())
    }

    pub fn constant(c: Q) -> UPoly {
        UPoly::new(vec![c])
    }

    pub fn one() -> UPoly {
        UPoly::constant(Q::one())
    }

    /// z^k.
    pub fn z_pow(k: usize) -> UPoly {
        let mut c = vec![Q::zero(); k + 1];
        c[k] = Q::one();
        UPoly(c)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn lead(&self) -> Q {
        self.0.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.0.len().max(o.0.len());
        let z = Q::zero();
        UPoly::new((0..n).map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z)).collect())
    }

    pub fn neg(&self) -> UPoly {
        UPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &UPoly) -> UPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::default();
        }
        UPoly::new(convolve(&self.0, &o.0))
    }

    pub fn scale(&self, c: &Q) -> UPoly {
        UPoly::new(self.0.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, k: usize) -> UPoly {
        (0..k).fold(UPoly::one(), |acc, _| acc.mul(self))
    }

    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dd = d.degree().unwrap();
        let lead = d.lead();
        let mut r = self.0.clone();
        let mut quo = vec![Q::zero(); r.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let c = r.last().unwrap() / &lead;
            for (i, x) in d.0.iter().enumerate() {
                r[shift + i] -= &c * x;
            }
            quo[shift] = c;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        (UPoly::new(quo), UPoly::new(r))
    }

    pub fn monic(&self) -> UPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lead().recip())
    }

    pub fn gcd(&self, o: &UPoly) -> UPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }
}

/// Reduced quotient num/den with monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: UPoly,
    den: UPoly,
}

impl RatFn {
    pub fn new(num: UPoly, den: UPoly) -> Result<RatFn> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(RatFn::zero());
        }
        let g = num.gcd(&den);
        let (n, d) = (num.div_rem(&g).0, den.div_rem(&g).0);
        let l = d.lead().recip();
        Ok(RatFn { num: n.scale(&l), den: d.scale(&l) })
    }

    pub fn zero() -> RatFn {
        RatFn { num: UPoly::default(), den: UPoly::one() }
    }

    pub fn poly(p: UPoly) -> RatFn {
        RatFn { num: p, den: UPoly::one() }
    }

    /// z^e for any integer e.
    pub fn z_pow(e: i64) -> RatFn {
        if e >= 0 {
            RatFn::poly(UPoly::z_pow(e as usize))
        } else {
            RatFn { num: UPoly::one(), den: UPoly::z_pow((-e) as usize) }
        }
    }

    /// (z − 1)^e for any integer e.
    pub fn z_minus_one_pow(e: i64) -> RatFn {
        let base = UPoly::from_i64(&[-1, 1]).pow(e.unsigned_abs() as usize);
        if e >= 0 {
            RatFn::poly(base)
        } else {
            RatFn::new(UPoly::one(), base).expect("nonzero")
        }
    }

    pub fn num(&self) -> &UPoly {
        &self.num
    }

    pub fn den(&self) -> &UPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        RatFn::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        RatFn::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn neg(&self) -> RatFn {
        RatFn { num: self.num.neg(), den: self.den.clone() }
    }

    /// z ↦ q((az + b)/(cz + d)).
    pub fn compose_moebius(&self, g: &QMat2) -> RatFn {
        let e = self.num.0.len().max(self.den.0.len()).saturating_sub(1);
        let top = UPoly::new(vec![g.b.clone(), g.a.clone()]);
        let bot = UPoly::new(vec![g.d.clone(), g.c.clone()]);
        let sub = |p: &UPoly| {
            p.0.iter().enumerate().fold(UPoly::default(), |acc, (i, c)| {
                acc.add(&top.pow(i).mul(&bot.pow(e - i)).scale(c))
            })
        };
        RatFn::new(sub(&self.num), sub(&self.den)).expect("Möbius map keeps denominators nonzero")
    }
}

impl Serialize for RatFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            num: Vec<String>,
            den: Vec<String>,
        }
        Repr { num: q_strings(&self.num.0), den: q_strings(&self.den.0) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<RatFn, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            num: Vec<String>,
            den: Vec<String>,
        }
        let r = Repr::deserialize(d)?;
        let num = parse_q_strings(&r.num).map_err(serde::de::Error::custom)?;
        let den = parse_q_strings(&r.den).map_err(serde::de::Error::custom)?;
        RatFn::new(UPoly::new(num), UPoly::new(den)).map_err(serde::de::Error::custom)
    }
}

/// q(z)(dz)^k. Negative k is allowed; polynomials of degree w paired with
/// k = −w/2 are exactly the seeds of polynomial-valued modular measures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalDifferential {
    pub k: i64,
    pub q: RatFn,
}

/// Both functional equations for the differential q(z)(dz)^k:
/// q(z) + z^{−2k} q(−1/z) = 0 and
/// q(z) + z^{−2k} q(1 − 1/z) + (z − 1)^{−2k} q(1/(1 − z)) = 0.
pub fn rpf_validate(f: &RationalDifferential) -> bool {
    rpf_residuals(f).iter().all(RatFn::is_zero)
}

pub fn rpf_residuals(f: &RationalDifferential) -> [RatFn; 2] {
    let q = &f.q;
    let w = RatFn::z_pow(-2 * f.k);
    let inv = Mat2::from_i64(0, -1, 1, 0).to_q();
    let first = q.add(&w.mul(&q.compose_moebius(&inv)));
    let t1 = Mat2::from_i64(1, -1, 1, 0).to_q();
    let t2 = Mat2::from_i64(0, 1, -1, 1).to_q();
    let second = q
        .add(&w.mul(&q.compose_moebius(&t1)))
        .add(&RatFn::z_minus_one_pow(-2 * f.k).mul(&q.compose_moebius(&t2)));
    [first, second]
}

/// Value group with trivial action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trivial<V>(pub V);

impl<V: Group> Group for Trivial<V> {
    fn add(&self, o: &Self) -> Self {
        Trivial(self.0.add(&o.0))
    }
    fn neg(&self) -> Self {
        Trivial(self.0.neg())
    }
    fn vanishes(&self) -> bool {
        self.0.vanishes()
    }
}

impl<V: Group> UnimodularAction for Trivial<V> {
    fn act(&self, _: &Mat2) -> Self {
        self.clone()
    }
}

impl<V: Group> RationalAction for Trivial<V> {
    fn act_q(&self, _: &QMat2) -> Self {
        self.clone()
    }
}

type Membership = Arc<dyn Fn(&Mat2) -> bool + Send + Sync>;

/// Right cosets Γ\PSL(2,Z) of a finite-index subgroup, found by closing
/// {Γ} under right multiplication by σ and τ.
pub struct CosetTable {
    reps: Vec<Mat2>,
    member: Membership,
    /// `sigma[i] = (j, γ)` with r_i σ = γ r_j; same for `tau`.
    sigma: Vec<(usize, Mat2)>,
    tau: Vec<(usize, Mat2)>,
}

impl fmt::Debug for CosetTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CosetTable").field("reps", &self.reps).finish()
    }
}

impl CosetTable {
    pub fn new(member: impl Fn(&Mat2) -> bool + Send + Sync + 'static, max_index: usize) -> Result<CosetTable> {
        let member: Membership = Arc::new(member);
        if !member(&Mat2::identity()) || !member(&Mat2::identity().neg()) {
            return Err(Error::Inconsistent("subgroup must contain ±1".into()));
        }
        let mut reps = vec![Mat2::identity()];
        let mut i = 0;
        while i < reps.len() {
            for s in [Mat2::sigma(), Mat2::tau()] {
                let x = reps[i].mul(&s);
                if find_coset(&reps, &member, &x).is_none() {
                    reps.push(x);
                    if reps.len() > max_index {
                        return Err(Error::Limit(format!("index exceeds {max_index}")));
                    }
                }
            }
            i += 1;
        }
        let mut t = CosetTable { reps, member, sigma: Vec::new(), tau: Vec::new() };
        t.sigma = (0..t.reps.len()).map(|i| t.locate(&t.reps[i].mul(&Mat2::sigma()))).collect::<Result<_>>()?;
        t.tau = (0..t.reps.len()).map(|i| t.locate(&t.reps[i].mul(&Mat2::tau()))).collect::<Result<_>>()?;
        Ok(t)
    }

    /// The whole modular group: one coset.
    pub fn full() -> CosetTable {
        CosetTable::new(|_| true, 1).expect("index one")
    }

    /// Γ₀(N): lower-left entry divisible by N.
    pub fn gamma0(n: u64) -> CosetTable {
        let nn = Z::from(n);
        CosetTable::new(move |g: &Mat2| g.c.is_multiple_of(&nn), 10_000).expect("finite index")
    }

    pub fn index(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[Mat2] {
        &self.reps
    }

    pub fn contains(&self, g: &Mat2) -> bool {
        (self.member)(g)
    }

    /// For x in PSL(2,Z): the coset j and γ ∈ Γ with x = γ r_j.
    pub fn locate(&self, x: &Mat2) -> Result<(usize, Mat2)> {
        let j = find_coset(&self.reps, &self.member, x)
            .ok_or_else(|| Error::Inconsistent(format!("{x} lies in no listed coset")))?;
        let gamma = x.mul(&self.reps[j].inverse()?);
        Ok((j, gamma))
    }

    /// Permutation of cosets under right multiplication by σ or τ.
    pub fn sigma_perm(&self) -> Vec<usize> {
        self.sigma.iter().map(|p| p.0).collect()
    }

    pub fn tau_perm(&self) -> Vec<usize> {
        self.tau.iter().map(|p| p.0).collect()
    }
}

fn find_coset(reps: &[Mat2], member: &Membership, x: &Mat2) -> Option<usize> {
    reps.iter().position(|r| member(&x.mul(&r.inverse().expect("unimodular"))))
}

/// Element of Hom_Γ(PSL(2,Z), W), stored by its values on coset
/// representatives.
#[derive(Clone, Debug)]
pub struct Induced<W> {
    table: Arc<CosetTable>,
    values: Vec<W>,
}

impl<W: UnimodularAction> Induced<W> {
    pub fn wrap(table: Arc<CosetTable>, values: Vec<W>) -> Result<Induced<W>> {
        if values.len() != table.index() {
            return Err(Error::Inconsistent(format!("{} values for {} cosets", values.len(), table.index())));
        }
        Ok(Induced { table, values })
    }

    pub fn unwrap_values(&self) -> &[W] {
        &self.values
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.table
    }

    /// φ(x) for any x in PSL(2,Z), via x = γ r_j and φ(x) = γ φ(r_j).
    pub fn at(&self, x: &Mat2) -> W {
        let (j, gamma) = self.table.locate(x).expect("complete coset table");
        self.values[j].act(&gamma)
    }
}

impl<W: UnimodularAction> PartialEq for Induced<W> {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.table, &o.table) && self.values == o.values
    }
}

impl<W: UnimodularAction> Group for Induced<W> {
    fn add(&self, o: &Self) -> Self {
        Induced { table: self.table.clone(), values: self.values.iter().zip(&o.values).map(|(a, b)| a.add(b)).collect() }
    }
    fn neg(&self) -> Self {
        Induced { table: self.table.clone(), values: self.values.iter().map(Group::neg).collect() }
    }
    fn vanishes(&self) -> bool {
        self.values.iter().all(Group::vanishes)
    }
}

/// (gφ)(x) = φ(xg).
impl<W: UnimodularAction> UnimodularAction for Induced<W> {
    fn act(&self, g: &Mat2) -> Self {
        let values = self.table.reps().iter().map(|r| self.at(&r.mul(g))).collect();
        Induced { table: self.table.clone(), values }
    }
}
