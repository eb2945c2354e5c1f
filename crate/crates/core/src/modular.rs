//! Modular pseudo-measures: construction from a seed, the seed space of
//! period-type polynomials, induction, cocycles, and Hecke operators.

use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::boundary::{Mat2, QMat2, P1, Q, Z};
use crate::coeff::{CosetTable, Induced, Poly};
use crate::error::{Error, Result};
use crate::farey::Segment;
use crate::linalg::{self, Matrix};
use crate::measure::{farey_triangles, Bounds, Group, PseudoMeasure, RationalAction, Report, UnimodularAction};

/// Checks (1+σ)ω = 0 and (1+τ+τ²)ω = 0.
pub fn check_seed<W: UnimodularAction>(omega: &W) -> Result<()> {
    let s = Mat2::sigma();
    let t = Mat2::tau();
    if !omega.add(&omega.act(&s)).vanishes() {
        return Err(Error::SeedInvariant("(1+σ)ω ≠ 0".into()));
    }
    if !omega.add(&omega.act(&t)).add(&omega.act(&t.mul(&t))).vanishes() {
        return Err(Error::SeedInvariant("(1+τ+τ²)ω ≠ 0".into()));
    }
    Ok(())
}

/// The modular measure with μ(g∞, g0) = g[ω].
#[derive(Clone, Debug)]
pub struct FromSeed<W> {
    omega: W,
    zero: W,
}

impl<W: UnimodularAction> FromSeed<W> {
    pub fn new(omega: W) -> Result<FromSeed<W>> {
        check_seed(&omega)?;
        let zero = omega.sub(&omega);
        Ok(FromSeed { omega, zero })
    }

    pub fn seed(&self) -> &W {
        &self.omega
    }
}

impl<W: UnimodularAction> PseudoMeasure for FromSeed<W> {
    type V = W;
    fn zero(&self) -> W {
        self.zero.clone()
    }
    fn premeasure(&self, s: &Segment) -> W {
        self.omega.act(&s.matrix())
    }
}

pub fn from_seed<W: UnimodularAction>(omega: W) -> Result<FromSeed<W>> {
    FromSeed::new(omega)
}

/// Basis of the seed space together with a note when it is trivially empty.
#[derive(Clone, Debug, Serialize)]
pub struct SeedSpace {
    pub weight: usize,
    pub basis: Vec<Poly>,
    pub warning: Option<String>,
}

/// Matrix of P ↦ g[P] on the monomial basis (columns are images).
pub fn action_matrix(w: usize, g: &Mat2) -> Matrix {
    let mut m = linalg::zeros(w + 1, w + 1);
    for j in 0..=w {
        let img = Poly::monomial(w, j).act(g);
        for (i, c) in img.coeffs().iter().enumerate() {
            m[i][j] = c.clone();
        }
    }
    m
}

/// The stacked matrix of (1+σ) and (1+τ+τ²) on polynomials of weight w.
pub fn seed_conditions(w: usize) -> Matrix {
    let id = linalg::identity(w + 1);
    let s = action_matrix(w, &Mat2::sigma());
    let t = action_matrix(w, &Mat2::tau());
    let t2 = action_matrix(w, &Mat2::tau().mul(&Mat2::tau()));
    let mut out = linalg::add(&id, &s);
    out.extend(linalg::add(&linalg::add(&id, &t), &t2));
    out
}

/// Ker(1+σ) ∩ Ker(1+τ+τ²) on homogeneous polynomials of degree w.
pub fn seed_space(w: usize) -> SeedSpace {
    if w % 2 == 1 {
        return SeedSpace {
            weight: w,
            basis: Vec::new(),
            warning: Some(format!("odd weight {w}: −1 acts by −1, so no PSL(2,Z) seeds")),
        };
    }
    let basis = linalg::kernel(&seed_conditions(w), w + 1).into_iter().map(Poly::new).collect();
    SeedSpace { weight: w, basis, warning: None }
}

/// Dimension of the seed space from the rank of the same system, computed by
/// fraction-free elimination instead of row reduction over Q.
pub fn seed_dimension_naive(w: usize) -> usize {
    if w % 2 == 1 {
        return 0;
    }
    (w + 1) - linalg::rank_bareiss(&linalg::integer_rows(&seed_conditions(w)))
}

/// Checks μ(gα, gβ) = g[μ(α, β)] on Farey-triangle edges within the bounds.
pub fn modularity_check<M>(mu: &M, generators: &[Mat2], bounds: &Bounds) -> Report
where
    M: PseudoMeasure,
    M::V: UnimodularAction,
{
    let mut checked = 0;
    for tri in farey_triangles(bounds) {
        for k in 0..3 {
            let (a, b) = (&tri[k], &tri[(k + 1) % 3]);
            let v = mu.eval(a, b);
            for g in generators {
                if mu.eval(&g.act(a), &g.act(b)) != v.act(g) {
                    return Report::fail(checked, format!("fails for g = {g} on ({a}, {b})"));
                }
                checked += 1;
            }
        }
    }
    Report::ok(checked)
}

/// μ̂(α, β)(g) = μ(gα, gβ), valued in the induced module.
pub struct Induce<M> {
    inner: M,
    table: Arc<CosetTable>,
}

impl<M> Induce<M>
where
    M: PseudoMeasure,
    M::V: UnimodularAction,
{
    pub fn new(inner: M, table: Arc<CosetTable>) -> Self {
        Induce { inner, table }
    }
}

impl<M> PseudoMeasure for Induce<M>
where
    M: PseudoMeasure,
    M::V: UnimodularAction,
{
    type V = Induced<M::V>;
    fn zero(&self) -> Self::V {
        let z = self.inner.zero();
        Induced::wrap(self.table.clone(), vec![z; self.table.index()]).expect("one value per coset")
    }
    fn premeasure(&self, s: &Segment) -> Self::V {
        let values = self.table.reps().iter().map(|r| self.inner.premeasure(&s.map(r))).collect();
        Induced::wrap(self.table.clone(), values).expect("one value per coset")
    }
}

/// μ(α, β) = μ̂(α, β)(1).
pub struct Restrict<M>(pub M);

impl<M, W> PseudoMeasure for Restrict<M>
where
    M: PseudoMeasure<V = Induced<W>>,
    W: UnimodularAction,
{
    type V = W;
    fn zero(&self) -> W {
        self.0.zero().at(&Mat2::identity())
    }
    fn premeasure(&self, s: &Segment) -> W {
        self.0.premeasure(s).at(&Mat2::identity())
    }
}

/// c_α(g) = μ(gα, α).
pub fn cocycle<M: PseudoMeasure>(mu: &M, alpha: &P1, g: &Mat2) -> M::V {
    mu.eval(&g.act(alpha), alpha)
}

/// Representatives (a, b; 0, d) with ad = n and 1 ≤ b ≤ d.
pub fn hecke_reps(n: u64) -> Vec<QMat2> {
    let mut out = Vec::new();
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        let a = n / d;
        for b in 1..=d {
            out.push(Mat2::new(Z::from(a), Z::from(b), Z::zero(), Z::from(d)).to_q());
        }
    }
    out
}

/// T μ = Σ δ⁻¹ μ δ over the given representatives.
pub struct Hecke<M> {
    inner: M,
    reps: Vec<(QMat2, QMat2)>,
}

impl<M> Hecke<M>
where
    M: PseudoMeasure,
    M::V: RationalAction,
{
    pub fn with_reps(inner: M, reps: Vec<QMat2>) -> Self {
        let reps = reps.into_iter().map(|d| (d.inverse(), d)).collect();
        Hecke { inner, reps }
    }

    pub fn new(inner: M, n: u64) -> Self {
        Hecke::with_reps(inner, hecke_reps(n))
    }
}

impl<M> PseudoMeasure for Hecke<M>
where
    M: PseudoMeasure,
    M::V: RationalAction,
{
    type V = M::V;
    fn zero(&self) -> M::V {
        self.inner.zero()
    }
    fn premeasure(&self, s: &Segment) -> M::V {
        self.eval(&s.from, &s.to)
    }
    fn eval(&self, a: &P1, b: &P1) -> M::V {
        self.reps.iter().fold(self.inner.zero(), |acc, (inv, d)| {
            acc.add(&self.inner.eval(&d.act(a), &d.act(b)).act_q(inv))
        })
    }
}

/// Σ_{d | n} d^k.
pub fn divisor_sigma(k: u32, n: u64) -> Z {
    (1..=n).filter(|d| n % d == 0).map(|d| num_traits::pow(Z::from(d), k as usize)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigen {
    #[serde(with = "crate::measure::q_string")]
    pub value: Q,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeckeReport {
    pub n: u64,
    pub weight: usize,
    #[serde(serialize_with = "ser_matrix")]
    pub raw: Matrix,
    /// Factor taking the eigenvalue on X^w − Y^w to σ_{w+1}(n).
    #[serde(with = "crate::measure::q_string")]
    pub normalization: Q,
    #[serde(serialize_with = "ser_matrix")]
    pub normalized: Matrix,
    pub raw_eigenvalues: Vec<Eigen>,
    pub normalized_eigenvalues: Vec<Eigen>,
    /// Characteristic polynomial of the normalized matrix, lowest degree first.
    #[serde(serialize_with = "ser_vec")]
    pub charpoly: Vec<Q>,
    /// Degree of the factor without rational roots.
    pub irrational_degree: usize,
}

fn ser_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    rows.serialize(s)
}

fn ser_vec<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    rows.serialize(s)
}

/// Column j holds the seed-basis coordinates of (T_n μ_j)(∞, 0), where μ_j is
/// built from the j-th basis seed.
pub fn hecke_matrix_raw(n: u64, space: &SeedSpace) -> Result<Matrix> {
    let k = space.basis.len();
    let cols: Vec<Vec<Q>> = space.basis.iter().map(|b| b.coeffs().to_vec()).collect();
    let mut m = linalg::zeros(k, k);
    for (j, b) in space.basis.iter().enumerate() {
        let t = Hecke::new(from_seed(b.clone())?, n);
        let v = t.eval(&P1::infinity(), &P1::int(0));
        let c = linalg::coordinates(&cols, v.coeffs())
            .ok_or_else(|| Error::Inconsistent(format!("T_{n} image leaves the seed space")))?;
        for i in 0..k {
            m[i][j] = c[i].clone();
        }
    }
    Ok(m)
}

fn eigen_list(m: &Matrix) -> (Vec<Eigen>, Vec<Q>, usize) {
    let cp = linalg::charpoly(m);
    match linalg::rational_roots(&cp) {
        Some((roots, rest)) => (
            roots.into_iter().map(|(value, multiplicity)| Eigen { value, multiplicity }).collect(),
            cp,
            rest.len() - 1,
        ),
        None => (Vec::new(), cp.clone(), cp.len() - 1),
    }
}

pub fn hecke_matrix(n: u64, w: usize) -> Result<HeckeReport> {
    let space = seed_space(w);
    if space.basis.is_empty() {
        return Err(Error::Domain(format!("empty seed space in weight {w}")));
    }
    let raw = hecke_matrix_raw(n, &space)?;
    let cols: Vec<Vec<Q>> = space.basis.iter().map(|b| b.coeffs().to_vec()).collect();
    let e = linalg::coordinates(&cols, Poly::eisenstein(w).coeffs())
        .ok_or_else(|| Error::Inconsistent("X^w − Y^w is not a seed".into()))?;
    let image = linalg::mul_vec(&raw, &e);
    let pivot = e.iter().position(|x| !x.is_zero()).expect("nonzero vector");
    let lambda = &image[pivot] / &e[pivot];
    if image.iter().zip(&e).any(|(y, x)| *y != &lambda * x) {
        return Err(Error::Inconsistent("X^w − Y^w is not an eigenvector".into()));
    }
    if lambda.is_zero() {
        return Err(Error::Inconsistent("zero eigenvalue on X^w − Y^w".into()));
    }
    let normalization = Q::from_integer(divisor_sigma(w as u32 + 1, n)) / &lambda;
    let normalized = linalg::scale(&raw, &normalization);
    let (raw_eigenvalues, _, _) = eigen_list(&raw);
    let (normalized_eigenvalues, charpoly, irrational_degree) = eigen_list(&normalized);
    Ok(HeckeReport { n, weight: w, raw, normalization, normalized, raw_eigenvalues, normalized_eigenvalues, charpoly, irrational_degree })
}

impl Eigen {
    pub fn is(&self, v: i64, mult: usize) -> bool {
        self.value == Q::from_integer(Z::from(v)) && self.multiplicity == mult
    }
}

/// Seeds of a space as ready-made measures.
pub fn basis_measures(space: &SeedSpace) -> Vec<FromSeed<Poly>> {
    space.basis.iter().map(|b| from_seed(b.clone()).expect("kernel element")).collect()
}

pub fn is_identity(m: &Matrix) -> bool {
    m.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() }))
}
