//! Generalized Dedekind symbols, reciprocity functions, and the passage
//! between pseudo-measures and families `{R_n, ω}`.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::boundary::{P1, Q, Z};
use crate::error::{Error, Result};
use crate::farey::Segment;
use crate::measure::{Group, PseudoMeasure, Report};

/// `R(p, q)` on coprime pairs with `p, q ≥ 1`.
#[derive(Clone)]
pub struct ReciprocityFunction<V> {
    zero: V,
    rule: Arc<dyn Fn(&Z, &Z) -> V + Send + Sync>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReciprocityEntry<V> {
    pub p: Z,
    pub q: Z,
    pub value: V,
}

fn coprime_pairs(bound: u64) -> impl Iterator<Item = (Z, Z)> {
    (2..=bound).flat_map(|s| (1..s).filter(move |p| p.gcd(&(s - p)) == 1).map(move |p| (Z::from(p), Z::from(s - p))))
}

impl<V: Group> ReciprocityFunction<V> {
    pub fn new(zero: V, rule: impl Fn(&Z, &Z) -> V + Send + Sync + 'static) -> Self {
        ReciprocityFunction { zero, rule: Arc::new(rule) }
    }

    pub fn zero(&self) -> V {
        self.zero.clone()
    }

    pub fn eval(&self, p: &Z, q: &Z) -> V {
        debug_assert!(p.is_positive() && q.is_positive() && p.gcd(q).is_one());
        (self.rule)(p, q)
    }

    /// `R(p+q, q) + R(p, p+q) = R(p, q)` for coprime `p + q ≤ bound`.
    pub fn check_functional_equation(&self, bound: u64) -> Report {
        let mut checked = 0;
        for (p, q) in coprime_pairs(bound) {
            let s = &p + &q;
            let lhs = self.eval(&s, &q).add(&self.eval(&p, &s));
            if lhs != self.eval(&p, &q) {
                return Report::fail(checked, format!("({p}, {q})"));
            }
            checked += 1;
        }
        Report::ok(checked)
    }

    pub fn table(&self, bound: u64) -> Vec<ReciprocityEntry<V>> {
        coprime_pairs(bound).map(|(p, q)| ReciprocityEntry { value: self.eval(&p, &q), p, q }).collect()
    }
}

/// `D(p, q)` on coprime pairs with `p ≥ 1`, periodic in q with period p.
#[derive(Clone)]
pub struct DedekindSymbol<V> {
    zero: V,
    rule: Arc<dyn Fn(&Z, &Z) -> V + Send + Sync>,
}

impl<V: Group> DedekindSymbol<V> {
    pub fn new(zero: V, rule: impl Fn(&Z, &Z) -> V + Send + Sync + 'static) -> Self {
        DedekindSymbol { zero, rule: Arc::new(rule) }
    }

    /// A symbol given on residues: `D(p, q) = f(p, q mod p)`.
    pub fn from_residues(zero: V, f: impl Fn(&Z, &Z) -> V + Send + Sync + 'static) -> Self {
        DedekindSymbol::new(zero, move |p, q| f(p, &q.mod_floor(p)))
    }

    pub fn eval(&self, p: &Z, q: &Z) -> V {
        (self.rule)(p, q)
    }

    /// `D(p, q) = D(p, q + p)` on coprime pairs with `p, |q| < bound`.
    pub fn check_periodicity(&self, bound: i64) -> Report {
        let mut checked = 0;
        for p in 1..bound {
            for q in -bound + 1..bound {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let (pz, qz) = (Z::from(p), Z::from(q));
                if self.eval(&pz, &qz) != self.eval(&pz, &(&qz + &pz)) {
                    return Report::fail(checked, format!("({p}, {q})"));
                }
                checked += 1;
            }
        }
        Report::ok(checked)
    }
}

/// `R(p, q) = D(p, q) − D(q, −p)`.
pub fn symbol_to_reciprocity<V: Group + 'static>(d: &DedekindSymbol<V>) -> ReciprocityFunction<V> {
    let d = d.clone();
    ReciprocityFunction::new(d.zero.clone(), move |p, q| d.eval(p, q).sub(&d.eval(q, &-p)))
}

/// The primitive segment `[a/p, b/q] ⊂ [0, 1]` attached to `(p, q)`.
pub fn segment_of_pair(p: &Z, q: &Z) -> Result<Segment> {
    if !p.is_positive() || !q.is_positive() || !p.gcd(q).is_one() {
        return Err(Error::Domain(format!("({p}, {q}) is not a coprime pair of positive integers")));
    }
    // b·p − a·q = 1 with 1 ≤ b ≤ q.
    let g = p.extended_gcd(q);
    let b = (g.x - Z::one()).mod_floor(q) + Z::one();
    let a = (&b * p - Z::one()) / q;
    Ok(Segment { from: P1::new(a, p.clone())?, to: P1::new(b, q.clone())? })
}

/// Denominators of a positively oriented primitive segment inside `[0, 1]`.
pub fn pair_of_segment(s: &Segment) -> Result<(Z, Z)> {
    let bad = || Error::Domain(format!("{s} is not a positively oriented segment in [0, 1]"));
    let (x, y) = (s.from.to_q().ok_or_else(bad)?, s.to.to_q().ok_or_else(bad)?);
    if x.is_negative() || y > Q::one() || x >= y {
        return Err(bad());
    }
    Ok((s.from.den().clone(), s.to.den().clone()))
}

/// `R_{μ,n}(p, q) = μ(n + a/p, n + b/q)`.
pub fn reciprocity_from_measure<M>(mu: Arc<M>, n: i64) -> ReciprocityFunction<M::V>
where
    M: PseudoMeasure + 'static,
    M::V: 'static,
{
    let shift = Q::from_integer(Z::from(n));
    ReciprocityFunction::new(mu.zero(), move |p, q| {
        let s = segment_of_pair(p, q).expect("coprime positive pair");
        let t = |x: &P1| P1::from_q(&(x.to_q().expect("finite") + &shift));
        mu.premeasure(&Segment { from: t(&s.from), to: t(&s.to) })
    })
}

/// `n ↦ R_n`.
#[derive(Clone)]
pub struct ReciprocityFamily<V> {
    rule: Arc<dyn Fn(i64) -> ReciprocityFunction<V> + Send + Sync>,
}

impl<V: Group + 'static> ReciprocityFamily<V> {
    pub fn new(rule: impl Fn(i64) -> ReciprocityFunction<V> + Send + Sync + 'static) -> Self {
        ReciprocityFamily { rule: Arc::new(rule) }
    }

    /// The same function for every n.
    pub fn constant(r: ReciprocityFunction<V>) -> Self {
        ReciprocityFamily::new(move |_| r.clone())
    }

    pub fn at(&self, n: i64) -> ReciprocityFunction<V> {
        (self.rule)(n)
    }
}

/// `{R_{μ,n}}` and `ω = μ(∞, 0)`.
pub fn family_from_measure<M>(mu: Arc<M>) -> (ReciprocityFamily<M::V>, M::V)
where
    M: PseudoMeasure + 'static,
    M::V: 'static,
{
    let omega = mu.eval(&P1::infinity(), &P1::int(0));
    let m = mu.clone();
    (ReciprocityFamily::new(move |n| reciprocity_from_measure(m.clone(), n)), omega)
}

/// The pre-measure assembled from `{R_n, ω}`.
#[derive(Clone)]
pub struct DedekindMeasure<V> {
    family: ReciprocityFamily<V>,
    omega: V,
    zero: V,
}

/// Translates `|n| ≤ FAMILY_CHECK_SHIFT` and pairs with `p + q ≤
/// FAMILY_CHECK_BOUND` are checked when a family is accepted.
pub const FAMILY_CHECK_SHIFT: i64 = 3;
pub const FAMILY_CHECK_BOUND: u64 = 30;

impl<V: Group + 'static> DedekindMeasure<V> {
    pub fn omega(&self) -> &V {
        &self.omega
    }

    fn r11(&self, n: i64) -> V {
        self.family.at(n).eval(&Z::one(), &Z::one())
    }

    /// `μ(∞, n)`: ω plus the unit-interval values between 0 and n.
    fn from_infinity(&self, n: &Z) -> V {
        let n: i64 = n.try_into().expect("integer vertex in range");
        let mut acc = self.omega.clone();
        if n >= 0 {
            for k in 0..n {
                acc = acc.add(&self.r11(k));
            }
        } else {
            for k in n..0 {
                acc = acc.sub(&self.r11(k));
            }
        }
        acc
    }
}

impl<V: Group + 'static> PseudoMeasure for DedekindMeasure<V> {
    type V = V;

    fn zero(&self) -> V {
        self.zero.clone()
    }

    fn premeasure(&self, s: &Segment) -> V {
        if s.from.is_infinite() {
            return self.from_infinity(s.to.num());
        }
        if s.to.is_infinite() {
            return self.from_infinity(s.from.num()).neg();
        }
        let (x, y) = (s.from.to_q().unwrap(), s.to.to_q().unwrap());
        let (lo, hi, sign) = if x < y { (x, y, false) } else { (y, x, true) };
        let n = lo.floor();
        let (a, b) = (P1::from_q(&(&lo - &n)), P1::from_q(&(&hi - &n)));
        let v = self.family.at(n.to_integer().try_into().expect("shift in range")).eval(a.den(), b.den());
        if sign {
            v.neg()
        } else {
            v
        }
    }
}

/// Builds the pre-measure of `{R_n, ω}` after checking the functional
/// equation on the translates and pairs bounded by the constants above.
pub fn measure_from_reciprocity<V: Group + 'static>(family: ReciprocityFamily<V>, omega: V) -> Result<DedekindMeasure<V>> {
    for n in -FAMILY_CHECK_SHIFT..=FAMILY_CHECK_SHIFT {
        let r = family.at(n).check_functional_equation(FAMILY_CHECK_BOUND);
        if !r.pass {
            return Err(Error::Inconsistent(format!("R_{n} fails the functional equation at {}", r.witness.unwrap_or_default())));
        }
    }
    let zero = omega.sub(&omega);
    Ok(DedekindMeasure { family, omega, zero })
}

/// Primitive segments `(∞, n)` for `n ∈ [−shift, shift + 1]` and the
/// segments of the first `depth` mediant levels inside each `[n, n+1]`,
/// `|n| ≤ shift`, each in positive orientation.
pub fn farey_segments(depth: usize, shift: i64) -> Vec<Segment> {
    let mut out: Vec<Segment> = (-shift..=shift + 1).map(|n| Segment { from: P1::infinity(), to: P1::int(n) }).collect();
    for n in -shift..=shift {
        let mut level = vec![((Z::from(n), Z::one()), (Z::from(n + 1), Z::one()))];
        for k in 0..=depth {
            let mut next = Vec::new();
            for ((a, c), (b, d)) in level {
                out.push(Segment { from: P1::new(a.clone(), c.clone()).unwrap(), to: P1::new(b.clone(), d.clone()).unwrap() });
                if k < depth {
                    let m = (&a + &b, &c + &d);
                    next.push(((a, c), m.clone()));
                    next.push((m, (b, d)));
                }
            }
            level = next;
        }
    }
    out
}

/// Rebuilds μ from `{R_{μ,n}, μ(∞, 0)}` and compares on [`farey_segments`].
pub fn round_trip_check<M>(mu: Arc<M>, depth: usize, shift: i64) -> Result<Report>
where
    M: PseudoMeasure + 'static,
    M::V: 'static,
{
    let (family, omega) = family_from_measure(mu.clone());
    let rebuilt = measure_from_reciprocity(family, omega.clone())?;
    let mut checked = 0;
    for s in farey_segments(depth, shift) {
        for t in [s.clone(), s.reversed()] {
            if rebuilt.premeasure(&t) != mu.premeasure(&t) {
                return Ok(Report::fail(checked, format!("{t}")));
            }
            checked += 1;
        }
    }
    if rebuilt.eval(&P1::infinity(), &P1::int(0)) != omega {
        return Ok(Report::fail(checked, "ω".into()));
    }
    Ok(Report::ok(checked))
}

/// `R_{μ,n} = R_{μ,0}` for `|n| ≤ shifts` on pairs with `p + q ≤ bound`, and
/// `R_{μ,0}(1, 1) = 0`.
pub fn shift_invariant_measure_check<M>(mu: Arc<M>, shifts: i64, bound: u64) -> bool
where
    M: PseudoMeasure + 'static,
    M::V: 'static,
{
    let r0 = reciprocity_from_measure(mu.clone(), 0);
    if !r0.eval(&Z::one(), &Z::one()).vanishes() {
        return false;
    }
    (-shifts..=shifts).all(|n| {
        let rn = reciprocity_from_measure(mu.clone(), n);
        rn.eval(&Z::one(), &Z::one()) == r0.eval(&Z::one(), &Z::one())
            && coprime_pairs(bound).all(|(p, q)| rn.eval(&p, &q) == r0.eval(&p, &q))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{q, qi, Mat2};
    use crate::coeff::{CosetTable, Induced, Poly, Trivial};
    use num_traits::Zero;
    use crate::linalg;
    use crate::measure::{parity_parts, validate_premeasure, FreeAbelian, Universal, UnimodularAction, ZeroMeasure};
    use crate::modular::{basis_measures, from_seed, seed_space, FromSeed, Restrict};

    fn seg(a: &str, b: &str) -> Segment {
        Segment { from: a.parse().unwrap(), to: b.parse().unwrap() }
    }

    fn square() -> Arc<DynM> {
        Arc::new(crate::measure::rule(Q::zero(), |s: &Segment| {
            let f = |x: &P1| x.to_q().map_or(qi(7), |v| &v * &v);
            f(&s.to) - f(&s.from)
        }))
    }

    type DynM = crate::measure::DynMeasure<Q>;

    #[test]
    fn pair_segment_bijection() {
        assert_eq!(segment_of_pair(&Z::one(), &Z::one()).unwrap(), seg("0", "1"));
        assert_eq!(segment_of_pair(&Z::from(3), &Z::from(2)).unwrap(), seg("1/3", "1/2"));
        for (p, q) in coprime_pairs(40) {
            let s = segment_of_pair(&p, &q).unwrap();
            assert!(crate::farey::is_primitive(&s.from, &s.to));
            assert_eq!(pair_of_segment(&s).unwrap(), (p.clone(), q.clone()));
            // (p, q) ↦ (q, p) is I ↦ 1 − I.
            let r = segment_of_pair(&q, &p).unwrap();
            assert_eq!(r.from.to_q().unwrap(), qi(1) - s.to.to_q().unwrap());
        }
        assert!(segment_of_pair(&Z::from(2), &Z::from(4)).is_err());
    }

    #[test]
    fn reciprocity_examples() {
        let mu = square();
        let r0 = reciprocity_from_measure(mu.clone(), 0);
        assert_eq!(r0.eval(&Z::one(), &Z::one()), mu.eval(&P1::int(0), &P1::int(1)));
        assert_eq!(r0.eval(&Z::from(3), &Z::from(2)), mu.eval(&P1::frac(1, 3), &P1::frac(1, 2)));
        // Farey triple 1/3, 2/5, 1/2 read through (3,2) → (3,5), (5,2).
        let lhs = r0.eval(&Z::from(5), &Z::from(2)).add(&r0.eval(&Z::from(3), &Z::from(5)));
        assert_eq!(lhs, r0.eval(&Z::from(3), &Z::from(2)));
        for n in -3..=3 {
            assert!(reciprocity_from_measure(mu.clone(), n).check_functional_equation(100).pass);
        }
    }

    #[test]
    fn zero_family() {
        let zero = ReciprocityFunction::new(qi(0), |_, _| qi(0));
        let mu = measure_from_reciprocity(ReciprocityFamily::constant(zero), q(5, 3)).unwrap();
        assert_eq!(mu.eval(&P1::infinity(), &P1::int(0)), q(5, 3));
        for n in -3..3 {
            assert_eq!(mu.eval(&P1::int(n), &P1::int(n + 1)), qi(0));
        }
        assert!(validate_premeasure(&mu, 4).pass);
    }

    #[test]
    fn infinite_segments_accumulate_unit_values() {
        let r = reciprocity_from_measure(square(), 0);
        let fam = ReciprocityFamily::new(move |n| {
            let r = r.clone();
            ReciprocityFunction::new(qi(0), move |p, q| r.eval(p, q) * qi(n + 2))
        });
        let omega = qi(4);
        let mu = measure_from_reciprocity(fam.clone(), omega.clone()).unwrap();
        let inf = P1::infinity();
        assert_eq!(mu.eval(&inf, &P1::int(1)), omega.clone() + fam.at(0).eval(&Z::one(), &Z::one()));
        assert_eq!(mu.eval(&inf, &P1::int(-2)), omega - fam.at(-1).eval(&Z::one(), &Z::one()) - fam.at(-2).eval(&Z::one(), &Z::one()));
        assert!(validate_premeasure(&mu, 5).pass);
    }

    #[test]
    fn bad_family_is_rejected() {
        let bad = ReciprocityFunction::new(qi(0), |p, _| Q::from_integer(p.clone()));
        assert!(measure_from_reciprocity(ReciprocityFamily::constant(bad), qi(0)).is_err());
    }

    #[test]
    fn round_trips() {
        assert!(round_trip_check(square(), 6, 2).unwrap().pass);
        for mu in basis_measures(&seed_space(10)) {
            assert!(round_trip_check(Arc::new(mu), 6, 2).unwrap().pass);
        }
        assert!(round_trip_check(Arc::new(Universal), 4, 2).unwrap().pass);
    }

    #[test]
    fn symbols_give_reciprocity_functions() {
        let zero = DedekindSymbol::new(qi(0), |_, _| qi(0));
        assert!(symbol_to_reciprocity(&zero).table(20).iter().all(|e| e.value.is_zero()));
        let constant = DedekindSymbol::new(qi(0), |_, _| q(3, 4));
        assert!(symbol_to_reciprocity(&constant).table(20).iter().all(|e| e.value.is_zero()));
        let d = DedekindSymbol::from_residues(qi(0), |p, r| Q::new(r * r + Z::from(3), p.clone()));
        assert!(d.check_periodicity(15).pass);
        let r = symbol_to_reciprocity(&d);
        // (2,3): R(5,3) + R(2,5) = R(2,3) expanded through D.
        let dd = |p: i64, q: i64| d.eval(&Z::from(p), &Z::from(q));
        assert_eq!(dd(5, 3) - dd(3, -5) + dd(2, 5) - dd(5, -2), dd(2, 3) - dd(3, -2));
        assert!(r.check_functional_equation(60).pass);
    }

    #[test]
    fn shift_invariance() {
        assert!(shift_invariant_measure_check(Arc::new(ZeroMeasure(qi(0))), 3, 20));
        assert!(!shift_invariant_measure_check(Arc::new(Universal), 2, 10));
        assert!(!shift_invariant_measure_check(square(), 2, 10));
    }

    /// A Γ₀(N)-modular measure with trivial coefficients; shifts lie in
    /// Γ₀(N), so the measure is shift-invariant.
    fn gamma0_trivial_measure(n: u64) -> Option<Restrict<FromSeed<Induced<Trivial<Q>>>>> {
        let table = Arc::new(CosetTable::gamma0(n));
        let k = table.index();
        let unit = |j: usize| {
            let vals = (0..k).map(|i| Trivial(if i == j { qi(1) } else { qi(0) })).collect();
            Induced::wrap(table.clone(), vals).unwrap()
        };
        let column = |v: &Induced<Trivial<Q>>| v.unwrap_values().iter().map(|t| t.0.clone()).collect::<Vec<Q>>();
        let mut rows = vec![vec![qi(0); k]; 2 * k];
        for j in 0..k {
            let e = unit(j);
            let s = column(&e.add(&e.act(&Mat2::sigma())));
            let t = Mat2::tau();
            let u = column(&e.add(&e.act(&t)).add(&e.act(&t.mul(&t))));
            for i in 0..k {
                rows[i][j] = s[i].clone();
                rows[k + i][j] = u[i].clone();
            }
        }
        let ker = linalg::kernel(&rows, k);
        let v = ker.first()?;
        let seed = Induced::wrap(table.clone(), v.iter().map(|x| Trivial(x.clone())).collect()).unwrap();
        Some(Restrict(from_seed(seed).unwrap()))
    }

    #[test]
    fn modular_shift_invariant_measure() {
        let mu = gamma0_trivial_measure(11).expect("non-zero seed");
        assert!(validate_premeasure(&mu, 4).pass);
        assert!(shift_invariant_measure_check(Arc::new(mu), 3, 25));
    }

    #[test]
    fn even_shift_invariant_measures_vanish_on_unit_interval() {
        let d = DedekindSymbol::from_residues(qi(0), |p, r| Q::new(r * Z::from(2) + Z::one(), p * p));
        let fam = ReciprocityFamily::constant(symbol_to_reciprocity(&d));
        let mu = measure_from_reciprocity(fam, qi(2)).unwrap();
        assert!(shift_invariant_measure_check(Arc::new(mu.clone()), 3, 20));
        let (even, _) = parity_parts(mu);
        assert!(validate_premeasure(&even, 4).pass);
        assert_eq!(even.eval(&P1::int(0), &P1::int(1)), qi(0));
    }

    #[test]
    fn free_abelian_family_differs_across_shifts() {
        let (fam, omega) = family_from_measure(Arc::new(Universal));
        assert_eq!(omega, FreeAbelian::point(&P1::int(0)).sub(&FreeAbelian::point(&P1::infinity())));
        assert_ne!(fam.at(0).eval(&Z::one(), &Z::one()), fam.at(1).eval(&Z::one(), &Z::one()));
    }

    #[test]
    fn polynomial_values_round_trip() {
        let mu = Arc::new(from_seed(Poly::eisenstein(4)).unwrap());
        assert!(round_trip_check(mu, 5, 1).unwrap().pass);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn random_symbols_round_trip(coeffs in prop::collection::vec(-5i64..6, 4), omega in -9i64..10) {
                let c = coeffs.clone();
                let d = DedekindSymbol::from_residues(qi(0), move |p, r| {
                    let (p, r) = (Q::from_integer(p.clone()), Q::from_integer(r.clone()));
                    qi(c[0]) + qi(c[1]) * &r / &p + qi(c[2]) * &r * &r / (&p * &p) + qi(c[3]) / &p
                });
                let r = symbol_to_reciprocity(&d);
                prop_assert!(r.check_functional_equation(40).pass);
                let mu = Arc::new(measure_from_reciprocity(ReciprocityFamily::constant(r), qi(omega)).unwrap());
                prop_assert!(validate_premeasure(&*mu, 4).pass);
                prop_assert!(shift_invariant_measure_check(mu.clone(), 2, 15));
                prop_assert!(round_trip_check(mu, 4, 2).unwrap().pass);
            }
        }
    }
}
