//! Pseudo-measures: finitely additive functions of pairs of boundary points,
//! given by a rule on primitive segments and extended along chains.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::boundary::{ContinuedFraction, Mat2, QMat2, P1, Q, Z};
use crate::farey::{primitive_chain, Segment};

/// Abelian value group. Zero comes from context (see [`PseudoMeasure::zero`]).
pub trait Group: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn vanishes(&self) -> bool;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Integer multiple by double-and-add.
    fn times(&self, n: &Z) -> Self {
        let mut acc: Option<Self> = None;
        let mut base = if n.is_negative() { self.neg() } else { self.clone() };
        let mut k = n.abs();
        while !k.is_zero() {
            if k.is_odd() {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.add(&base),
                });
            }
            base = base.add(&base);
            k >>= 1;
        }
        acc.unwrap_or_else(|| self.sub(self))
    }
}

/// Value groups that are Q-vector spaces.
pub trait Scalars: Group {
    fn scale(&self, c: &Q) -> Self;
}

/// Left action of SL(2,Z).
pub trait UnimodularAction: Group {
    fn act(&self, g: &Mat2) -> Self;
}

/// Left action of GL⁺(2,Q).
pub trait RationalAction: UnimodularAction {
    fn act_q(&self, g: &QMat2) -> Self;
}

impl Group for Q {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalars for Q {
    fn scale(&self, c: &Q) -> Self {
        self * c
    }
}

impl Group for Z {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Finite integer combination of points, Σ m_i ν(α_i).
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FreeAbelian(pub BTreeMap<P1, Z>);

impl FreeAbelian {
    pub fn zero() -> Self {
        FreeAbelian(BTreeMap::new())
    }

    pub fn point(x: &P1) -> Self {
        FreeAbelian(BTreeMap::from([(x.clone(), Z::one())]))
    }

    pub fn augmentation(&self) -> Z {
        self.0.values().sum()
    }

    pub fn coeff(&self, x: &P1) -> Z {
        self.0.get(x).cloned().unwrap_or_default()
    }
}

impl Group for FreeAbelian {
    fn add(&self, o: &Self) -> Self {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            let e = m.entry(k.clone()).or_default();
            *e += v;
            if Zero::is_zero(e) {
                m.remove(k);
            }
        }
        FreeAbelian(m)
    }
    fn neg(&self) -> Self {
        FreeAbelian(self.0.iter().map(|(k, v)| (k.clone(), -v)).collect())
    }
    fn vanishes(&self) -> bool {
        self.0.is_empty()
    }
}

/// Permutation action g·ν(x) = ν(gx).
impl UnimodularAction for FreeAbelian {
    fn act(&self, g: &Mat2) -> Self {
        self.0
            .iter()
            .fold(FreeAbelian::zero(), |acc, (k, v)| acc.add(&FreeAbelian::point(&g.act(k)).times(v)))
    }
}

impl RationalAction for FreeAbelian {
    fn act_q(&self, g: &QMat2) -> Self {
        self.0
            .iter()
            .fold(FreeAbelian::zero(), |acc, (k, v)| acc.add(&FreeAbelian::point(&g.act(k)).times(v)))
    }
}

impl fmt::Display for FreeAbelian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self.0.iter().map(|(k, v)| format!("{v}·ν({k})")).collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// A pseudo-measure given by its pre-measure on primitive segments.
pub trait PseudoMeasure: Send + Sync {
    type V: Group;

    fn zero(&self) -> Self::V;

    /// Value on a primitive segment.
    fn premeasure(&self, s: &Segment) -> Self::V;

    fn eval_chain(&self, chain: &[Segment]) -> Self::V {
        chain.iter().fold(self.zero(), |acc, s| acc.add(&self.premeasure(s)))
    }

    /// μ(a, b) summed over the canonical chain.
    fn eval(&self, a: &P1, b: &P1) -> Self::V {
        self.eval_chain(&primitive_chain(a, b))
    }
}

impl<M: PseudoMeasure + ?Sized> PseudoMeasure for &M {
    type V = M::V;
    fn zero(&self) -> M::V {
        (**self).zero()
    }
    fn premeasure(&self, s: &Segment) -> M::V {
        (**self).premeasure(s)
    }
    fn eval(&self, a: &P1, b: &P1) -> M::V {
        (**self).eval(a, b)
    }
}

impl<M: PseudoMeasure + ?Sized> PseudoMeasure for Box<M> {
    type V = M::V;
    fn zero(&self) -> M::V {
        (**self).zero()
    }
    fn premeasure(&self, s: &Segment) -> M::V {
        (**self).premeasure(s)
    }
    fn eval(&self, a: &P1, b: &P1) -> M::V {
        (**self).eval(a, b)
    }
}

impl<M: PseudoMeasure + ?Sized> PseudoMeasure for Arc<M> {
    type V = M::V;
    fn zero(&self) -> M::V {
        (**self).zero()
    }
    fn premeasure(&self, s: &Segment) -> M::V {
        (**self).premeasure(s)
    }
    fn eval(&self, a: &P1, b: &P1) -> M::V {
        (**self).eval(a, b)
    }
}

pub type DynMeasure<V> = Arc<dyn PseudoMeasure<V = V>>;

/// Pre-measure given by a closure.
pub struct Rule<V, F> {
    zero: V,
    rule: F,
}

impl<V: Group, F: Fn(&Segment) -> V + Send + Sync> Rule<V, F> {
    pub fn new(zero: V, rule: F) -> Self {
        Rule { zero, rule }
    }
}

impl<V: Group, F: Fn(&Segment) -> V + Send + Sync> PseudoMeasure for Rule<V, F> {
    type V = V;
    fn zero(&self) -> V {
        self.zero.clone()
    }
    fn premeasure(&self, s: &Segment) -> V {
        (self.rule)(s)
    }
}

pub fn rule<V: Group + 'static, F: Fn(&Segment) -> V + Send + Sync + 'static>(zero: V, f: F) -> DynMeasure<V> {
    Arc::new(Rule::new(zero, f))
}

/// μ^U(α, β) = ν(β) − ν(α).
#[derive(Clone, Copy, Debug, Default)]
pub struct Universal;

impl PseudoMeasure for Universal {
    type V = FreeAbelian;
    fn zero(&self) -> FreeAbelian {
        FreeAbelian::zero()
    }
    fn premeasure(&self, s: &Segment) -> FreeAbelian {
        FreeAbelian::point(&s.to).sub(&FreeAbelian::point(&s.from))
    }
    fn eval(&self, a: &P1, b: &P1) -> FreeAbelian {
        FreeAbelian::point(b).sub(&FreeAbelian::point(a))
    }
}

/// The homomorphism w on augmentation-zero combinations with μ = w∘μ^U,
/// w(ν(β) − ν(α)) = μ(α, β). Built from α ↦ μ(∞, α).
pub fn factor_through_universal<'a, M: PseudoMeasure>(mu: &'a M) -> impl Fn(&FreeAbelian) -> M::V + 'a {
    move |x: &FreeAbelian| {
        debug_assert!(x.augmentation().is_zero());
        x.0.iter()
            .fold(mu.zero(), |acc, (pt, m)| acc.add(&mu.eval(&P1::infinity(), pt).times(m)))
    }
}

pub struct Sum<A, B>(pub A, pub B);

impl<A: PseudoMeasure, B: PseudoMeasure<V = A::V>> PseudoMeasure for Sum<A, B> {
    type V = A::V;
    fn zero(&self) -> A::V {
        self.0.zero()
    }
    fn premeasure(&self, s: &Segment) -> A::V {
        self.0.premeasure(s).add(&self.1.premeasure(s))
    }
}

pub struct Neg<A>(pub A);

impl<A: PseudoMeasure> PseudoMeasure for Neg<A> {
    type V = A::V;
    fn zero(&self) -> A::V {
        self.0.zero()
    }
    fn premeasure(&self, s: &Segment) -> A::V {
        self.0.premeasure(s).neg()
    }
}

/// Zero measure with the given zero value.
pub struct ZeroMeasure<V>(pub V);

impl<V: Group> PseudoMeasure for ZeroMeasure<V> {
    type V = V;
    fn zero(&self) -> V {
        self.0.clone()
    }
    fn premeasure(&self, _: &Segment) -> V {
        self.0.clone()
    }
}

/// (μg)(α, β) = μ(gα, gβ).
pub struct RightAct<A> {
    pub inner: A,
    pub g: QMat2,
    integral: Option<Mat2>,
}

impl<A: PseudoMeasure> RightAct<A> {
    pub fn new(inner: A, g: QMat2) -> Self {
        assert!(!g.det().is_zero(), "singular matrix");
        let integral = g.to_integer().filter(Mat2::is_unimodular);
        RightAct { inner, g, integral }
    }
}

impl<A: PseudoMeasure> PseudoMeasure for RightAct<A> {
    type V = A::V;
    fn zero(&self) -> A::V {
        self.inner.zero()
    }
    fn premeasure(&self, s: &Segment) -> A::V {
        match &self.integral {
            // GL(2,Z) keeps segments primitive.
            Some(g) => self.inner.premeasure(&s.map(g)),
            None => self.inner.eval(&self.g.act(&s.from), &self.g.act(&s.to)),
        }
    }
}

pub fn reflection() -> QMat2 {
    Mat2::from_i64(-1, 0, 0, 1).to_q()
}

/// Image under z ↦ −z.
pub fn involution_image<A: PseudoMeasure>(mu: A) -> RightAct<A> {
    RightAct::new(mu, reflection())
}

/// Even and odd parts (μ ± μι)/2.
pub fn parity_parts<A>(mu: A) -> (DynMeasure<A::V>, DynMeasure<A::V>)
where
    A: PseudoMeasure + 'static,
    A::V: Scalars + 'static,
{
    let mu = Arc::new(mu);
    let refl = Mat2::from_i64(-1, 0, 0, 1);
    let half = Q::new(Z::one(), Z::from(2));
    let (m1, r1, h1) = (mu.clone(), refl.clone(), half.clone());
    let even = rule(mu.zero(), move |s: &Segment| m1.premeasure(s).add(&m1.premeasure(&s.map(&r1))).scale(&h1));
    let (m2, r2, h2) = (mu.clone(), refl, half);
    let odd = rule(mu.zero(), move |s: &Segment| m2.premeasure(s).sub(&m2.premeasure(&s.map(&r2))).scale(&h2));
    (even, odd)
}

/// Thread-safe cache of pre-measure values.
pub struct Memo<A: PseudoMeasure> {
    inner: A,
    cache: RwLock<HashMap<Segment, A::V>>,
}

impl<A: PseudoMeasure> Memo<A> {
    pub fn new(inner: A) -> Self {
        Memo { inner, cache: RwLock::new(HashMap::new()) }
    }

    pub fn cached(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }
}

impl<A: PseudoMeasure> PseudoMeasure for Memo<A> {
    type V = A::V;
    fn zero(&self) -> A::V {
        self.inner.zero()
    }
    fn premeasure(&self, s: &Segment) -> A::V {
        if let Some(v) = self.cache.read().expect("cache lock").get(s) {
            return v.clone();
        }
        let v = self.inner.premeasure(s);
        self.cache.write().expect("cache lock").insert(s.clone(), v.clone());
        v
    }
}

/// Bounds for depth-limited pre-measure validation.
#[derive(Clone, Debug)]
pub struct Bounds {
    /// Maximal continued-fraction length of a tested vertex.
    pub depth: usize,
    /// Maximal denominator of a tested vertex.
    pub max_den: u64,
    /// Integer translates n with |n| ≤ shift are tested.
    pub shift: i64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { depth: 64, max_den: 50, shift: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

impl Report {
    pub fn ok(checked: usize) -> Report {
        Report { pass: true, checked, witness: None }
    }

    pub fn fail(checked: usize, witness: String) -> Report {
        Report { pass: false, checked, witness: Some(witness) }
    }
}

fn cf_len(x: &P1) -> usize {
    x.to_q().map_or(0, |v| ContinuedFraction::expand(&v).partials.len())
}

/// Triangles of the Farey tessellation within the bounds, each as the
/// positively ordered vertex triple.
pub fn farey_triangles(b: &Bounds) -> Vec<[P1; 3]> {
    let mut out = Vec::new();
    for n in -b.shift..=b.shift {
        out.push([P1::infinity(), P1::int(n), P1::int(n + 1)]);
        // Farey neighbours x < y in [n, n+1] with mediant denominator ≤ max_den.
        let mut stack = vec![((Z::from(n), Z::one()), (Z::from(n + 1), Z::one()))];
        while let Some(((a, c), (bb, d))) = stack.pop() {
            let (m, k) = (&a + &bb, &c + &d);
            if k > Z::from(b.max_den) {
                continue;
            }
            let tri = [
                P1::new(a.clone(), c.clone()).unwrap(),
                P1::new(m.clone(), k.clone()).unwrap(),
                P1::new(bb.clone(), d.clone()).unwrap(),
            ];
            if tri.iter().all(|v| cf_len(v) <= b.depth) {
                out.push(tri);
            }
            stack.push(((a, c), (m.clone(), k.clone())));
            stack.push(((m, k), (bb, d)));
        }
    }
    out
}

/// Checks antisymmetry and the triangle relation on every Farey triangle
/// within `bounds`.
pub fn validate_premeasure_with<M: PseudoMeasure>(mu: &M, bounds: &Bounds) -> Report {
    let mut checked = 0;
    for [x, y, z] in farey_triangles(bounds) {
        let edges = [
            Segment { from: x.clone(), to: y.clone() },
            Segment { from: y.clone(), to: z.clone() },
            Segment { from: z.clone(), to: x.clone() },
        ];
        let mut total = mu.zero();
        for e in &edges {
            let v = mu.premeasure(e);
            if !v.add(&mu.premeasure(&e.reversed())).vanishes() {
                return Report::fail(checked, format!("antisymmetry fails on {e}"));
            }
            total = total.add(&v);
        }
        if !total.vanishes() {
            return Report::fail(checked, format!("triangle ({x}, {y}, {z}) sums to {total:?}"));
        }
        checked += 1;
    }
    Report::ok(checked)
}

pub fn validate_premeasure<M: PseudoMeasure>(mu: &M, depth: usize) -> Report {
    validate_premeasure_with(mu, &Bounds { depth, ..Bounds::default() })
}

/// Golden-test record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord<V> {
    pub segment: Segment,
    pub value: V,
}

pub fn fixture<M: PseudoMeasure>(mu: &M, segments: &[Segment]) -> Vec<FixtureRecord<M::V>> {
    segments
        .iter()
        .map(|s| FixtureRecord { segment: s.clone(), value: mu.premeasure(s) })
        .collect()
}

/// First record whose stored value differs from the measure.
pub fn check_fixture<M: PseudoMeasure>(mu: &M, records: &[FixtureRecord<M::V>]) -> Option<Segment> {
    records.iter().find(|r| mu.premeasure(&r.segment) != r.value).map(|r| r.segment.clone())
}

/// Serde adapter writing rationals as "p/q" strings.
pub mod q_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        crate::boundary::parse_q(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{q, qi};

    fn p(s: &str) -> P1 {
        s.parse().unwrap()
    }

    fn nu(s: &str) -> FreeAbelian {
        FreeAbelian::point(&p(s))
    }

    /// A Q-valued measure that is neither even nor modular: x ↦ x² on
    /// finite points, differenced.
    fn square_measure() -> DynMeasure<Q> {
        let f = |x: &P1| x.to_q().map(|v| &v * &v).unwrap_or_else(|| qi(7));
        rule(qi(0), move |s: &Segment| f(&s.to) - f(&s.from))
    }

    #[test]
    fn universal_values() {
        assert_eq!(Universal.eval(&p("1/2"), &p("3/7")), nu("3/7").sub(&nu("1/2")));
        assert_eq!(Universal.eval_chain(&primitive_chain(&p("1/2"), &p("3/7"))), nu("3/7").sub(&nu("1/2")));
        assert_eq!(Universal.eval(&p("inf"), &p("0")), nu("0").sub(&nu("inf")));
        assert!(Universal.eval(&p("0"), &p("0")).vanishes());
    }

    #[test]
    fn validation_detects_constants() {
        assert!(validate_premeasure(&Universal, 8).pass);
        let c = rule(qi(0), |_| qi(1));
        let r = validate_premeasure(&c, 8);
        assert!(!r.pass);
        assert!(r.witness.unwrap().contains("antisymmetry"));
    }

    #[test]
    fn default_bounds_cover_denominators_to_fifty() {
        let tris = farey_triangles(&Bounds { shift: 0, ..Bounds::default() });
        let dens: std::collections::BTreeSet<Z> = tris.iter().flatten().map(|v| v.den().clone()).collect();
        assert!((1..=50).all(|d| dens.contains(&Z::from(d))));
        assert!(tris.iter().flatten().any(|v| *v == p("1/50")));
    }

    #[test]
    fn factorization_reproduces_measure() {
        let mu = square_measure();
        let w = factor_through_universal(&mu);
        for (a, b) in [("1/2", "3/7"), ("inf", "-5/3"), ("2", "inf")] {
            assert_eq!(w(&Universal.eval(&p(a), &p(b))), mu.eval(&p(a), &p(b)));
        }
    }

    #[test]
    fn right_action_and_involution() {
        let mu = square_measure();
        let id = RightAct::new(mu.clone(), QMat2::identity());
        assert_eq!(id.eval(&p("1/3"), &p("4")), mu.eval(&p("1/3"), &p("4")));
        let s = RightAct::new(mu.clone(), Mat2::sigma().to_q());
        assert_eq!(s.eval(&p("inf"), &p("0")), mu.eval(&p("0"), &p("inf")));
        assert_eq!(s.eval(&p("inf"), &p("0")), mu.eval(&p("inf"), &p("0")).neg());
        let u = involution_image(Universal);
        assert_eq!(u.eval(&p("0"), &p("1")), nu("-1").sub(&nu("0")));
        let twice = involution_image(involution_image(mu.clone()));
        assert_eq!(twice.eval(&p("2/9"), &p("-1/4")), mu.eval(&p("2/9"), &p("-1/4")));
        // Rational matrix goes through non-primitive images.
        let h = QMat2::diag(qi(2), qi(1));
        let m = RightAct::new(mu.clone(), h);
        assert_eq!(m.eval(&p("0"), &p("1/3")), mu.eval(&p("0"), &p("2/3")));
    }

    #[test]
    fn group_structure() {
        let mu = square_measure();
        let zero = Sum(mu.clone(), Neg(mu.clone()));
        assert!(zero.eval(&p("5/3"), &p("-2/7")).vanishes());
        let nu2 = rule(qi(0), |s: &Segment| if s.from.is_infinite() { qi(1) } else if s.to.is_infinite() { qi(-1) } else { qi(0) });
        let both = Sum(mu.clone(), nu2.clone());
        assert_eq!(both.eval(&p("inf"), &p("0")), mu.eval(&p("inf"), &p("0")) + nu2.eval(&p("inf"), &p("0")));
        assert!(ZeroMeasure(qi(0)).eval(&p("1/9"), &p("8")).vanishes());
    }

    #[test]
    fn parity_split() {
        let mu = square_measure();
        let (even, odd) = parity_parts(mu.clone());
        for (a, b) in [("1/2", "3/7"), ("inf", "-5/3"), ("0", "1")] {
            let (a, b) = (p(a), p(b));
            assert_eq!(even.eval(&a, &b) + odd.eval(&a, &b), mu.eval(&a, &b));
        }
        // x ↦ x² is even, so its measure is its own even part.
        assert_eq!(odd.eval(&p("0"), &p("1")), qi(0));
        assert!(validate_premeasure(&even, 6).pass);
    }

    #[test]
    fn memo_matches_and_fills() {
        let mu = Memo::new(square_measure());
        let v = mu.eval(&p("-7/5"), &p("13/8"));
        assert_eq!(v, square_measure().eval(&p("-7/5"), &p("13/8")));
        assert!(mu.cached() > 0);
        let mu = Arc::new(mu);
        let hs: Vec<_> = (0..4)
            .map(|i| {
                let m = mu.clone();
                std::thread::spawn(move || m.eval(&P1::infinity(), &P1::frac(i + 1, 7)))
            })
            .collect();
        for (i, h) in hs.into_iter().enumerate() {
            assert_eq!(h.join().unwrap(), q((i as i64 + 1).pow(2), 49) - qi(7));
        }
    }

    #[test]
    fn fixtures_round_trip() {
        let mu = square_measure();
        let segs = primitive_chain(&p("inf"), &p("5/8"));
        #[derive(Serialize, Deserialize)]
        struct Rec {
            segment: Segment,
            #[serde(with = "q_string")]
            value: Q,
        }
        let recs: Vec<Rec> = fixture(&mu, &segs).into_iter().map(|r| Rec { segment: r.segment, value: r.value }).collect();
        let text = serde_json::to_string(&recs).unwrap();
        let back: Vec<Rec> = serde_json::from_str(&text).unwrap();
        let back: Vec<FixtureRecord<Q>> = back.into_iter().map(|r| FixtureRecord { segment: r.segment, value: r.value }).collect();
        assert_eq!(check_fixture(&mu, &back), None);
        let mut bad = back.clone();
        bad[0].value = qi(99);
        assert_eq!(check_fixture(&mu, &bad), Some(segs[0].clone()));
    }

    mod props {
        use super::*;
        use crate::farey::randomize_chain;
        use proptest::prelude::*;
        use rand::SeedableRng;

        fn point() -> impl Strategy<Value = P1> {
            prop_oneof![
                1 => Just(P1::infinity()),
                8 => (-40i64..40, 1i64..30).prop_map(|(n, d)| P1::from_q(&q(n, d))),
            ]
        }

        fn mat() -> impl Strategy<Value = QMat2> {
            (1i64..5, -4i64..5, 1i64..5, 1i64..4)
                .prop_map(|(a, b, d, e)| QMat2::new(qi(a), qi(b), qi(0), q(d, e)))
        }

        proptest! {
            #[test]
            fn chain_independence(a in point(), b in point(), s in any::<u64>()) {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
                let mu = square_measure();
                let base = primitive_chain(&a, &b);
                let want = mu.eval(&a, &b);
                for _ in 0..3 {
                    let c = randomize_chain(&base, 5, &mut rng);
                    prop_assert_eq!(mu.eval_chain(&c), want.clone());
                    prop_assert_eq!(Universal.eval_chain(&c), Universal.eval(&a, &b));
                }
            }

            #[test]
            fn triangle_relation(a in point(), b in point(), c in point()) {
                let mu = square_measure();
                let t = mu.eval(&a, &b) + mu.eval(&b, &c) + mu.eval(&c, &a);
                prop_assert!(Zero::is_zero(&t));
                prop_assert!(Zero::is_zero(&(mu.eval(&a, &b) + mu.eval(&b, &a))));
            }

            #[test]
            fn right_action_composes(g in mat(), h in mat(), a in point(), b in point()) {
                let mu = square_measure();
                let lhs = RightAct::new(RightAct::new(mu.clone(), g.clone()), h.clone());
                let rhs = RightAct::new(mu, g.mul(&h));
                prop_assert_eq!(lhs.eval(&a, &b), rhs.eval(&a, &b));
            }

            #[test]
            fn universality(a in point(), b in point()) {
                let mu = square_measure();
                let w = factor_through_universal(&mu);
                prop_assert_eq!(w(&Universal.eval(&a, &b)), mu.eval(&a, &b));
            }

            #[test]
            fn times_matches_repeated_addition(n in -20i64..20, x in -30i64..30) {
                let v = qi(x);
                prop_assert_eq!(v.times(&Z::from(n)), qi(x * n));
                prop_assert_eq!(FreeAbelian::point(&P1::int(x)).times(&Z::from(n)).augmentation(), Z::from(n));
            }
        }
    }
}
