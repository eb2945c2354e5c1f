//! The tree of PSL(2,Z), currents on it, and integration of locally constant
//! functions on its space of ends.
//!
//! Three-valent vertices are Farey triangles `g{∞, 0, 1}`, two-valent
//! vertices are Farey edges `g{∞, 0}`. The edge `(g, slot 0, Away)` runs from
//! the triangle `g{∞,0,1}` to the midpoint of its side `g{∞,0}`; the ends
//! reached through it form the interval `(g∞, g0)`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::boundary::{Mat2, P1, Q, Z};
use crate::error::{Error, Result};
use crate::farey::Segment;
use crate::linalg;
use crate::measure::{Group, PseudoMeasure, Report, UnimodularAction};
use crate::modular::{from_seed, FromSeed};
use crate::quadratic::QuadSurd;

fn key(g: &Mat2) -> (Z, Z, Z, Z) {
    (g.a.clone(), g.b.clone(), g.c.clone(), g.d.clone())
}

fn min_class(candidates: impl IntoIterator<Item = Mat2>) -> Mat2 {
    candidates.into_iter().map(|g| g.psl_canonical()).min_by_key(key).expect("non-empty")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// From the three-valent vertex to the side midpoint.
    Away,
    Toward,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeEdge {
    element: Mat2,
    slot: u8,
    dir: Direction,
}

impl TreeEdge {
    /// Edge between `gρ` and the midpoint of the side `gτ^slot{∞,0}`.
    pub fn new(element: &Mat2, slot: u8, dir: Direction) -> TreeEdge {
        let g = element.mul(&Mat2::tau().pow(u32::from(slot % 3)));
        TreeEdge { element: g.psl_canonical(), slot: 0, dir }
    }

    /// The edge whose end set is the given primitive interval.
    pub fn of_interval(s: &Segment) -> TreeEdge {
        TreeEdge::new(&s.matrix(), 0, Direction::Away)
    }

    pub fn element(&self) -> &Mat2 {
        &self.element
    }

    pub fn slot(&self) -> u8 {
        self.slot
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }

    pub fn reversed(&self) -> TreeEdge {
        let dir = match self.dir {
            Direction::Away => Direction::Toward,
            Direction::Toward => Direction::Away,
        };
        TreeEdge { element: self.element.clone(), slot: self.slot, dir }
    }

    pub fn source(&self) -> Vertex {
        match self.dir {
            Direction::Away => Vertex::triangle(&self.element),
            Direction::Toward => Vertex::midpoint(&self.element),
        }
    }

    pub fn target(&self) -> Vertex {
        self.reversed().source()
    }

    /// Ends of admissible paths starting with this edge, as an interval.
    pub fn interval(&self) -> Segment {
        let s = Segment::of_matrix(&self.element);
        match self.dir {
            Direction::Away => s,
            Direction::Toward => s.reversed(),
        }
    }
}

impl fmt::Display for TreeEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.element;
        write!(f, "[{},{};{},{}]#{}:{:?}", g.a, g.b, g.c, g.d, self.slot, self.dir)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Vertex {
    /// `gρ`, canonical modulo right multiplication by τ.
    Triangle(Mat2),
    /// `g·i`, canonical modulo right multiplication by σ.
    Midpoint(Mat2),
}

impl Vertex {
    pub fn triangle(g: &Mat2) -> Vertex {
        let t = Mat2::tau();
        Vertex::Triangle(min_class([g.clone(), g.mul(&t), g.mul(&t).mul(&t)]))
    }

    pub fn midpoint(g: &Mat2) -> Vertex {
        Vertex::Midpoint(min_class([g.clone(), g.mul(&Mat2::sigma())]))
    }

    pub fn base() -> Vertex {
        Vertex::triangle(&Mat2::identity())
    }

    pub fn outgoing(&self) -> Vec<TreeEdge> {
        match self {
            Vertex::Triangle(g) => (0..3).map(|k| TreeEdge::new(g, k, Direction::Away)).collect(),
            Vertex::Midpoint(g) => {
                vec![TreeEdge::new(g, 0, Direction::Toward), TreeEdge::new(&g.mul(&Mat2::sigma()), 0, Direction::Toward)]
            }
        }
    }

    pub fn valence(&self) -> usize {
        match self {
            Vertex::Triangle(_) => 3,
            Vertex::Midpoint(_) => 2,
        }
    }
}

/// Triangles within `depth` steps of the base triangle, their side
/// midpoints, and every edge leaving one of these vertices.
pub fn subtree(depth: usize) -> (Vec<Vertex>, Vec<TreeEdge>) {
    let mut seen: HashSet<Vertex> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([(Vertex::base(), 0usize)]);
    seen.insert(Vertex::base());
    while let Some((v, d)) = queue.pop_front() {
        order.push(v.clone());
        for e in v.outgoing() {
            let m = e.target();
            if seen.insert(m.clone()) {
                order.push(m.clone());
            }
            if d < depth {
                for f in m.outgoing() {
                    let t = f.target();
                    if seen.insert(t.clone()) {
                        queue.push_back((t, d + 1));
                    }
                }
            }
        }
    }
    let mut edges = Vec::new();
    let mut have = HashSet::new();
    for v in &order {
        for e in v.outgoing() {
            if have.insert(e.clone()) {
                edges.push(e);
            }
        }
    }
    (order, edges)
}

/// A function on oriented edges.
#[derive(Clone)]
pub struct Current<V> {
    zero: V,
    rule: Arc<dyn Fn(&TreeEdge) -> V + Send + Sync>,
}

impl<V: Group> Current<V> {
    pub fn new(zero: V, rule: impl Fn(&TreeEdge) -> V + Send + Sync + 'static) -> Current<V> {
        Current { zero, rule: Arc::new(rule) }
    }

    pub fn value(&self, e: &TreeEdge) -> V {
        (self.rule)(e)
    }

    pub fn zero(&self) -> V {
        self.zero.clone()
    }
}

/// `c(e) = μ(V(e))`.
pub fn current_from_measure<M>(mu: M) -> Current<M::V>
where
    M: PseudoMeasure + 'static,
{
    let zero = mu.zero();
    Current::new(zero, move |e: &TreeEdge| mu.premeasure(&e.interval()))
}

/// `d(f)(v) = Σ_{s(e) = v} f(e)`.
pub fn divergence<V: Group>(c: &Current<V>, v: &Vertex) -> V {
    v.outgoing().iter().fold(c.zero(), |acc, e| acc.add(&c.value(e)))
}

/// Orientation reversal on every edge and momentum conservation at every
/// vertex of the depth-bounded subtree.
pub fn current_validate<V: Group>(c: &Current<V>, depth: usize) -> Report {
    let (vertices, edges) = subtree(depth);
    let mut checked = 0;
    for e in &edges {
        if !c.value(e).add(&c.value(&e.reversed())).vanishes() {
            return Report::fail(checked, format!("reversal fails on {e}"));
        }
        checked += 1;
    }
    for v in &vertices {
        if !divergence(c, v).vanishes() {
            return Report::fail(checked, format!("momentum not conserved at {v:?}"));
        }
        checked += 1;
    }
    Report::ok(checked)
}

/// The pseudo-measure of a current: `μ(V(e)) = c(e)`.
pub struct CurrentMeasure<V> {
    current: Current<V>,
}

impl<V: Group> PseudoMeasure for CurrentMeasure<V> {
    type V = V;
    fn zero(&self) -> V {
        self.current.zero()
    }
    fn premeasure(&self, s: &Segment) -> V {
        self.current.value(&TreeEdge::of_interval(s))
    }
}

pub fn measure_from_current<V: Group>(c: Current<V>, depth: usize) -> Result<CurrentMeasure<V>> {
    let r = current_validate(&c, depth);
    if !r.pass {
        return Err(Error::Inconsistent(r.witness.unwrap_or_default()));
    }
    Ok(CurrentMeasure { current: c })
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeJson {
    pub element: [[String; 2]; 2],
    pub slot: u8,
    pub dir: Direction,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeRecord<V> {
    pub edge: EdgeJson,
    pub interval: Segment,
    pub value: V,
}

pub fn current_dump<V: Group>(c: &Current<V>, depth: usize) -> Vec<EdgeRecord<V>> {
    let (_, edges) = subtree(depth);
    edges
        .into_iter()
        .map(|e| {
            let g = e.element();
            EdgeRecord {
                edge: EdgeJson {
                    element: [[g.a.to_string(), g.b.to_string()], [g.c.to_string(), g.d.to_string()]],
                    slot: e.slot(),
                    dir: e.direction(),
                },
                interval: e.interval(),
                value: c.value(&e),
            }
        })
        .collect()
}

/// SVG of the Farey sides in the subtree, upper half plane over
/// `[-span, span + 1]`, with a label on each away edge.
pub fn tessellation_svg(label: impl Fn(&TreeEdge) -> String, depth: usize, span: i64) -> String {
    let (w, h) = (900.0, 460.0);
    let (lo, hi) = (-span as f64 - 0.5, span as f64 + 1.5);
    let sx = |x: f64| (x - lo) / (hi - lo) * w;
    let base = h - 20.0;
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    out += &format!("<line x1=\"0\" y1=\"{base}\" x2=\"{w}\" y2=\"{base}\" stroke=\"black\"/>\n");
    let (_, edges) = subtree(depth);
    for e in edges.iter().filter(|e| e.direction() == Direction::Away) {
        let s = e.interval();
        let label = label(e);
        match (s.from.to_q(), s.to.to_q()) {
            (Some(a), Some(b)) => {
                let (a, b) = (num_traits::ToPrimitive::to_f64(&a).unwrap(), num_traits::ToPrimitive::to_f64(&b).unwrap());
                if a.min(b) < lo || a.max(b) > hi {
                    continue;
                }
                let r = (sx(a) - sx(b)).abs() / 2.0;
                let mid = (sx(a) + sx(b)) / 2.0;
                out += &format!(
                    "<path d=\"M {} {base} A {r} {r} 0 0 1 {} {base}\" fill=\"none\" stroke=\"gray\"/>\n",
                    sx(a.min(b)),
                    sx(a.max(b))
                );
                out += &format!("<text x=\"{mid}\" y=\"{}\" font-size=\"8\">{label}</text>\n", base - r.min(base - 10.0));
            }
            (Some(a), None) | (None, Some(a)) => {
                let a = num_traits::ToPrimitive::to_f64(&a).unwrap();
                if a < lo || a > hi {
                    continue;
                }
                out += &format!("<line x1=\"{0}\" y1=\"0\" x2=\"{0}\" y2=\"{base}\" stroke=\"gray\"/>\n", sx(a));
                out += &format!("<text x=\"{}\" y=\"12\" font-size=\"8\">{label}</text>\n", sx(a) + 2.0);
            }
            (None, None) => {}
        }
    }
    out + "</svg>\n"
}

/// `g⁻¹x` for the matrix `g` of an interval, so that the interval becomes
/// `(∞, 0)`, the negative half line.
fn normalize(s: &Segment, x: &P1) -> P1 {
    s.matrix().inverse().expect("unimodular").act(x)
}

pub fn open_contains(s: &Segment, x: &P1) -> bool {
    normalize(s, x).to_q().is_some_and(|y| y.is_negative())
}

pub fn closed_contains(s: &Segment, x: &P1) -> bool {
    normalize(s, x).to_q().is_none_or(|y| !y.is_positive())
}

/// A point of the interval's interior.
pub fn interior_point(s: &Segment) -> P1 {
    s.matrix().act(&P1::int(-1))
}

pub fn is_subinterval(s: &Segment, t: &Segment) -> bool {
    closed_contains(t, &s.from) && closed_contains(t, &s.to) && open_contains(t, &interior_point(s))
}

/// The two halves of a primitive interval, split at its interior Farey point.
pub fn children(s: &Segment) -> [Segment; 2] {
    let m = interior_point(s);
    [Segment { from: s.from.clone(), to: m.clone() }, Segment { from: m, to: s.to.clone() }]
}

/// `(∞, 0)`, `(0, 1)`, `(1, ∞)`.
pub fn roots() -> [Segment; 3] {
    let (inf, zero, one) = (P1::infinity(), P1::int(0), P1::int(1));
    [
        Segment { from: inf.clone(), to: zero.clone() },
        Segment { from: zero, to: one.clone() },
        Segment { from: one, to: inf },
    ]
}

/// Path of nested intervals from a root down to `s`, if `s` avoids the base
/// triangle.
pub fn node_path(s: &Segment) -> Option<Vec<Segment>> {
    let root = roots().into_iter().find(|r| is_subinterval(s, r))?;
    let mut path = vec![root];
    while path.last() != Some(s) {
        let cur = path.last().unwrap().clone();
        let next = children(&cur).into_iter().find(|c| is_subinterval(s, c))?;
        path.push(next);
    }
    Some(path)
}

/// Intervals at refinement depth `k` below the three roots, in order.
pub fn level(k: usize) -> Vec<Segment> {
    let mut cur: Vec<Segment> = roots().to_vec();
    for _ in 0..k {
        cur = cur.iter().flat_map(children).collect();
    }
    cur
}

/// A boundary point for locating ends.
#[derive(Clone, Debug)]
pub enum BoundaryPoint {
    Rational(P1),
    Quadratic(QuadSurd),
}

fn contains_point(s: &Segment, x: &BoundaryPoint) -> bool {
    match x {
        BoundaryPoint::Rational(p) => closed_contains(s, p),
        BoundaryPoint::Quadratic(t) => {
            let g = s.matrix().inverse().expect("unimodular");
            t.mobius(&g).map(|y| y.signum() < 0).unwrap_or(false)
        }
    }
}

/// Admissible edge paths of `steps` triangle steps from the base vertex whose
/// end sets all contain `x` in their closure.
pub fn end_paths(x: &BoundaryPoint, steps: usize) -> Vec<Vec<TreeEdge>> {
    let mut paths: Vec<Vec<Segment>> = roots().into_iter().filter(|r| contains_point(r, x)).map(|r| vec![r]).collect();
    for _ in 1..steps {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                let last = p.last().unwrap().clone();
                children(&last)
                    .into_iter()
                    .filter(|c| contains_point(c, x))
                    .map(|c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    paths.into_iter().map(|p| p.iter().map(TreeEdge::of_interval).collect()).collect()
}

/// Finite integer combination `Σ a_i χ_{I_i}` of primitive intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocallyConstantFunction {
    terms: Vec<(Segment, Z)>,
}

enum Shape {
    Const(Z),
    Parts(Vec<(Segment, Z)>),
}

impl LocallyConstantFunction {
    pub fn new(terms: Vec<(Segment, Z)>) -> Result<LocallyConstantFunction> {
        for (s, _) in &terms {
            Segment::new(s.from.clone(), s.to.clone())?;
        }
        Ok(LocallyConstantFunction { terms })
    }

    pub fn zero() -> LocallyConstantFunction {
        LocallyConstantFunction { terms: Vec::new() }
    }

    pub fn indicator(s: &Segment) -> LocallyConstantFunction {
        LocallyConstantFunction { terms: vec![(s.clone(), Z::one())] }
    }

    pub fn constant(c: Z) -> LocallyConstantFunction {
        LocallyConstantFunction { terms: roots().into_iter().map(|r| (r, c.clone())).collect() }
    }

    pub fn terms(&self) -> &[(Segment, Z)] {
        &self.terms
    }

    pub fn add(&self, o: &Self) -> Self {
        LocallyConstantFunction { terms: self.terms.iter().chain(&o.terms).cloned().collect() }
    }

    pub fn scale(&self, c: &Z) -> Self {
        LocallyConstantFunction { terms: self.terms.iter().map(|(s, a)| (s.clone(), a * c)).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&Z::from(-1))
    }

    /// `f∘g`, using `χ_I∘g = χ_{g⁻¹I}`.
    pub fn compose(&self, g: &Mat2) -> Self {
        let h = g.inverse().expect("unimodular");
        LocallyConstantFunction { terms: self.terms.iter().map(|(s, a)| (s.map(&h), a.clone())).collect() }
    }

    /// Each interval replaced by its two halves.
    pub fn refine(&self) -> Self {
        LocallyConstantFunction {
            terms: self.terms.iter().flat_map(|(s, a)| children(s).into_iter().map(move |c| (c, a.clone()))).collect(),
        }
    }

    /// Coarsest disjoint family of tree intervals on which the function is
    /// constant, zero values dropped, sorted.
    pub fn canonical(&self) -> Self {
        let mut coeff: HashMap<Segment, Z> = HashMap::new();
        let mut bump = |s: Segment, a: Z| *coeff.entry(s).or_insert_with(Z::zero) += a;
        for (s, a) in &self.terms {
            if node_path(s).is_some() {
                bump(s.clone(), a.clone());
            } else {
                for r in roots() {
                    bump(r, a.clone());
                }
                bump(s.reversed(), -a);
            }
        }
        let mut internal: HashSet<Segment> = HashSet::new();
        for s in coeff.keys() {
            let path = node_path(s).expect("interval below a root");
            internal.extend(path[..path.len() - 1].iter().cloned());
        }
        fn shape(node: &Segment, inherited: &Z, coeff: &HashMap<Segment, Z>, internal: &HashSet<Segment>) -> Shape {
            let v = inherited + coeff.get(node).cloned().unwrap_or_else(Z::zero);
            if !internal.contains(node) {
                return Shape::Const(v);
            }
            let kids = children(node).map(|c| (shape(&c, &v, coeff, internal), c));
            match kids {
                [(Shape::Const(a), _), (Shape::Const(b), _)] if a == b => Shape::Const(a),
                kids => Shape::Parts(kids.into_iter().flat_map(|(k, c)| flatten(k, c)).collect()),
            }
        }
        fn flatten(s: Shape, node: Segment) -> Vec<(Segment, Z)> {
            match s {
                Shape::Const(v) if v.is_zero() => Vec::new(),
                Shape::Const(v) => vec![(node, v)],
                Shape::Parts(p) => p,
            }
        }
        let mut terms: Vec<(Segment, Z)> = roots()
            .into_iter()
            .flat_map(|r| flatten(shape(&r, &Z::zero(), &coeff, &internal), r))
            .collect();
        terms.sort();
        LocallyConstantFunction { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().terms.is_empty()
    }

    pub fn equivalent(&self, o: &Self) -> bool {
        self.add(&o.neg()).is_zero()
    }

    /// Value on a tree interval that lies inside or outside each canonical
    /// piece.
    pub fn value_on(&self, leaf: &Segment) -> Result<Z> {
        let mut v = Z::zero();
        for (s, a) in &self.canonical().terms {
            if is_subinterval(leaf, s) {
                v += a;
            } else if open_contains(s, &interior_point(leaf)) {
                return Err(Error::Domain(format!("{leaf} is not contained in a piece of constancy")));
            }
        }
        Ok(v)
    }

    /// `∫ f dμ = Σ a_i μ(I_i)`.
    pub fn integrate<M: PseudoMeasure>(&self, mu: &M) -> M::V {
        self.terms.iter().fold(mu.zero(), |acc, (s, a)| acc.add(&mu.premeasure(s).times(a)))
    }
}

impl fmt::Display for LocallyConstantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(s, a)| format!("{a}·χ{s}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `(∫ f∘g dμ, ∫ f d(μ∘g⁻¹))`.
pub fn change_of_variable<M: PseudoMeasure>(f: &LocallyConstantFunction, g: &Mat2, mu: &M) -> (M::V, M::V) {
    let lhs = f.compose(g).canonical().integrate(mu);
    let h = g.inverse().expect("unimodular");
    let rhs = f.terms().iter().fold(mu.zero(), |acc, (s, a)| acc.add(&mu.eval(&h.act(&s.from), &h.act(&s.to)).times(a)));
    (lhs, rhs)
}

/// Whether `f + f∘σ = 0` and `f + f∘τ + f∘τ² = 0`.
pub fn kernel_function_check(f: &LocallyConstantFunction) -> Report {
    let s = f.add(&f.compose(&Mat2::sigma())).canonical();
    if !s.terms.is_empty() {
        return Report::fail(0, format!("f + f∘σ = {s}"));
    }
    let t = Mat2::tau();
    let r = f.add(&f.compose(&t)).add(&f.compose(&t.mul(&t))).canonical();
    if !r.terms.is_empty() {
        return Report::fail(1, format!("f + f∘τ + f∘τ² = {r}"));
    }
    Report::ok(2)
}

/// The modular measure with `μ_f(∞, 0) = ∫ f dμ`.
pub fn measure_from_kernel_function<M>(f: &LocallyConstantFunction, mu: &M) -> Result<FromSeed<M::V>>
where
    M: PseudoMeasure,
    M::V: UnimodularAction,
{
    let r = kernel_function_check(f);
    if !r.pass {
        return Err(Error::SeedInvariant(r.witness.unwrap_or_default()));
    }
    from_seed(f.integrate(mu))
}

/// Basis of the integer functions constant on the depth-`k` intervals that
/// satisfy both kernel conditions.
pub fn kernel_functions(k: usize) -> Vec<LocallyConstantFunction> {
    let leaves = level(k);
    let fine = level(k + 1);
    let t = Mat2::tau();
    let columns: Vec<Vec<Q>> = leaves
        .iter()
        .map(|leaf| {
            let f = LocallyConstantFunction::indicator(leaf);
            let s = f.add(&f.compose(&Mat2::sigma()));
            let r = f.add(&f.compose(&t)).add(&f.compose(&t.mul(&t)));
            fine.iter()
                .flat_map(|x| [s.value_on(x), r.value_on(x)])
                .map(|v| Q::from_integer(v.expect("constant on the finer level")))
                .collect()
        })
        .collect();
    let rows: Vec<Vec<Q>> = (0..columns[0].len()).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    let kernel = linalg::kernel(&rows, leaves.len());
    linalg::integer_rows(&kernel)
        .into_iter()
        .map(|v| LocallyConstantFunction {
            terms: leaves.iter().zip(v).filter(|(_, a)| !a.is_zero()).map(|(s, a)| (s.clone(), a)).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DescendReport {
    /// `∫(f + f∘σ)dμ = (1 + σ)∫f dμ` and the τ analogue for every sample.
    pub equivariant: bool,
    /// The relations integrate to zero for every sample.
    pub vanishing: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

pub fn descend_check<M>(mu: &M, samples: &[LocallyConstantFunction]) -> DescendReport
where
    M: PseudoMeasure,
    M::V: UnimodularAction,
{
    let (s, t) = (Mat2::sigma(), Mat2::tau());
    let t2 = t.mul(&t);
    let mut report = DescendReport { equivariant: true, vanishing: true, checked: 0, witness: None };
    for f in samples {
        let v = f.integrate(mu);
        let rs = f.add(&f.compose(&s)).integrate(mu);
        let rt = f.add(&f.compose(&t)).add(&f.compose(&t2)).integrate(mu);
        let inv = |g: &Mat2| g.inverse().expect("unimodular");
        let es = v.add(&v.act(&inv(&s)));
        let et = v.add(&v.act(&inv(&t))).add(&v.act(&inv(&t2)));
        if rs != es || rt != et {
            report.equivariant = false;
            report.witness.get_or_insert_with(|| format!("equivariance fails for {f}"));
        }
        if !rs.vanishes() || !rt.vanishes() {
            report.vanishing = false;
            report.witness.get_or_insert_with(|| format!("relations do not vanish for {f}"));
        }
        report.checked += 1;
    }
    report
}

/// Word of the given length in σ, τ and T^{±1}.
pub fn random_element<R: Rng>(rng: &mut R, len: usize) -> Mat2 {
    (0..len).fold(Mat2::identity(), |acc, _| {
        let g = match rng.gen_range(0..4) {
            0 => Mat2::sigma(),
            1 => Mat2::tau(),
            2 => Mat2::translation(1),
            _ => Mat2::translation(-1),
        };
        acc.mul(&g)
    })
}

/// A primitive interval: a random tree interval or its complement.
pub fn random_interval<R: Rng>(rng: &mut R, max_depth: usize) -> Segment {
    let mut s = roots()[rng.gen_range(0..3)].clone();
    for _ in 0..rng.gen_range(0..=max_depth) {
        s = children(&s)[rng.gen_range(0..2)].clone();
    }
    if rng.gen_bool(0.25) {
        s.reversed()
    } else {
        s
    }
}

pub fn random_function<R: Rng>(rng: &mut R, terms: usize, max_depth: usize) -> LocallyConstantFunction {
    LocallyConstantFunction {
        terms: (0..terms).map(|_| (random_interval(rng, max_depth), Z::from(rng.gen_range(-3i64..=3)))).collect(),
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Triangle(g) => write!(f, "triangle[{},{};{},{}]", g.a, g.b, g.c, g.d),
            Vertex::Midpoint(g) => write!(f, "midpoint[{},{};{},{}]", g.a, g.b, g.c, g.d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::qi;
    use crate::coeff::{Poly, Trivial};
    use crate::measure::{rule, validate_premeasure, Universal};
    use crate::modular::{basis_measures, modularity_check, seed_space};
    use crate::quadratic::PeriodicCF;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> P1 {
        s.parse().unwrap()
    }

    fn seg(a: &str, b: &str) -> Segment {
        Segment { from: p(a), to: p(b) }
    }

    fn seed_measure() -> FromSeed<Poly> {
        basis_measures(&seed_space(10)).remove(0)
    }

    #[test]
    fn base_triangle_partition() {
        let away = Vertex::base().outgoing();
        let mut intervals: Vec<Segment> = away.iter().map(TreeEdge::interval).collect();
        intervals.sort();
        let mut expected_roots = roots().to_vec();
        expected_roots.sort();
        assert_eq!(intervals, expected_roots);
        for e in &away {
            assert_eq!(e.reversed().interval(), e.interval().reversed());
            assert_eq!(e.reversed().reversed(), *e);
            assert_eq!(e.source(), Vertex::base());
        }
        // τ rotates the three slots.
        let t = Mat2::tau();
        let mut rotated: Vec<Segment> = (0..3).map(|k| TreeEdge::new(&t, k, Direction::Away).interval()).collect();
        let mut expected: Vec<Segment> = intervals.iter().map(|s| s.map(&t)).collect();
        rotated.sort();
        expected.sort();
        assert_eq!(rotated, expected);
        assert_eq!(TreeEdge::new(&Mat2::identity(), 1, Direction::Away), TreeEdge::of_interval(&seg("0", "1")));
    }

    #[test]
    fn vertices_have_the_right_valence() {
        let (vertices, edges) = subtree(3);
        for v in &vertices {
            let out = v.outgoing();
            assert_eq!(out.len(), v.valence());
            for e in out {
                assert_eq!(&e.source(), v);
                assert_eq!(e.reversed().target(), *v);
            }
        }
        assert_eq!(vertices.iter().filter(|v| v.valence() == 3).count(), 1 + 3 * (2usize.pow(3) - 1));
        assert!(edges.iter().all(|e| Segment::new(e.interval().from, e.interval().to).is_ok()));
    }

    #[test]
    fn measure_current_round_trip() {
        let mu = Arc::new(seed_measure());
        let c = current_from_measure(mu.clone());
        assert!(current_validate(&c, 4).pass);
        let back = measure_from_current(c, 4).unwrap();
        for e in subtree(4).1 {
            let s = e.interval();
            assert_eq!(back.eval(&s.from, &s.to), mu.eval(&s.from, &s.to));
        }
        assert_eq!(back.eval(&p("2/7"), &p("-5/3")), mu.eval(&p("2/7"), &p("-5/3")));
        let c = current_from_measure(Universal);
        assert!(current_validate(&c, 3).pass);
    }

    #[test]
    fn vertex_sums() {
        let mu = Arc::new(seed_measure());
        let c = current_from_measure(mu.clone());
        let total = ["0", "1", "inf"].windows(2).fold(mu.eval(&p("inf"), &p("0")), |acc, w| acc.add(&mu.eval(&p(w[0]), &p(w[1]))));
        assert!(total.vanishes());
        assert!(divergence(&c, &Vertex::base()).vanishes());
        let m = Vertex::midpoint(&Mat2::from_i64(2, 1, 1, 1));
        let out = m.outgoing();
        assert_eq!(c.value(&out[0]), c.value(&out[1]).neg());
    }

    #[test]
    fn invalid_currents_fail() {
        let constant = Current::new(qi(0), |_: &TreeEdge| qi(1));
        let r = current_validate(&constant, 2);
        assert!(!r.pass && r.witness.unwrap().contains("reversal"));
        let momentum_only = Current::new(qi(0), |e: &TreeEdge| match e.direction() {
            Direction::Away => qi(1),
            Direction::Toward => qi(-1),
        });
        let r = current_validate(&momentum_only, 2);
        assert!(!r.pass && r.witness.unwrap().contains("momentum"));
        assert!(measure_from_current(constant, 2).is_err());
        assert!(current_validate(&Current::new(qi(0), |_: &TreeEdge| qi(0)), 3).pass);
    }

    #[test]
    fn current_measure_is_a_premeasure() {
        let c = current_from_measure(Arc::new(seed_measure()));
        let mu = measure_from_current(c, 3).unwrap();
        assert!(validate_premeasure(&mu, 3).pass);
    }

    #[test]
    fn dump_is_stable() {
        let c = current_from_measure(Universal);
        let a = serde_json::to_string(&current_dump(&c, 2)).unwrap();
        let b = serde_json::to_string(&current_dump(&c, 2)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"dir\":\"away\""));
        let zero = current_from_measure(rule(qi(0), |_: &Segment| qi(0)));
        let svg = tessellation_svg(|e| zero.value(e).to_string(), 2, 2);
        assert!(svg.starts_with("<svg") && svg.contains("path"));
    }

    #[test]
    fn tree_intervals() {
        assert_eq!(children(&seg("inf", "0")), [seg("inf", "-1"), seg("-1", "0")]);
        assert_eq!(children(&seg("0", "1")), [seg("0", "1/2"), seg("1/2", "1")]);
        assert_eq!(node_path(&seg("2/5", "1/2")).unwrap().len(), 4);
        assert!(node_path(&seg("0", "inf")).is_none());
        assert!(is_subinterval(&seg("1", "2"), &seg("0", "inf")));
        assert!(!is_subinterval(&seg("0", "inf"), &seg("1", "2")));
        assert_eq!(level(2).len(), 12);
    }

    #[test]
    fn integration_examples() {
        let mu = seed_measure();
        let f = LocallyConstantFunction::indicator(&seg("inf", "0"));
        assert_eq!(f.integrate(&mu), mu.eval(&p("inf"), &p("0")));
        let one = f.add(&LocallyConstantFunction::indicator(&seg("0", "inf")));
        assert!(one.integrate(&mu).vanishes());
        assert_eq!(one.canonical(), LocallyConstantFunction::constant(Z::one()).canonical());
        assert!(!one.is_zero());
        assert!(LocallyConstantFunction::zero().is_zero());
    }

    #[test]
    fn canonical_form_examples() {
        let split = LocallyConstantFunction::new(vec![(seg("inf", "-1"), Z::from(2)), (seg("-1", "0"), Z::from(2))]).unwrap();
        let whole = LocallyConstantFunction::indicator(&seg("inf", "0")).scale(&Z::from(2));
        assert_eq!(split.canonical(), whole.canonical());
        assert_eq!(whole.canonical().terms().len(), 1);
        // χ(∞,0) − χ(0,∞), composed with σ, is its own negative.
        let f = LocallyConstantFunction::indicator(&seg("inf", "0")).add(&LocallyConstantFunction::indicator(&seg("0", "inf")).neg());
        assert!(f.add(&f.compose(&Mat2::sigma())).is_zero());
        // Its τ-orbit sum is the constant −1.
        let t = Mat2::tau();
        let r = f.add(&f.compose(&t)).add(&f.compose(&t.mul(&t)));
        assert!(r.equivalent(&LocallyConstantFunction::constant(Z::from(-1))));
        let report = kernel_function_check(&f);
        assert!(!report.pass && report.witness.unwrap().contains("τ"));
        assert!(LocallyConstantFunction::new(vec![(seg("0", "2"), Z::one())]).is_err());
    }

    #[test]
    fn refinement_and_change_of_variable() {
        let mu = seed_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_function(&mut rng, 4, 4);
            let v = f.integrate(&mu);
            assert_eq!(f.canonical().integrate(&mu), v);
            assert_eq!(f.refine().integrate(&mu), v);
            assert!(f.refine().equivalent(&f));
            let g = random_element(&mut rng, 6);
            let (lhs, rhs) = change_of_variable(&f, &g, &mu);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn kernel_functions_give_modular_measures() {
        let mu = seed_measure();
        for k in 0..3 {
            for f in kernel_functions(k) {
                assert!(kernel_function_check(&f).pass);
                let m = measure_from_kernel_function(&f, &mu).unwrap();
                let b = crate::measure::Bounds { depth: 3, max_den: 12, shift: 1 };
                assert!(modularity_check(&m, &[Mat2::sigma(), Mat2::tau()], &b).pass);
            }
        }
        let zero = measure_from_kernel_function(&LocallyConstantFunction::zero(), &mu).unwrap();
        assert!(zero.eval(&p("inf"), &p("3/4")).vanishes());
        let bad = LocallyConstantFunction::indicator(&seg("0", "1"));
        assert!(measure_from_kernel_function(&bad, &mu).is_err());
    }

    #[test]
    fn descent_to_coinvariants() {
        let mu = seed_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<LocallyConstantFunction> =
            (0..8).map(|_| LocallyConstantFunction::indicator(&Segment::of_matrix(&random_element(&mut rng, 5)))).collect();
        let r = descend_check(&mu, &samples);
        assert!(r.equivariant);
        let base = [LocallyConstantFunction::indicator(&Segment::base())];
        let r0 = descend_check(&mu, &base);
        assert!(r0.equivariant && r0.vanishing);
        let zero = rule(Poly::zero(10), |_: &Segment| Poly::zero(10));
        let rz = descend_check(&zero, &samples);
        assert!(rz.equivariant && rz.vanishing);
        let trivial = rule(Trivial(crate::measure::FreeAbelian::zero()), |s: &Segment| Trivial(Universal.premeasure(s)));
        assert!(!descend_check(&trivial, &samples).equivariant);
    }

    #[test]
    fn rational_points_have_two_ends() {
        for q in 1..=30i64 {
            for num in -2 * q..=3 * q {
                let x = P1::frac(num, q);
                if x.den() != &Z::from(q) {
                    continue;
                }
                assert_eq!(end_paths(&BoundaryPoint::Rational(x.clone()), 45).len(), 2, "{x}");
            }
        }
        assert_eq!(end_paths(&BoundaryPoint::Rational(P1::infinity()), 20).len(), 2);
    }

    #[test]
    fn quadratic_points_have_one_end() {
        for s in ["[1;(1)]", "[1;(2)]", "[-2;3,(1,4)]", "[0;(2,5,1)]"] {
            let theta = s.parse::<PeriodicCF>().unwrap().value();
            let paths = end_paths(&BoundaryPoint::Quadratic(theta), 40);
            assert_eq!(paths.len(), 1, "{s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn canonical_form_is_refinement_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_function(&mut rng, 3, 3);
            prop_assert_eq!(f.canonical(), f.refine().canonical());
            prop_assert_eq!(f.canonical().canonical(), f.canonical());
            prop_assert!(f.add(&f.neg()).is_zero());
        }

        #[test]
        fn measure_currents_are_conserved(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_element(&mut rng, 4);
            let c = current_from_measure(Arc::new(seed_measure()));
            let v = Vertex::triangle(&g);
            prop_assert!(divergence(&c, &v).vanishes());
            prop_assert!(divergence(&c, &Vertex::midpoint(&g)).vanishes());
        }
    }
}
