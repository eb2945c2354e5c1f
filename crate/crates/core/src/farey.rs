//! Primitive segments, primitive chains, and the elementary-move rewriting
//! that turns any closed chain into the empty loop.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{ContinuedFraction, Mat2, P1};
use crate::error::{Error, Result};

/// Oriented segment between two Farey neighbours.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(P1, P1)", try_from = "(P1, P1)")]
pub struct Segment {
    pub from: P1,
    pub to: P1,
}

impl From<Segment> for (P1, P1) {
    fn from(s: Segment) -> (P1, P1) {
        (s.from, s.to)
    }
}

impl TryFrom<(P1, P1)> for Segment {
    type Error = Error;
    fn try_from((a, b): (P1, P1)) -> Result<Segment> {
        Segment::new(a, b)
    }
}

pub fn is_primitive(a: &P1, b: &P1) -> bool {
    a != b && (a.num() * b.den() - b.num() * a.den()).abs().is_one()
}

impl Segment {
    pub fn new(from: P1, to: P1) -> Result<Segment> {
        if is_primitive(&from, &to) {
            Ok(Segment { from, to })
        } else {
            Err(Error::NotPrimitive(format!("({from}, {to})")))
        }
    }

    /// The segment (g∞, g0) for g in SL(2,Z).
    pub fn of_matrix(g: &Mat2) -> Segment {
        Segment { from: g.act(&P1::infinity()), to: g.act(&P1::int(0)) }
    }

    pub fn base() -> Segment {
        Segment { from: P1::infinity(), to: P1::int(0) }
    }

    pub fn reversed(&self) -> Segment {
        Segment { from: self.to.clone(), to: self.from.clone() }
    }

    pub fn map(&self, g: &Mat2) -> Segment {
        Segment { from: g.act(&self.from), to: g.act(&self.to) }
    }

    /// The PSL(2,Z) element sending (∞, 0) to this segment.
    pub fn matrix(&self) -> Mat2 {
        let (a, c) = (self.from.num().clone(), self.from.den().clone());
        let (b, d) = (self.to.num().clone(), self.to.den().clone());
        let g = Mat2::new(a, b, c, d);
        if g.det().is_one() {
            g.psl_canonical()
        } else {
            Mat2::new(g.a, -g.b, g.c, -g.d).psl_canonical()
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.from, self.to)
    }
}

pub fn segment_matrix(s: &Segment) -> Mat2 {
    s.matrix()
}

/// Validates that consecutive segments share endpoints.
pub fn check_chain(chain: &[Segment]) -> Result<()> {
    for (i, w) in chain.windows(2).enumerate() {
        if w[0].to != w[1].from {
            return Err(Error::MalformedChain(format!("break after link {i}: {} then {}", w[0], w[1])));
        }
    }
    for s in chain {
        if !is_primitive(&s.from, &s.to) {
            return Err(Error::NotPrimitive(s.to_string()));
        }
    }
    Ok(())
}

pub fn is_loop(chain: &[Segment]) -> bool {
    match (chain.first(), chain.last()) {
        (Some(a), Some(b)) => a.from == b.to,
        _ => true,
    }
}

pub fn reverse_chain(chain: &[Segment]) -> Vec<Segment> {
    chain.iter().rev().map(Segment::reversed).collect()
}

/// Chain from ∞ to x through the convergents of x.
pub fn convergent_chain(x: &P1) -> Vec<Segment> {
    let Some(v) = x.to_q() else { return Vec::new() };
    ContinuedFraction::expand(&v)
        .convergents()
        .windows(2)
        .map(|w| Segment { from: w[0].clone(), to: w[1].clone() })
        .collect()
}

/// Canonical chain from a to b: convergents of a back to ∞, then out to b.
pub fn primitive_chain(a: &P1, b: &P1) -> Vec<Segment> {
    if a == b {
        return Vec::new();
    }
    let mut out = reverse_chain(&convergent_chain(a));
    out.extend(convergent_chain(b));
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Move {
    /// Delete links `at`, `at+1` which must be (γ,δ), (δ,γ).
    CancelPair { at: usize },
    /// Insert (γ,δ), (δ,γ) before link `at`; γ is the vertex there.
    InsertPair { at: usize, to: P1 },
    /// Delete links `at..at+3` which must form a closed triangle.
    CancelTriangle { at: usize },
    /// Insert (γ1,γ2), (γ2,γ3), (γ3,γ1) before link `at`; γ1 is the vertex there.
    InsertTriangle { at: usize, second: P1, third: P1 },
}

fn vertex_at(chain: &[Segment], at: usize) -> Result<P1> {
    if at < chain.len() {
        Ok(chain[at].from.clone())
    } else if at == chain.len() && at > 0 {
        Ok(chain[at - 1].to.clone())
    } else {
        Err(Error::BadMove(format!("no vertex at position {at}")))
    }
}

impl Move {
    pub fn apply(&self, chain: &mut Vec<Segment>) -> Result<()> {
        match self {
            Move::CancelPair { at } => {
                let at = *at;
                if at + 1 >= chain.len() || chain[at + 1] != chain[at].reversed() {
                    return Err(Error::BadMove(format!("no cancelling pair at {at}")));
                }
                chain.drain(at..at + 2);
            }
            Move::InsertPair { at, to } => {
                let v = vertex_at(chain, *at)?;
                let s = Segment::new(v, to.clone())?;
                chain.splice(*at..*at, [s.clone(), s.reversed()]);
            }
            Move::CancelTriangle { at } => {
                let at = *at;
                if at + 2 >= chain.len() || chain[at + 2].to != chain[at].from {
                    return Err(Error::BadMove(format!("no closed triangle at {at}")));
                }
                chain.drain(at..at + 3);
            }
            Move::InsertTriangle { at, second, third } => {
                let v = vertex_at(chain, *at)?;
                let tri = [
                    Segment::new(v.clone(), second.clone())?,
                    Segment::new(second.clone(), third.clone())?,
                    Segment::new(third.clone(), v)?,
                ];
                chain.splice(*at..*at, tri);
            }
        }
        Ok(())
    }
}

pub fn apply_moves(chain: &[Segment], moves: &[Move]) -> Result<Vec<Segment>> {
    let mut c = chain.to_vec();
    for m in moves {
        m.apply(&mut c)?;
    }
    Ok(c)
}

/// Elementary moves that reduce a closed primitive chain to the empty loop.
pub fn reduce_loop(lp: &[Segment]) -> Result<Vec<Move>> {
    check_chain(lp)?;
    if !is_loop(lp) {
        return Err(Error::MalformedChain("chain is not closed".into()));
    }
    let mut work = lp.to_vec();
    let mut moves = Vec::new();
    let n = work.len();
    reduce_block(&mut work, 0, n, &mut moves)?;
    debug_assert!(work.is_empty());
    Ok(moves)
}

fn record(work: &mut Vec<Segment>, moves: &mut Vec<Move>, m: Move) -> Result<()> {
    m.apply(work)?;
    moves.push(m);
    Ok(())
}

/// Reduces the closed block `work[start..start+len]` to nothing. The block
/// keeps its base vertex `work[start].from` throughout.
fn reduce_block(work: &mut Vec<Segment>, start: usize, mut len: usize, moves: &mut Vec<Move>) -> Result<()> {
    while len > 0 {
        if len == 2 {
            return record(work, moves, Move::CancelPair { at: start });
        }
        if len == 3 {
            return record(work, moves, Move::CancelTriangle { at: start });
        }
        if let Some((i, j)) = repeated_vertex(&work[start..start + len]) {
            reduce_block(work, start + i, j - i, moves)?;
            len -= j - i;
            continue;
        }
        len = splice_step(work, start, len, moves)?;
    }
    Ok(())
}

/// First pair i < j with the same starting vertex.
fn repeated_vertex(block: &[Segment]) -> Option<(usize, usize)> {
    let mut seen = std::collections::HashMap::new();
    for (j, s) in block.iter().enumerate() {
        if let Some(&i) = seen.get(&s.from) {
            return Some((i, j));
        }
        seen.insert(s.from.clone(), j);
    }
    None
}

/// One splice on a simple loop of length ≥ 4, after moving its base vertex to
/// ∞ and its first link to (∞, 0). Returns the new block length.
fn splice_step(work: &mut Vec<Segment>, start: usize, len: usize, moves: &mut Vec<Move>) -> Result<usize> {
    let base = work[start].from.clone();
    let back = work[start].matrix();
    let mut norm = back.inverse()?;
    let last = norm.act(&work[start + len - 1].from);
    let b = last.num().clone();
    if b.is_negative() {
        // Reflect x ↦ −x so that the loop runs ∞ → 0 → ... → b → ∞ with b > 0.
        norm = Mat2::from_i64(-1, 0, 0, 1).mul(&norm);
    }
    let unnorm = norm.inverse()?;
    let at = |v: i64| unnorm.act(&P1::int(v));
    let a_plus = at(1);
    let b = b.abs();
    debug_assert!(!b.is_zero());

    if b.is_one() {
        // |a − b| = 1: splice in (a, a+1), (a+1, a), clear the subloop behind
        // it, then drop the triangle (∞, a), (a, a+1), (a+1, ∞).
        record(work, moves, Move::InsertPair { at: start + 1, to: a_plus })?;
        reduce_block(work, start + 2, len - 1, moves)?;
        record(work, moves, Move::CancelTriangle { at: start })?;
        return Ok(0);
    }

    if work[start + 1].to == a_plus {
        // Second link is already (a, a+1).
        record(work, moves, Move::InsertPair { at: start + 2, to: base.clone() })?;
        record(work, moves, Move::CancelTriangle { at: start })?;
        return Ok(len - 1);
    }

    // Links 2..k run from a to a+1 without touching ∞; the Farey edge (a+1, ∞)
    // cannot be crossed, so such k exists.
    let k = (start + 1..start + len - 1)
        .find(|&i| work[i].to == a_plus)
        .ok_or_else(|| Error::MalformedChain("loop never reaches a+1".into()))?;
    let sub_len = k - start; // links 2..k
    record(work, moves, Move::InsertPair { at: start + 1, to: a_plus })?;
    // Ik is now at k + 2; insert (a+1, ∞), (∞, a+1) right after it.
    record(work, moves, Move::InsertPair { at: k + 3, to: base })?;
    reduce_block(work, start + 2, sub_len + 1, moves)?;
    record(work, moves, Move::CancelTriangle { at: start })?;
    Ok(len - sub_len)
}

/// Random neighbour of v in the Farey graph, chosen among g(n) for small n,
/// where g(∞) = v.
fn random_neighbour<R: Rng>(v: &P1, rng: &mut R, spread: i64) -> (P1, P1) {
    let g = basis_at(v);
    let n = rng.gen_range(-spread..=spread);
    (g.act(&P1::int(n)), g.act(&P1::int(n + 1)))
}

/// Some g in SL(2,Z) with g(∞) = v.
pub fn basis_at(v: &P1) -> Mat2 {
    match v.to_q() {
        None => Mat2::identity(),
        Some(x) => {
            let cf = ContinuedFraction::expand(&x);
            let gs = cf.gk_matrices();
            // g_{n-1} sends 0 to v; compose with σ to send ∞ there.
            gs.last().expect("non-empty").mul(&Mat2::sigma())
        }
    }
}

/// Random chain with the same endpoints, built by inserting `steps` random
/// pairs and triangles.
pub fn randomize_chain<R: Rng>(chain: &[Segment], steps: usize, rng: &mut R) -> Vec<Segment> {
    let mut c = chain.to_vec();
    for _ in 0..steps {
        if c.is_empty() {
            break;
        }
        let at = rng.gen_range(0..=c.len());
        let v = vertex_at(&c, at).expect("valid position");
        let (x, y) = random_neighbour(&v, rng, 3);
        let m = if rng.gen_bool(0.5) {
            Move::InsertPair { at, to: x }
        } else {
            Move::InsertTriangle { at, second: x, third: y }
        };
        m.apply(&mut c).expect("random insertion is valid");
    }
    c
}

/// Random closed loop of length between 2 and `max_len`: a short random walk
/// closed up by the canonical chain back to its start.
pub fn random_loop<R: Rng>(max_len: usize, rng: &mut R) -> Vec<Segment> {
    assert!(max_len >= 2);
    loop {
        let start = if rng.gen_bool(0.2) {
            P1::infinity()
        } else {
            P1::frac(rng.gen_range(-4..=4), rng.gen_range(1..=3))
        };
        let mut c = Vec::new();
        let mut v = start.clone();
        for _ in 0..rng.gen_range(1..max_len) {
            let (x, _) = random_neighbour(&v, rng, 2);
            c.push(Segment { from: v.clone(), to: x.clone() });
            v = x;
        }
        c.extend(primitive_chain(&v, &start));
        if (2..=max_len).contains(&c.len()) {
            return c;
        }
    }
}
