//! Exact linear algebra over Q: row reduction, kernels, characteristic
//! polynomials and rational roots.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::boundary::{Q, Z};

pub type Matrix = Vec<Vec<Q>>;

pub fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![Q::zero(); c]; r]
}

pub fn identity(n: usize) -> Matrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(n, m);
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][t] * &b[t][j];
            }
        }
    }
    out
}

pub fn mul_vec(a: &Matrix, v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn scale(a: &Matrix, c: &Q) -> Matrix {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn trace(a: &Matrix) -> Q {
    (0..a.len()).map(|i| a[i][i].clone()).sum()
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of {x : m x = 0}. Each basis vector has a 1 in its own free column
/// and 0 in the other free columns.
pub fn kernel(m: &Matrix, cols: usize) -> Vec<Vec<Q>> {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[row][f].clone();
            }
            v
        })
        .collect()
}

pub fn rank(m: &Matrix) -> usize {
    rref(m).1.len()
}

/// Rank by fraction-free Bareiss elimination over Z, independent of [`rref`].
pub fn rank_bareiss(m: &[Vec<Z>]) -> usize {
    let mut a: Vec<Vec<Z>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev = Z::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = Z::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Clears denominators row by row.
pub fn integer_rows(m: &Matrix) -> Vec<Vec<Z>> {
    m.iter()
        .map(|row| {
            let l = row.iter().fold(Z::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
        })
        .collect()
}

/// Coordinates of v in a basis, or None if v is outside the span.
pub fn coordinates(basis: &[Vec<Q>], v: &[Q]) -> Option<Vec<Q>> {
    let n = v.len();
    let k = basis.len();
    // Solve B c = v with B the n×k matrix of basis columns.
    let mut aug = zeros(n, k + 1);
    for i in 0..n {
        for j in 0..k {
            aug[i][j] = basis[j][i].clone();
        }
        aug[i][k] = v[i].clone();
    }
    let (r, pivots) = rref(&aug);
    if pivots.contains(&k) || pivots.len() < k {
        return None;
    }
    Some((0..k).map(|j| r[j][k].clone()).collect())
}

/// Characteristic polynomial det(tI − A), lowest degree first, by
/// Faddeev–LeVerrier.
pub fn charpoly(a: &Matrix) -> Vec<Q> {
    let n = a.len();
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut m = zeros(n, n);
    let id = identity(n);
    for k in 1..=n {
        m = add(&mul(a, &m), &scale(&id, &c[n - k + 1]));
        let am = mul(a, &m);
        c[n - k] = -trace(&am) / Q::from_integer(Z::from(k));
    }
    c
}

fn poly_eval(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

/// Synthetic division by (t − r).
fn deflate(p: &[Q], r: &Q) -> Vec<Q> {
    let n = p.len() - 1;
    let mut out = vec![Q::zero(); n];
    let mut carry = Q::zero();
    for i in (0..n).rev() {
        carry = &p[i + 1] + carry * r;
        out[i] = carry.clone();
    }
    out
}

fn divisors(n: &Z, limit: u64) -> Option<Vec<Z>> {
    let n = n.abs();
    let mut small = Vec::new();
    let mut d = Z::one();
    while &d * &d <= n {
        if d > Z::from(limit) {
            return None;
        }
        if n.is_multiple_of(&d) {
            small.push(d.clone());
        }
        d += 1;
    }
    let mut all = small.clone();
    for s in small.iter().rev() {
        let t = &n / s;
        if &t != s {
            all.push(t);
        }
    }
    Some(all)
}

/// Rational roots with multiplicities, and the leftover factor (lowest degree
/// first). Returns None when the constant term is too large to factor by
/// trial division.
pub fn rational_roots(p: &[Q]) -> Option<(Vec<(Q, usize)>, Vec<Q>)> {
    let mut p: Vec<Q> = p.to_vec();
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    let mut roots = Vec::new();
    let mut zero_mult = 0;
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((Q::zero(), zero_mult));
    }
    if p.len() <= 1 {
        return Some((roots, p));
    }
    let l = p.iter().fold(Z::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<Z> = p.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let nums = divisors(&ints[0], 10_000_000)?;
    let dens = divisors(ints.last().unwrap(), 10_000_000)?;
    let mut cands: Vec<Q> = Vec::new();
    for a in &nums {
        for b in &dens {
            for s in [Z::one(), -Z::one()] {
                let c = Q::new(&s * a, b.clone());
                if !cands.contains(&c) {
                    cands.push(c);
                }
            }
        }
    }
    cands.sort();
    for c in cands {
        let mut m = 0;
        while p.len() > 1 && poly_eval(&p, &c).is_zero() {
            p = deflate(&p, &c);
            m += 1;
        }
        if m > 0 {
            roots.push((c, m));
        }
    }
    Some((roots, p))
}
