//! Points of P¹(Q), continued fractions, and 2×2 matrices acting by Möbius maps.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Z = BigInt;
pub type Q = BigRational;

pub fn z(n: i64) -> Z {
    Z::from(n)
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(Z::from(n), Z::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(Z::from(n))
}

/// Format a rational as `p/q` (integers print without denominator).
pub fn fmt_q(x: &Q) -> String {
    x.to_string()
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = Z::from_str(n.trim()).map_err(|_| bad())?;
            let d = Z::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(Z::from_str(s).map_err(|_| bad())?)),
    }
}

/// A point of the projective line over Q, stored as a reduced fraction with
/// non-negative denominator. Infinity is `1/0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct P1 {
    num: Z,
    den: Z,
}

impl P1 {
    pub fn new(num: Z, den: Z) -> Result<P1> {
        if num.is_zero() && den.is_zero() {
            return Err(Error::Domain("0/0 is not a point".into()));
        }
        if den.is_zero() {
            return Ok(P1::infinity());
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / &g, den / &g);
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        Ok(P1 { num: n, den: d })
    }

    pub fn infinity() -> P1 {
        P1 { num: Z::one(), den: Z::zero() }
    }

    pub fn int(n: i64) -> P1 {
        P1 { num: Z::from(n), den: Z::one() }
    }

    pub fn frac(n: i64, d: i64) -> P1 {
        P1::new(Z::from(n), Z::from(d)).expect("nonzero fraction")
    }

    pub fn from_q(x: &Q) -> P1 {
        P1 { num: x.numer().clone(), den: x.denom().clone() }
    }

    pub fn is_infinite(&self) -> bool {
        self.den.is_zero()
    }

    pub fn num(&self) -> &Z {
        &self.num
    }

    pub fn den(&self) -> &Z {
        &self.den
    }

    pub fn to_q(&self) -> Option<Q> {
        if self.is_infinite() {
            None
        } else {
            Some(Q::new(self.num.clone(), self.den.clone()))
        }
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }
}

impl Ord for P1 {
    /// Finite points by value; infinity sorts last.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => (&self.num * &other.den).cmp(&(&other.num * &self.den)),
        }
    }
}

impl PartialOrd for P1 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for P1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for P1 {
    type Err = Error;
    fn from_str(s: &str) -> Result<P1> {
        let t = s.trim();
        if matches!(t, "inf" | "∞" | "1/0" | "-inf") {
            return Ok(P1::infinity());
        }
        Ok(P1::from_q(&parse_q(t)?))
    }
}

impl Serialize for P1 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for P1 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<P1, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integer 2×2 matrix. Elements of GL(2,Z) are those with determinant ±1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: Z,
    pub b: Z,
    pub c: Z,
    pub d: Z,
}

impl Mat2 {
    pub fn new(a: Z, b: Z, c: Z, d: Z) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Mat2 {
        Mat2::new(z(a), z(b), z(c), z(d))
    }

    pub fn identity() -> Mat2 {
        Mat2::from_i64(1, 0, 0, 1)
    }

    /// Order 2 in PSL(2,Z): swaps ∞ and 0.
    pub fn sigma() -> Mat2 {
        Mat2::from_i64(0, -1, 1, 0)
    }

    /// Order 3 in PSL(2,Z): 0 → 1 → ∞ → 0.
    pub fn tau() -> Mat2 {
        Mat2::from_i64(0, -1, 1, -1)
    }

    pub fn translation(n: i64) -> Mat2 {
        Mat2::from_i64(1, n, 0, 1)
    }

    pub fn det(&self) -> Z {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn pow(&self, k: u32) -> Mat2 {
        (0..k).fold(Mat2::identity(), |acc, _| acc.mul(self))
    }

    pub fn adjugate(&self) -> Mat2 {
        Mat2 { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    /// Inverse of a matrix with determinant ±1.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det.is_one() {
            Ok(self.adjugate())
        } else if (-&det).is_one() {
            Ok(self.adjugate().neg())
        } else {
            Err(Error::Domain(format!("determinant {det} is not a unit")))
        }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { a: -&self.a, b: -&self.b, c: -&self.c, d: -&self.d }
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    /// Representative of the class in PSL(2,Z) with (c,d) lexicographically
    /// positive, falling back to the sign of a.
    pub fn psl_canonical(&self) -> Mat2 {
        let flip = match self.c.sign() {
            num_bigint::Sign::Minus => true,
            num_bigint::Sign::Plus => false,
            num_bigint::Sign::NoSign => match self.d.sign() {
                num_bigint::Sign::Minus => true,
                num_bigint::Sign::Plus => false,
                num_bigint::Sign::NoSign => self.a.is_negative(),
            },
        };
        if flip {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn act(&self, x: &P1) -> P1 {
        let n = &self.a * &x.num + &self.b * &x.den;
        let d = &self.c * &x.num + &self.d * &x.den;
        P1::new(n, d).expect("invertible matrix")
    }

    pub fn to_q(&self) -> QMat2 {
        QMat2 {
            a: Q::from_integer(self.a.clone()),
            b: Q::from_integer(self.b.clone()),
            c: Q::from_integer(self.c.clone()),
            d: Q::from_integer(self.d.clone()),
        }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for Mat2 {
    type Err = Error;
    /// Parses `(a,b;c,d)`.
    fn from_str(s: &str) -> Result<Mat2> {
        let bad = || Error::Parse(format!("bad matrix {s:?}"));
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (top, bot) = t.split_once(';').ok_or_else(bad)?;
        let (a, b) = top.split_once(',').ok_or_else(bad)?;
        let (c, d) = bot.split_once(',').ok_or_else(bad)?;
        let p = |x: &str| Z::from_str(x.trim()).map_err(|_| bad());
        Ok(Mat2::new(p(a)?, p(b)?, p(c)?, p(d)?))
    }
}

impl Serialize for Mat2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Mat2, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rational 2×2 matrix with non-zero determinant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QMat2 {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub d: Q,
}

impl QMat2 {
    pub fn new(a: Q, b: Q, c: Q, d: Q) -> QMat2 {
        QMat2 { a, b, c, d }
    }

    pub fn identity() -> QMat2 {
        Mat2::identity().to_q()
    }

    pub fn diag(x: Q, y: Q) -> QMat2 {
        QMat2::new(x, Q::zero(), Q::zero(), y)
    }

    pub fn scalar(x: Q) -> QMat2 {
        QMat2::diag(x.clone(), x)
    }

    pub fn det(&self) -> Q {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn is_positive(&self) -> bool {
        self.det().is_positive()
    }

    pub fn mul(&self, o: &QMat2) -> QMat2 {
        QMat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn inverse(&self) -> QMat2 {
        let det = self.det();
        assert!(!det.is_zero(), "singular matrix");
        QMat2 {
            a: &self.d / &det,
            b: -&self.b / &det,
            c: -&self.c / &det,
            d: &self.a / &det,
        }
    }

    pub fn act(&self, x: &P1) -> P1 {
        let (xn, xd) = (Q::from_integer(x.num.clone()), Q::from_integer(x.den.clone()));
        let n = &self.a * &xn + &self.b * &xd;
        let d = &self.c * &xn + &self.d * &xd;
        // Clear denominators of the projective pair.
        let l = n.denom().lcm(d.denom());
        let nn = (n * Q::from_integer(l.clone())).to_integer();
        let dd = (d * Q::from_integer(l)).to_integer();
        P1::new(nn, dd).expect("invertible matrix")
    }

    /// Integer matrix, if all entries are integral.
    pub fn to_integer(&self) -> Option<Mat2> {
        if [&self.a, &self.b, &self.c, &self.d].iter().all(|x| x.is_integer()) {
            Some(Mat2::new(self.a.to_integer(), self.b.to_integer(), self.c.to_integer(), self.d.to_integer()))
        } else {
            None
        }
    }
}

impl fmt::Display for QMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}

/// Finite continued fraction `k0 + 1/(k1 + 1/(k2 + ...))`, canonical form with
/// last partial quotient ≥ 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContinuedFraction {
    pub k0: Z,
    pub partials: Vec<Z>,
}

impl ContinuedFraction {
    pub fn expand(x: &Q) -> ContinuedFraction {
        let k0 = x.floor().to_integer();
        let mut r = x - Q::from_integer(k0.clone());
        let mut partials = Vec::new();
        while !r.is_zero() {
            let y = r.recip();
            let k = y.floor().to_integer();
            r = y - Q::from_integer(k.clone());
            partials.push(k);
        }
        ContinuedFraction { k0, partials }
    }

    pub fn value(&self) -> Q {
        let mut acc: Option<Q> = None;
        for k in self.partials.iter().rev() {
            let kq = Q::from_integer(k.clone());
            acc = Some(match acc {
                None => kq,
                Some(t) => kq + t.recip(),
            });
        }
        let k0 = Q::from_integer(self.k0.clone());
        match acc {
            None => k0,
            Some(t) => k0 + t.recip(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.partials.iter().all(|k| k.is_positive())
            && self.partials.last().map_or(true, |k| *k >= z(2))
    }

    /// Numerator/denominator pairs `(p_k, q_k)` for k = −1..n.
    pub fn convergent_pairs(&self) -> Vec<(Z, Z)> {
        let mut out = vec![(Z::one(), Z::zero()), (self.k0.clone(), Z::one())];
        for k in &self.partials {
            let n = out.len();
            let (p1, q1) = out[n - 1].clone();
            let (p2, q2) = &out[n - 2];
            out.push((k * &p1 + p2, k * &q1 + q2));
        }
        out
    }

    pub fn convergents(&self) -> Vec<P1> {
        self.convergent_pairs()
            .into_iter()
            .map(|(p, q)| P1::new(p, q).expect("convergent"))
            .collect()
    }

    /// The matrices g_k for k = −1..n−1, each of determinant +1 with
    /// g_k(∞) = p_k/q_k and g_k(0) = p_{k+1}/q_{k+1}.
    pub fn gk_matrices(&self) -> Vec<Mat2> {
        let pq = self.convergent_pairs();
        pq.windows(2)
            .enumerate()
            .map(|(i, w)| {
                // i = k + 1, sign (−1)^{k+1} = (−1)^i
                let (p0, q0) = &w[0];
                let (p1, q1) = &w[1];
                if i % 2 == 0 {
                    Mat2::new(p0.clone(), p1.clone(), q0.clone(), q1.clone())
                } else {
                    Mat2::new(p0.clone(), -p1, q0.clone(), -q1)
                }
            })
            .collect()
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.partials.iter().map(|k| k.to_string()).collect();
        write!(f, "[{};{}]", self.k0, parts.join(","))
    }
}

impl FromStr for ContinuedFraction {
    type Err = Error;
    fn from_str(s: &str) -> Result<ContinuedFraction> {
        let bad = || Error::Parse(format!("bad continued fraction {s:?}"));
        let t = s.trim();
        let t = t.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let (head, tail) = t.split_once(';').unwrap_or((t, ""));
        let k0 = Z::from_str(head.trim()).map_err(|_| bad())?;
        let partials = tail
            .split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| Z::from_str(x).map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if partials.iter().any(|k| !k.is_positive()) {
            return Err(bad());
        }
        Ok(ContinuedFraction { k0, partials })
    }
}
