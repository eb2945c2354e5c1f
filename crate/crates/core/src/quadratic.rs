//! Real quadratic numbers, eventually periodic continued fractions and their
//! Lyapunov exponents.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::boundary::{fmt_q, Mat2, P1, Q, Z};
use crate::error::{Error, Result};

/// `a + b√d` with `d` squarefree; rationals carry `b = 0, d = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadSurd {
    a: Q,
    b: Q,
    d: Z,
}

fn squarefree_split(d: &Z) -> (Z, Z) {
    let mut rest = d.clone();
    let mut square = Z::one();
    let mut p = Z::from(2);
    while &p * &p <= rest {
        let pp = &p * &p;
        while rest.is_multiple_of(&pp) {
            rest /= &pp;
            square *= &p;
        }
        p += 1;
    }
    (square, rest)
}

impl QuadSurd {
    pub fn rational(a: Q) -> QuadSurd {
        QuadSurd { a, b: Q::zero(), d: Z::one() }
    }

    /// `a + b√d` for a positive integer `d`.
    pub fn new(a: Q, b: Q, d: Z) -> Result<QuadSurd> {
        if !d.is_positive() {
            return Err(Error::Domain(format!("radicand {d} must be positive")));
        }
        let (square, free) = squarefree_split(&d);
        let b = b * Q::from_integer(square);
        if free.is_one() {
            return Ok(QuadSurd::rational(a + b));
        }
        if b.is_zero() {
            return Ok(QuadSurd::rational(a));
        }
        Ok(QuadSurd { a, b, d: free })
    }

    pub fn rational_part(&self) -> &Q {
        &self.a
    }

    pub fn surd_part(&self) -> &Q {
        &self.b
    }

    pub fn radicand(&self) -> &Z {
        &self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn field(&self, o: &QuadSurd) -> Z {
        match (self.is_rational(), o.is_rational()) {
            (true, _) => o.d.clone(),
            (_, true) => self.d.clone(),
            _ => {
                assert_eq!(self.d, o.d, "operands lie in different quadratic fields");
                self.d.clone()
            }
        }
    }

    fn build(a: Q, b: Q, d: Z) -> QuadSurd {
        if b.is_zero() {
            QuadSurd::rational(a)
        } else {
            QuadSurd { a, b, d }
        }
    }

    pub fn add(&self, o: &QuadSurd) -> QuadSurd {
        QuadSurd::build(&self.a + &o.a, &self.b + &o.b, self.field(o))
    }

    pub fn neg(&self) -> QuadSurd {
        QuadSurd::build(-&self.a, -&self.b, self.d.clone())
    }

    pub fn sub(&self, o: &QuadSurd) -> QuadSurd {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &QuadSurd) -> QuadSurd {
        let d = self.field(o);
        let dq = Q::from_integer(d.clone());
        QuadSurd::build(&self.a * &o.a + &self.b * &o.b * dq, &self.a * &o.b + &self.b * &o.a, d)
    }

    pub fn conjugate(&self) -> QuadSurd {
        QuadSurd::build(self.a.clone(), -&self.b, self.d.clone())
    }

    /// `a² − d·b²`.
    pub fn norm(&self) -> Q {
        &self.a * &self.a - &self.b * &self.b * Q::from_integer(self.d.clone())
    }

    pub fn inv(&self) -> Result<QuadSurd> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let c = self.conjugate();
        Ok(QuadSurd::build(c.a / &n, c.b / &n, c.d))
    }

    pub fn div(&self, o: &QuadSurd) -> Result<QuadSurd> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 || sa == sb {
            return if sa == 0 { sb } else { sa };
        }
        if sa == 0 {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * Q::from_integer(self.d.clone());
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }

    pub fn cmp_q(&self, x: &Q) -> Ordering {
        self.sub(&QuadSurd::rational(x.clone())).signum().cmp(&0)
    }

    pub fn cmp_surd(&self, o: &QuadSurd) -> Ordering {
        self.sub(o).signum().cmp(&0)
    }

    pub fn floor(&self) -> Z {
        let mut n = Z::from(self.to_f64().floor() as i64);
        while self.cmp_q(&Q::from_integer(n.clone())) == Ordering::Less {
            n -= 1;
        }
        while self.cmp_q(&Q::from_integer(&n + 1)) != Ordering::Less {
            n += 1;
        }
        n
    }

    pub fn to_f64(&self) -> f64 {
        let f = |x: &Q| x.to_f64().unwrap_or(f64::NAN);
        f(&self.a) + f(&self.b) * self.d.to_f64().unwrap_or(f64::NAN).sqrt()
    }

    /// `(a x + b)/(c x + d)`.
    pub fn mobius(&self, g: &Mat2) -> Result<QuadSurd> {
        let z = |v: &Z| QuadSurd::rational(Q::from_integer(v.clone()));
        let num = z(&g.a).mul(self).add(&z(&g.b));
        let den = z(&g.c).mul(self).add(&z(&g.d));
        num.div(&den)
    }

    pub fn abs(&self) -> QuadSurd {
        if self.signum() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }
}

fn sign_of(x: &Q) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", fmt_q(&self.a));
        }
        if !self.a.is_zero() {
            write!(f, "{} + ", fmt_q(&self.a))?;
        }
        write!(f, "{}*sqrt({})", fmt_q(&self.b), self.d)
    }
}

impl Serialize for QuadSurd {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Comparison of a boundary point with a quadratic irrational.
pub fn cmp_p1(x: &P1, theta: &QuadSurd) -> Ordering {
    match x.to_q() {
        None => Ordering::Greater,
        Some(v) => theta.cmp_q(&v).reverse(),
    }
}

/// `[a0; a1, …, a_m, (c1, …, c_p)]`, stored canonically: minimal period and
/// the shortest preperiod. An empty preperiod means the expansion is purely
/// periodic and `a0 = c1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicCF {
    preperiod: Vec<i64>,
    period: Vec<u64>,
}

impl PeriodicCF {
    pub fn new(preperiod: Vec<i64>, period: Vec<u64>) -> Result<PeriodicCF> {
        if period.is_empty() || period.contains(&0) {
            return Err(Error::Domain("period must be non-empty with entries ≥ 1".into()));
        }
        if preperiod.iter().skip(1).any(|&a| a < 1) {
            return Err(Error::Domain("partial quotients after the first must be ≥ 1".into()));
        }
        let mut period = period;
        let p = period.len();
        if let Some(m) = (1..=p).find(|m| p % m == 0 && (0..p).all(|i| period[i] == period[i % m])) {
            period.truncate(m);
        }
        let mut preperiod = preperiod;
        while let Some(&last) = preperiod.last() {
            if last < 1 || last as u64 != *period.last().unwrap() {
                break;
            }
            preperiod.pop();
            period.rotate_right(1);
        }
        Ok(PeriodicCF { preperiod, period })
    }

    pub fn preperiod(&self) -> &[i64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    /// Partial quotient `a_k`.
    pub fn digit(&self, k: usize) -> i64 {
        if k < self.preperiod.len() {
            self.preperiod[k]
        } else {
            self.period[(k - self.preperiod.len()) % self.period.len()] as i64
        }
    }

    /// Position of `a_k` within the expansion: preperiod index or period phase.
    pub fn phase(&self, k: usize) -> usize {
        let m = self.preperiod.len();
        if k < m {
            k
        } else {
            m + (k - m) % self.period.len()
        }
    }

    pub fn period_matrix(&self) -> Mat2 {
        self.period.iter().fold(Mat2::identity(), |acc, &c| acc.mul(&Mat2::from_i64(c as i64, 1, 1, 0)))
    }

    /// The exact value.
    pub fn value(&self) -> QuadSurd {
        let m = self.period_matrix();
        let (a, b, c, d) = (Q::from_integer(m.a.clone()), Q::from_integer(m.b), Q::from_integer(m.c.clone()), Q::from_integer(m.d));
        // c x² + (d − a) x − b = 0, positive root.
        let disc = (&a - &d) * (&a - &d) + Q::from_integer(Z::from(4)) * &b * &c;
        let two_c = Q::from_integer(Z::from(2)) * &c;
        let disc_z = disc.to_integer();
        let x = QuadSurd::new((&a - &d) / &two_c, Q::one() / &two_c, disc_z).expect("positive discriminant");
        let pre = self.preperiod.iter().fold(Mat2::identity(), |acc, &k| acc.mul(&Mat2::from_i64(k, 1, 1, 0)));
        x.mobius(&pre).expect("finite value")
    }

    /// `q_n` for the convergent `p_n/q_n = [a0; a1, …, a_n]`.
    pub fn denominator(&self, n: usize) -> BigInt {
        let (mut prev, mut cur) = (BigInt::zero(), BigInt::one());
        for k in 1..=n {
            let next = BigInt::from(self.digit(k)) * &cur + &prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `[a0; a1, …, a_n]` as a rational.
    pub fn truncation(&self, n: usize) -> Q {
        let mut x = Q::from_integer(Z::from(self.digit(n)));
        for k in (0..n).rev() {
            x = Q::from_integer(Z::from(self.digit(k))) + x.recip();
        }
        x
    }

    pub fn lyapunov(&self) -> Lyapunov {
        let m = self.period_matrix();
        let tr = &m.a + &m.d;
        let det = m.det();
        // Spectral radius (tr + √(tr² − 4 det))/2.
        let disc = &tr * &tr - Z::from(4) * det;
        let half = Q::new(Z::one(), Z::from(2));
        let unit = QuadSurd::new(Q::from_integer(tr) * &half, half, disc).expect("hyperbolic period matrix");
        Lyapunov { period: self.period.len(), unit }
    }
}

impl fmt::Display for PeriodicCF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let period = self.period.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self.preperiod.split_first() {
            None => write!(f, "[({period})]"),
            Some((a0, rest)) => {
                write!(f, "[{a0};")?;
                for a in rest {
                    write!(f, "{a},")?;
                }
                write!(f, "({period})]")
            }
        }
    }
}

impl FromStr for PeriodicCF {
    type Err = Error;

    /// Accepts `[a0;a1,…,(c1,…,cp)]` or `[(c1,…,cp)]`.
    fn from_str(s: &str) -> Result<PeriodicCF> {
        let bad = || Error::Parse(format!("periodic continued fraction: {s}"));
        let body = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let open = body.find('(').ok_or_else(bad)?;
        let close = body.rfind(')').ok_or_else(bad)?;
        if close + 1 != body.len() || close < open {
            return Err(bad());
        }
        let period = body[open + 1..close]
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let head = body[..open].trim().trim_end_matches(',');
        let mut pre = Vec::new();
        if !head.is_empty() {
            let (a0, rest) = match head.split_once(';') {
                Some((a, r)) => (a, r),
                None => (head, ""),
            };
            pre.push(a0.trim().parse::<i64>().map_err(|_| bad())?);
            for t in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                pre.push(t.parse::<i64>().map_err(|_| bad())?);
            }
        }
        PeriodicCF::new(pre, period)
    }
}

impl Serialize for PeriodicCF {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `(2/p)·log ε` with `ε > 1` a quadratic unit and `p` the period length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Lyapunov {
    pub period: usize,
    pub unit: QuadSurd,
}

impl Lyapunov {
    pub fn to_f64(&self) -> f64 {
        2.0 * self.unit.to_f64().ln() / self.period as f64
    }
}

impl fmt::Display for Lyapunov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2/{}*log({})", self.period, self.unit)
    }
}

/// Natural logarithm of a positive big integer.
pub fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 960 {
        return x.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `2·log q_n / n` with exact `q_n`.
pub fn lyapunov_estimate(theta: &PeriodicCF, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    Ok(2.0 * ln_big(&theta.denominator(n)) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{q, qi};

    fn cf(s: &str) -> PeriodicCF {
        s.parse().unwrap()
    }

    #[test]
    fn surd_arithmetic() {
        let r5 = QuadSurd::new(qi(0), qi(1), Z::from(5)).unwrap();
        assert_eq!(r5.mul(&r5), QuadSurd::rational(qi(5)));
        let r8 = QuadSurd::new(qi(1), q(1, 2), Z::from(8)).unwrap();
        assert_eq!(r8, QuadSurd::new(qi(1), qi(1), Z::from(2)).unwrap());
        let phi = QuadSurd::new(q(1, 2), q(1, 2), Z::from(5)).unwrap();
        // φ² = φ + 1
        assert_eq!(phi.mul(&phi), phi.add(&QuadSurd::rational(qi(1))));
        assert_eq!(phi.inv().unwrap(), phi.sub(&QuadSurd::rational(qi(1))));
        assert_eq!(phi.floor(), Z::from(1));
        assert_eq!(phi.neg().floor(), Z::from(-2));
        assert_eq!(phi.cmp_q(&q(1618, 1000)), Ordering::Greater);
        assert_eq!(phi.cmp_q(&q(1619, 1000)), Ordering::Less);
        assert_eq!(QuadSurd::new(qi(3), qi(-1), Z::from(8)).unwrap().signum(), 1);
        assert_eq!(QuadSurd::new(qi(2), qi(-1), Z::from(5)).unwrap().signum(), -1);
    }

    #[test]
    fn parsing_and_canonical_form() {
        let g = cf("[1;(1)]");
        assert_eq!(g, cf("[(1)]"));
        assert_eq!(g, cf("[1;1,1,(1,1)]"));
        assert_eq!(g.to_string(), "[(1)]");
        assert_eq!(cf("[1;(2)]").to_string(), "[1;(2)]");
        assert_eq!(cf("[2;(2)]"), cf("[(2)]"));
        assert_eq!(cf("[0;1,(2,3,2,3)]").period(), &[2, 3]);
        assert!("[1;2]".parse::<PeriodicCF>().is_err());
        assert!("[1;(0)]".parse::<PeriodicCF>().is_err());
    }

    #[test]
    fn exact_values() {
        let phi = QuadSurd::new(q(1, 2), q(1, 2), Z::from(5)).unwrap();
        assert_eq!(cf("[1;(1)]").value(), phi);
        assert_eq!(cf("[1;(2)]").value(), QuadSurd::new(qi(0), qi(1), Z::from(2)).unwrap());
        assert_eq!(cf("[(2)]").value(), QuadSurd::new(qi(1), qi(1), Z::from(2)).unwrap());
        // [0; 1, (2, 3)] against a long truncation.
        let x = cf("[-1;4,(2,3)]");
        let v = x.value().to_f64();
        let t = x.truncation(30);
        assert!((v - t.to_f64().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_exact_values() {
        let golden = cf("[1;(1)]").lyapunov();
        assert!((golden.to_f64() - 0.962_423_650_119_206_9).abs() < 1e-12);
        let sqrt2 = cf("[1;(2)]").lyapunov();
        assert_eq!(sqrt2, cf("[(2)]").lyapunov());
        assert!((sqrt2.to_f64() - 2.0 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_estimates_converge() {
        for s in ["[1;(1)]", "[1;(2)]", "[0;(1,2)]"] {
            let x = cf(s);
            let exact = x.lyapunov().to_f64();
            let e = lyapunov_estimate(&x, 10_000).unwrap();
            assert!((e - exact).abs() < 1e-3, "{s}: {e} vs {exact}");
            let coarse = lyapunov_estimate(&x, 100).unwrap();
            assert!((coarse - exact).abs() <= 20.0 * (100f64).ln() / 100.0);
        }
        assert!((lyapunov_estimate(&cf("[0;(3)]"), 1).unwrap() - 2.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn big_log() {
        let x = BigInt::from(3).pow(2000);
        assert!((ln_big(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
