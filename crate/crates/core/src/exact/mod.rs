//! Exact real numbers of the shape `Σ c_i · π^{e_i} · Π p^{f_{i,p}}`.
//!
//! Coefficients `c_i` are rationals, `e_i` rational exponents of pi and
//! `f_{i,p} ∈ (0, 1)` fractional exponents of primes. Distinct
//! (pi-exponent, radical) pairs are linearly independent over the rationals
//! (pi is transcendental, and normalized radicals are independent), so an
//! expression is zero exactly when every grouped coefficient vanishes. Signs
//! of nonzero expressions are certified with [`Certifier`] enclosures.

mod interval;
pub mod rational;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use interval::{Certifier, Interval};
pub use rational::Rational;

use crate::error::{Error, Result};

/// Small rational exponent.
pub type Exponent = Ratio<i64>;

/// `π^pi · Π p^{e_p}` with every `e_p` in the open interval (0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PowerProduct {
    pi: Exponent,
    primes: BTreeMap<u64, Exponent>,
}

impl PowerProduct {
    pub fn is_one(&self) -> bool {
        self.pi.is_zero() && self.primes.is_empty()
    }

    pub fn pi_exponent(&self) -> Exponent {
        self.pi
    }

    fn mul(&self, other: &PowerProduct) -> (PowerProduct, Rational) {
        let mut coeff = Rational::one();
        let mut primes = self.primes.clone();
        for (&p, &e) in &other.primes {
            *primes.entry(p).or_insert_with(Exponent::zero) += e;
        }
        let primes = normalize_primes(primes, &mut coeff);
        (PowerProduct { pi: self.pi + other.pi, primes }, coeff)
    }

    fn pow(&self, r: Exponent) -> (PowerProduct, Rational) {
        let mut coeff = Rational::one();
        let primes = self.primes.iter().map(|(&p, &e)| (p, e * r)).collect();
        let primes = normalize_primes(primes, &mut coeff);
        (PowerProduct { pi: self.pi * r, primes }, coeff)
    }

    fn enclose(&self, cert: &Certifier) -> Interval {
        let mut acc = Interval::from_int(1, cert.scale());
        if !self.pi.is_zero() {
            acc = acc.mul(&cert.pow_ratio(cert.pi(), *self.pi.numer(), *self.pi.denom()));
        }
        for (&p, e) in &self.primes {
            let base = Interval::from_int(p as i64, cert.scale());
            acc = acc.mul(&cert.pow_ratio(&base, *e.numer(), *e.denom()));
        }
        acc
    }

    fn to_f64(&self) -> f64 {
        let mut v = std::f64::consts::PI.powf(self.pi.to_f64().unwrap());
        for (&p, e) in &self.primes {
            v *= (p as f64).powf(e.to_f64().unwrap());
        }
        v
    }
}

/// Moves integer parts of prime exponents into `coeff`, leaving (0, 1).
fn normalize_primes(primes: BTreeMap<u64, Exponent>, coeff: &mut Rational) -> BTreeMap<u64, Exponent> {
    let mut out = BTreeMap::new();
    for (p, e) in primes {
        let whole = e.floor();
        let frac = e - whole;
        let w = whole.to_integer();
        if w != 0 {
            *coeff *= rational::pow_i(&rational::int(p as i64), w as i32);
        }
        if !frac.is_zero() {
            out.insert(p, frac);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactReal {
    terms: BTreeMap<PowerProduct, Rational>,
}

impl ExactReal {
    pub fn zero() -> Self {
        ExactReal::default()
    }

    pub fn one() -> Self {
        ExactReal::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(PowerProduct::default(), q);
        }
        ExactReal { terms }
    }

    pub fn from_int(n: i64) -> Self {
        ExactReal::from_rational(rational::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        ExactReal::from_rational(rational::rat(n, d))
    }

    /// `c · π^e`.
    pub fn pi_power(c: Rational, e: Exponent) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(PowerProduct { pi: e, primes: BTreeMap::new() }, c);
        }
        ExactReal { terms }
    }

    pub fn pi() -> Self {
        ExactReal::pi_power(Rational::one(), Exponent::one())
    }

    /// `4π²`, the flat-torus eigenvalue constant.
    pub fn four_pi_sq() -> Self {
        ExactReal::pi_power(rational::int(4), Exponent::from_integer(2))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PowerProduct, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (u, c) = self.terms.iter().next().unwrap();
                u.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// `(c, U)` when the value is the single term `c·U`.
    pub fn as_monomial(&self) -> Option<(&Rational, &PowerProduct)> {
        if self.terms.len() == 1 {
            let (u, c) = self.terms.iter().next().unwrap();
            Some((c, u))
        } else {
            None
        }
    }

    fn add_term(&mut self, u: PowerProduct, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(u.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&u);
        }
    }

    pub fn scale(&self, q: &Rational) -> ExactReal {
        if q.is_zero() {
            return ExactReal::zero();
        }
        ExactReal { terms: self.terms.iter().map(|(u, c)| (u.clone(), c * q)).collect() }
    }

    /// Multiplicative inverse of a single nonzero term.
    pub fn recip(&self) -> Result<ExactReal> {
        let (c, u) = self
            .as_monomial()
            .ok_or_else(|| Error::Unsupported(format!("reciprocal of multi-term value {self}")))?;
        let (inv, k) = u.pow(-Exponent::one());
        let mut out = ExactReal::zero();
        out.add_term(inv, c.recip() * k);
        Ok(out)
    }

    /// Division by a single nonzero term.
    pub fn div(&self, other: &ExactReal) -> Result<ExactReal> {
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, n: i32) -> Result<ExactReal> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = ExactReal::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        Ok(acc)
    }

    /// `self^r` for a positive single-term value (or zero with `r > 0`).
    pub fn pow_ratio(&self, r: Exponent) -> Result<ExactReal> {
        if r.is_integer() {
            return self.powi(r.to_integer() as i32);
        }
        if self.is_zero() {
            return if r.is_positive() {
                Ok(ExactReal::zero())
            } else {
                Err(Error::InvalidInput("zero to a non-positive power".into()))
            };
        }
        let (c, u) = self
            .as_monomial()
            .ok_or_else(|| Error::Unsupported(format!("fractional power of multi-term value {self}")))?;
        if !c.is_positive() {
            return Err(Error::InvalidInput(format!("fractional power of negative value {self}")));
        }
        let mut primes: BTreeMap<u64, Exponent> = BTreeMap::new();
        for (p, k) in factor(c.numer())? {
            *primes.entry(p).or_insert_with(Exponent::zero) += Exponent::from_integer(k);
        }
        for (p, k) in factor(c.denom())? {
            *primes.entry(p).or_insert_with(Exponent::zero) -= Exponent::from_integer(k);
        }
        for (&p, &e) in &u.primes {
            *primes.entry(p).or_insert_with(Exponent::zero) += e;
        }
        let scaled = primes.into_iter().map(|(p, e)| (p, e * r)).collect();
        let mut coeff = Rational::one();
        let primes = normalize_primes(scaled, &mut coeff);
        let mut out = ExactReal::zero();
        out.add_term(PowerProduct { pi: u.pi * r, primes }, coeff);
        Ok(out)
    }

    pub fn sqrt(&self) -> Result<ExactReal> {
        self.pow_ratio(Exponent::new(1, 2))
    }

    pub fn enclose(&self, cert: &Certifier) -> Interval {
        let mut acc = Interval::from_int(0, cert.scale());
        for (u, c) in &self.terms {
            let term = cert.rational(c).mul(&u.enclose(cert));
            acc = acc.add(&term);
        }
        acc
    }

    /// Certified sign: exact for zero, interval-based otherwise.
    pub fn sign(&self, cert: &Certifier) -> Result<Ordering> {
        if self.is_zero() {
            return Ok(Ordering::Equal);
        }
        if let Some(q) = self.as_rational() {
            return Ok(q.cmp(&Rational::zero()));
        }
        if self.terms.len() == 1 {
            // π and radical parts are positive.
            let c = self.terms.values().next().unwrap();
            return Ok(c.cmp(&Rational::zero()));
        }
        self.enclose(cert)
            .sign()
            .ok_or_else(|| Error::UndecidableComparison { bits: cert.bits(), what: format!("sign of {self}") })
    }

    pub fn cmp_with(&self, other: &ExactReal, cert: &Certifier) -> Result<Ordering> {
        (self - other).sign(cert)
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(u, c)| rational::to_f64(c) * u.to_f64()).sum::<f64>() + 0.0
    }
}

/// Prime factorization of |n| by trial division, with a primality test for
/// the remaining cofactor.
fn factor(n: &BigInt) -> Result<Vec<(u64, i64)>> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p: u64 = 2;
    while p <= 1 << 16 {
        let bp = BigInt::from(p);
        if &bp * &bp > n {
            break;
        }
        let mut k = 0;
        while (&n % &bp).is_zero() {
            n /= &bp;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n.is_one() {
        return Ok(out);
    }
    match n.to_u64() {
        Some(m) if is_prime_u64(m) => {
            out.push((m, 1));
            out.sort_unstable();
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("cannot factor {n} for a fractional power"))),
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl Add for &ExactReal {
    type Output = ExactReal;
    fn add(self, rhs: &ExactReal) -> ExactReal {
        let mut out = self.clone();
        for (u, c) in &rhs.terms {
            out.add_term(u.clone(), c.clone());
        }
        out
    }
}

impl Add for ExactReal {
    type Output = ExactReal;
    fn add(self, rhs: ExactReal) -> ExactReal {
        &self + &rhs
    }
}

impl Neg for &ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        ExactReal { terms: self.terms.iter().map(|(u, c)| (u.clone(), -c)).collect() }
    }
}

impl Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        -&self
    }
}

impl Sub for &ExactReal {
    type Output = ExactReal;
    fn sub(self, rhs: &ExactReal) -> ExactReal {
        self + &(-rhs)
    }
}

impl Sub for ExactReal {
    type Output = ExactReal;
    fn sub(self, rhs: ExactReal) -> ExactReal {
        &self - &rhs
    }
}

impl Mul for &ExactReal {
    type Output = ExactReal;
    fn mul(self, rhs: &ExactReal) -> ExactReal {
        let mut out = ExactReal::zero();
        for (u1, c1) in &self.terms {
            for (u2, c2) in &rhs.terms {
                let (u, k) = u1.mul(u2);
                out.add_term(u, c1 * c2 * k);
            }
        }
        out
    }
}

impl Mul for ExactReal {
    type Output = ExactReal;
    fn mul(self, rhs: ExactReal) -> ExactReal {
        &self * &rhs
    }
}

impl From<Rational> for ExactReal {
    fn from(q: Rational) -> Self {
        ExactReal::from_rational(q)
    }
}

fn fmt_exponent(e: &Exponent) -> String {
    if e.is_integer() && e.is_positive() {
        e.to_integer().to_string()
    } else {
        format!("({})", e)
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.pi.is_zero() {
            if self.pi.is_one() {
                parts.push("pi".to_string());
            } else {
                parts.push(format!("pi^{}", fmt_exponent(&self.pi)));
            }
        }
        // Primes sharing an exponent are printed as one base: 2^(1/2)*3^(1/2) -> 6^(1/2).
        let mut by_exp: BTreeMap<Exponent, BigInt> = BTreeMap::new();
        for (&p, &e) in &self.primes {
            *by_exp.entry(e).or_insert_with(BigInt::one) *= BigInt::from(p);
        }
        for (e, base) in by_exp {
            parts.push(format!("{}^{}", base, fmt_exponent(&e)));
        }
        write!(f, "{}", parts.join("*"))
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (u, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if u.is_one() {
                write!(f, "{}", rational::format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{u}")?;
            } else {
                write!(f, "{}*{u}", rational::format_rational(&mag))?;
            }
        }
        Ok(())
    }
}

impl FromStr for ExactReal {
    type Err = Error;

    /// Accepts the `Display` output and anything in the same grammar:
    /// sums of `*`-separated factors, each a rational/decimal, `pi`,
    /// `pi^e`, or `n^e`, with `e` an integer or `(p/q)`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        let mut out = ExactReal::zero();
        let bytes = s.as_bytes();
        let mut start = 0;
        let mut depth = 0;
        let mut pieces = Vec::new();
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && i > start && !matches!(bytes[i - 1], b'e' | b'E' | b'^') => {
                    pieces.push(&s[start..i]);
                    start = i;
                }
                _ => {}
            }
        }
        pieces.push(&s[start..]);
        for piece in pieces {
            out = &out + &parse_term(piece)?;
        }
        Ok(out)
    }
}

fn parse_exponent(s: &str) -> Result<Exponent> {
    let inner = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(s);
    let q = rational::parse_rational(inner)?;
    let n = q.numer().to_i64();
    let d = q.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Exponent::new(n, d)),
        _ => Err(Error::Parse(format!("exponent out of range: {s}"))),
    }
}

fn parse_term(s: &str) -> Result<ExactReal> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(Error::Parse(format!("dangling sign in {s:?}")));
    }
    let mut acc = ExactReal::one();
    for factor in body.split('*') {
        let value = if let Some((base, exp)) = factor.split_once('^') {
            let e = parse_exponent(exp)?;
            if base == "pi" {
                ExactReal::pi_power(Rational::one(), e)
            } else {
                ExactReal::from_rational(rational::parse_rational(base)?).pow_ratio(e)?
            }
        } else if factor == "pi" {
            ExactReal::pi()
        } else {
            ExactReal::from_rational(rational::parse_rational(factor)?)
        };
        acc = &acc * &value;
    }
    Ok(if neg { -acc } else { acc })
}
