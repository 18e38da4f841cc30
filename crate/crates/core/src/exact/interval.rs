//! Fixed-point interval enclosures used to certify the sign of exact reals.
//!
//! An [`Interval`] stores integer endpoints `lo <= hi` at a common binary
//! scale `2^-scale`; every operation rounds outward, so the true value always
//! lies inside. [`Certifier`] fixes the working precision and carries an
//! enclosure of pi computed once at construction.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Extra bits carried below the user-visible precision to absorb rounding.
const GUARD_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    scale: u32,
}

fn floor_shift(x: &BigInt, bits: u32) -> BigInt {
    x.div_floor(&(BigInt::one() << bits))
}

fn ceil_shift(x: &BigInt, bits: u32) -> BigInt {
    -((-x).div_floor(&(BigInt::one() << bits)))
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Largest `r >= 0` with `r^n <= x` (x >= 0).
fn floor_root(x: &BigInt, n: u32) -> BigInt {
    if x.sign() != Sign::Plus {
        return BigInt::zero();
    }
    x.nth_root(n)
}

fn ceil_root(x: &BigInt, n: u32) -> BigInt {
    let r = floor_root(x, n);
    if num_traits::pow(r.clone(), n as usize) < *x {
        r + 1
    } else {
        r
    }
}

impl Interval {
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn from_rational(q: &BigRational, scale: u32) -> Self {
        let num = q.numer() << scale;
        let lo = num.div_floor(q.denom());
        let hi = ceil_div(&num, q.denom());
        Interval { lo, hi, scale }
    }

    pub fn from_int(n: i64, scale: u32) -> Self {
        let v = BigInt::from(n) << scale;
        Interval { lo: v.clone(), hi: v, scale }
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.scale)
    }

    pub fn upper(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.scale)
    }

    pub fn width(&self) -> BigRational {
        self.upper() - self.lower()
    }

    pub fn midpoint_f64(&self) -> f64 {
        let mid = (self.lower() + self.upper()) / BigInt::from(2);
        mid.to_f64().unwrap_or(f64::NAN)
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Sign of every point of the interval, or `None` if it straddles zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        debug_assert_eq!(self.scale, other.scale);
        Interval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi, scale: self.scale }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo, scale: self.scale }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        debug_assert_eq!(self.scale, other.scale);
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        Interval { lo: floor_shift(min, self.scale), hi: ceil_shift(max, self.scale), scale: self.scale }
    }

    /// Reciprocal; `None` if the interval contains zero.
    pub fn recip(&self) -> Option<Interval> {
        if self.contains_zero() {
            return None;
        }
        if self.hi.is_negative() {
            return self.neg().recip().map(|r| r.neg());
        }
        let one = BigInt::one() << (2 * self.scale);
        Some(Interval { lo: one.div_floor(&self.hi), hi: ceil_div(&one, &self.lo), scale: self.scale })
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::from_int(1, self.scale);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `n`-th root of a nonnegative quantity. Negative lower endpoints (from
    /// outward rounding of a tiny positive value) are clamped to zero.
    pub fn root(&self, n: u32) -> Interval {
        if n == 1 {
            return self.clone();
        }
        let shift = self.scale * (n - 1);
        let lo = floor_root(&(&self.lo << shift), n);
        let hi = ceil_root(&(&self.hi << shift), n);
        Interval { lo, hi, scale: self.scale }
    }
}

/// Working precision plus a certified enclosure of pi at that precision.
#[derive(Clone, Debug)]
pub struct Certifier {
    bits: u32,
    pi: Interval,
}

impl Default for Certifier {
    fn default() -> Self {
        Certifier::new(128)
    }
}

impl Certifier {
    /// `bits` is the number of fractional bits that must be certified; the
    /// internal scale adds guard bits on top of it.
    pub fn new(bits: u32) -> Self {
        let scale = bits + GUARD_BITS;
        Certifier { bits, pi: pi_enclosure(scale) }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn scale(&self) -> u32 {
        self.pi.scale
    }

    pub fn pi(&self) -> &Interval {
        &self.pi
    }

    pub fn rational(&self, q: &BigRational) -> Interval {
        Interval::from_rational(q, self.scale())
    }

    /// Enclosure of `base^(num/den)` for a positive base enclosure.
    pub fn pow_ratio(&self, base: &Interval, num: i64, den: i64) -> Interval {
        debug_assert!(den > 0);
        let p = base.powi(num.unsigned_abs() as u32);
        let p = if num < 0 { p.recip().expect("positive base") } else { p };
        p.root(den as u32)
    }
}

/// arctan(1/x) scaled by 2^w, with an error bound in units of 2^-w.
fn arctan_inv_fixed(x: u32, w: u32) -> (BigInt, BigInt) {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = (BigInt::one() << w) / &x;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        let term = &power / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        if k % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        power /= &x2;
        k += 1;
    }
    // Each truncated division loses < 1 ulp in `power` (errors shrink under
    // repeated division) and < 1 more in `term`; the tail is < 1 ulp.
    (sum, BigInt::from(3 * k + 3))
}

fn pi_enclosure(scale: u32) -> Interval {
    let w = scale + 16;
    let (a, ea) = arctan_inv_fixed(5, w);
    let (b, eb) = arctan_inv_fixed(239, w);
    let pi = BigInt::from(16) * a - BigInt::from(4) * b;
    let err = BigInt::from(16) * ea + BigInt::from(4) * eb;
    let lo = floor_shift(&(&pi - &err), w - scale);
    let hi = ceil_shift(&(&pi + &err), w - scale);
    Interval { lo, hi, scale }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn pi_enclosure_brackets_known_digits() {
        let c = Certifier::new(128);
        // 3.14159265358979323846264338327950288 truncated / rounded up
        let lo = BigRational::new(
            "314159265358979323846264338327950288".parse().unwrap(),
            num_traits::pow(BigInt::from(10), 35),
        );
        let hi = &lo + BigRational::new(1.into(), num_traits::pow(BigInt::from(10), 35));
        assert!(c.pi().lower() >= &lo - q(1, 1_000_000_000));
        assert!(c.pi().lower() < hi);
        assert!(c.pi().upper() > lo);
        assert!(c.pi().width() < q(1, 1) / BigRational::from_integer(BigInt::one() << 120u32));
    }

    #[test]
    fn root_and_recip_enclose() {
        let c = Certifier::new(64);
        let two = c.rational(&q(2, 1));
        let r = two.root(2);
        assert!(r.lower() * r.lower() <= q(2, 1));
        assert!(r.upper() * r.upper() >= q(2, 1));
        let inv = c.rational(&q(3, 1)).recip().unwrap();
        assert!(inv.lower() <= q(1, 3) && inv.upper() >= q(1, 3));
        assert!(c.rational(&q(0, 1)).recip().is_none());
    }

    #[test]
    fn mul_handles_signs() {
        let c = Certifier::new(64);
        let a = c.rational(&q(-3, 2));
        let b = c.rational(&q(5, 7));
        let p = a.mul(&b);
        assert!(p.lower() <= q(-15, 14) && p.upper() >= q(-15, 14));
        assert_eq!(p.sign(), Some(Ordering::Less));
    }
}
