//! Real scalar abstraction: every numerical routine in this crate is generic
//! over [`Real`], instantiated with `f64` (default) or [`Dd`] (double-double,
//! ~31 significant digits) for extended-precision runs.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Display
    + PartialOrd
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Machine epsilon of the representation.
    fn eps() -> Self;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn is_finite(self) -> bool;

    fn max(self, other: Self) -> Self {
        if self > other {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self < other {
            self
        } else {
            other
        }
    }
    /// Scale factor applied to f64-calibrated tolerances so they tighten in
    /// extended precision: `eps() / f64::EPSILON`, clamped to 1.
    fn tol_scale() -> f64 {
        (Self::eps().to_f64() / f64::EPSILON).min(1.0)
    }
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn eps() -> Self {
        f64::EPSILON
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Double-double scalar: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
///
/// Error-free transforms follow Dekker/Knuth; products use the hardware FMA
/// through `f64::mul_add`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub const PI: Dd = Dd::new(std::f64::consts::PI, 1.2246467991473532e-16);
    const PI_2: Dd = Dd::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);

    fn renorm(a: f64, b: f64) -> Self {
        let (hi, lo) = quick_two_sum(a, b);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, mut e) = two_prod(self.hi, b);
        e += self.lo * b;
        Dd::renorm(p, e)
    }

    /// Taylor sin/cos on |r| <= pi/4 after quadrant reduction.
    fn sin_cos_reduced(r: Dd) -> (Dd, Dd) {
        let r2 = r * r;
        let mut s = r;
        let mut term = r;
        let mut k = 1.0f64;
        loop {
            term = term * r2 / Dd::from_f64((k + 1.0) * (k + 2.0));
            term = -term;
            s = s + term;
            k += 2.0;
            if term.hi.abs() < 1e-35 || k > 60.0 {
                break;
            }
        }
        let mut c = Dd::from_f64(1.0);
        let mut term = Dd::from_f64(1.0);
        let mut k = 0.0f64;
        loop {
            term = term * r2 / Dd::from_f64((k + 1.0) * (k + 2.0));
            term = -term;
            c = c + term;
            k += 2.0;
            if term.hi.abs() < 1e-35 || k > 60.0 {
                break;
            }
        }
        (s, c)
    }

    fn sin_cos(self) -> (Dd, Dd) {
        let q = (self.hi / std::f64::consts::FRAC_PI_2).round();
        let r = self - Dd::PI_2.mul_f64(q);
        let (s, c) = Dd::sin_cos_reduced(r);
        match (q as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, rhs.hi);
        e += self.hi * rhs.lo + self.lo * rhs.hi;
        Dd::renorm(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs.mul_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs.mul_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::renorm(s, e + q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Display for Dd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

impl Real for Dd {
    fn zero() -> Self {
        Dd::new(0.0, 0.0)
    }
    fn one() -> Self {
        Dd::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Dd::new(x, 0.0)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn eps() -> Self {
        Dd::new(4.93e-32, 0.0)
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::zero();
        }
        // Newton step on 1/sqrt from an f64 seed; one iteration reaches dd accuracy.
        let x = 1.0 / self.hi.sqrt();
        let y = self.mul_f64(x);
        let residual = self - y * y;
        y + residual.mul_f64(x * 0.5)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_basic_arithmetic() {
        let a = Dd::from_f64(1.0) / Dd::from_f64(3.0);
        let b = a * Dd::from_f64(3.0) - Dd::from_f64(1.0);
        assert!(b.abs().to_f64() < 1e-31);
    }

    #[test]
    fn dd_sqrt() {
        let two = Dd::from_f64(2.0);
        let r = two.sqrt();
        assert!((r * r - two).abs().to_f64() < 1e-30);
    }

    #[test]
    fn dd_trig() {
        // sin^2 + cos^2 = 1 at several angles
        for k in 0..16 {
            let th = Dd::PI.mul_f64(2.0 * k as f64 / 16.0);
            let (s, c) = th.sin_cos();
            let r = s * s + c * c - Dd::from_f64(1.0);
            assert!(r.abs().to_f64() < 1e-30, "k={k} r={}", r.abs().to_f64());
        }
        // against f64 at a generic angle
        let th = 0.7391;
        let s = Dd::from_f64(th).sin();
        assert!((s.to_f64() - th.sin()).abs() < 1e-15);
    }

    #[test]
    fn dd_precision_exceeds_30_digits() {
        // (1 + h)^2 - 1 = 2h + h^2; at h = 1e-25 plain f64 returns 0 while
        // double-double keeps the 2h term to full relative accuracy.
        let h = 1e-25;
        let x = Dd::from_f64(1.0) + Dd::from_f64(h);
        let y = x * x - Dd::from_f64(1.0);
        assert!(((y.to_f64() - 2.0 * h) / (2.0 * h)).abs() < 1e-6);
        assert_eq!((1.0f64 + h) * (1.0 + h) - 1.0, 0.0);
    }
}
