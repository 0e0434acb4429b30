//! Complex numbers over a generic [`Real`] scalar.

use crate::scalar::Real;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Cx<R> {
    pub re: R,
    pub im: R,
}

pub type C64 = Cx<f64>;

impl<R: Real> Cx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cx { re, im }
    }
    pub fn zero() -> Self {
        Cx::new(R::zero(), R::zero())
    }
    pub fn one() -> Self {
        Cx::new(R::one(), R::zero())
    }
    pub fn real(re: R) -> Self {
        Cx::new(re, R::zero())
    }
    pub fn from_f64(re: f64, im: f64) -> Self {
        Cx::new(R::from_f64(re), R::from_f64(im))
    }
    pub fn conj(self) -> Self {
        Cx::new(self.re, -self.im)
    }
    pub fn abs_sq(self) -> R {
        self.re * self.re + self.im * self.im
    }
    /// Modulus, scaled to avoid overflow.
    pub fn abs(self) -> R {
        let ar = self.re.abs();
        let ai = self.im.abs();
        let m = ar.max(ai);
        if m == R::zero() {
            return R::zero();
        }
        let xr = self.re / m;
        let xi = self.im / m;
        m * (xr * xr + xi * xi).sqrt()
    }
    pub fn recip(self) -> Self {
        // Smith's algorithm for robust complex division.
        if self.re.abs() >= self.im.abs() {
            let r = self.im / self.re;
            let d = self.re + self.im * r;
            Cx::new(R::one() / d, -r / d)
        } else {
            let r = self.re / self.im;
            let d = self.re * r + self.im;
            Cx::new(r / d, -(R::one() / d))
        }
    }
    pub fn sqrt(self) -> Self {
        let m = self.abs();
        if m == R::zero() {
            return Cx::zero();
        }
        let half = R::from_f64(0.5);
        let re = ((m + self.re) * half).sqrt();
        let im_mag = ((m - self.re) * half).sqrt();
        let im = if self.im < R::zero() { -im_mag } else { im_mag };
        Cx::new(re, im)
    }
    /// e^{i theta} for a real angle.
    pub fn cis(theta: R) -> Self {
        Cx::new(theta.cos(), theta.sin())
    }
    pub fn scale(self, s: R) -> Self {
        Cx::new(self.re * s, self.im * s)
    }
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    pub fn to_c64(self) -> C64 {
        Cx::new(self.re.to_f64(), self.im.to_f64())
    }
    pub fn from_c64(z: C64) -> Self {
        Cx::from_f64(z.re, z.im)
    }
}

impl<R: Real> Add for Cx<R> {
    type Output = Cx<R>;
    fn add(self, rhs: Self) -> Self {
        Cx::new(self.re + rhs.re, self.im + rhs.im)
    }
}
impl<R: Real> Sub for Cx<R> {
    type Output = Cx<R>;
    fn sub(self, rhs: Self) -> Self {
        Cx::new(self.re - rhs.re, self.im - rhs.im)
    }
}
impl<R: Real> Mul for Cx<R> {
    type Output = Cx<R>;
    fn mul(self, rhs: Self) -> Self {
        Cx::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}
impl<R: Real> Div for Cx<R> {
    type Output = Cx<R>;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}
impl<R: Real> Neg for Cx<R> {
    type Output = Cx<R>;
    fn neg(self) -> Self {
        Cx::new(-self.re, -self.im)
    }
}
impl<R: Real> AddAssign for Cx<R> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
impl<R: Real> SubAssign for Cx<R> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}
impl<R: Real> MulAssign for Cx<R> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<R: Real> fmt::Display for Cx<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_roundtrip() {
        let a: C64 = Cx::from_f64(3.0, -2.0);
        let b: C64 = Cx::from_f64(-1.5, 0.25);
        let q = a / b;
        assert!((q * b - a).abs() < 1e-14);
    }

    #[test]
    fn sqrt_branches() {
        for &(re, im) in &[(4.0, 0.0), (-4.0, 0.0), (1.0, -1.0), (-3.0, 2.0)] {
            let z: C64 = Cx::from_f64(re, im);
            let s = z.sqrt();
            assert!((s * s - z).abs() < 1e-13);
            assert!(s.re >= 0.0);
        }
    }
}
