//! Forward-mode dual numbers carrying a full gradient.

use core::ops::{Add, Div, Mul, Neg, Sub};
use smallvec::SmallVec;

/// A value together with its partial derivatives with respect to `n` inputs.
///
/// Partials are stored inline for up to four inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector {
    pub value: f64,
    pub partials: SmallVec<[f64; 4]>,
}

impl DualVector {
    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, partials: SmallVec::from_elem(0.0, n) }
    }

    /// The `index`-th coordinate function evaluated at `value`.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut d = Self::constant(value, n);
        d.partials[index] = 1.0;
        d
    }

    pub fn dim(&self) -> usize {
        self.partials.len()
    }

    /// Integer power. `k = 0` yields the constant one (including `0^0`).
    pub fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Self::constant(1.0, self.dim());
        }
        let value = libm::pow(self.value, k as f64);
        let slope = k as f64 * libm::pow(self.value, (k - 1) as f64);
        Self { value, partials: self.partials.iter().map(|p| slope * p).collect() }
    }

    fn zip(self, rhs: &Self, value: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        let mut partials = self.partials;
        for (a, b) in partials.iter_mut().zip(&rhs.partials) {
            *a = f(*a, *b);
        }
        Self { value, partials }
    }
}

impl Add for DualVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let v = self.value + rhs.value;
        self.zip(&rhs, v, |a, b| a + b)
    }
}

impl Sub for DualVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let v = self.value - rhs.value;
        self.zip(&rhs, v, |a, b| a - b)
    }
}

impl Mul for DualVector {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (self.value, rhs.value);
        self.zip(&rhs, u * v, |a, b| a * v + u * b)
    }
}

impl Div for DualVector {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let (u, v) = (self.value, rhs.value);
        let inv = 1.0 / v;
        let q = u * inv;
        self.zip(&rhs, q, |a, b| (a - q * b) * inv)
    }
}

impl Neg for DualVector {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.value = -self.value;
        for p in self.partials.iter_mut() {
            *p = -*p;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = DualVector::variable(3.0, 0, 2);
        let y = DualVector::variable(2.0, 1, 2);
        let p = x.clone() * y.clone();
        assert_eq!(p.value, 6.0);
        assert_eq!(p.partials.as_slice(), &[2.0, 3.0]);
        let q = x.clone() / y.clone();
        assert_eq!(q.value, 1.5);
        assert!((q.partials[0] - 0.5).abs() < 1e-15);
        assert!((q.partials[1] + 0.75).abs() < 1e-15);
        let c = x.powi(3);
        assert_eq!(c.value, 27.0);
        assert_eq!(c.partials[0], 27.0);
        assert_eq!((-y).partials[1], -1.0);
    }

    #[test]
    fn zero_power_is_constant() {
        let x = DualVector::variable(0.0, 0, 1);
        let c = x.powi(0);
        assert_eq!(c.value, 1.0);
        assert_eq!(c.partials[0], 0.0);
    }
}
