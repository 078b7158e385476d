//! Weight domains the counting dynamic program can run over.

use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

/// Commutative semiring with nonnegative integer powers.
pub trait Semiring: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn pow(&self, exp: u32) -> Self;
}

impl Semiring for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn pow(&self, exp: u32) -> Self {
        // 0^0 = 1
        Pow::pow(self, exp)
    }
}

impl Semiring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn pow(&self, exp: u32) -> Self {
        libm::pow(*self, exp as f64)
    }
}

/// A nonnegative real stored as its natural log (`-inf` is zero).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub fn ln(self) -> f64 {
        self.0
    }
}

impl Semiring for LogWeight {
    fn zero() -> Self {
        LogWeight(f64::NEG_INFINITY)
    }
    fn one() -> Self {
        LogWeight(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
    fn add_assign(&mut self, other: &Self) {
        self.0 = crate::special::log_add_exp(self.0, other.0);
    }
    fn mul(&self, other: &Self) -> Self {
        LogWeight(self.0 + other.0)
    }
    fn pow(&self, exp: u32) -> Self {
        if exp == 0 {
            LogWeight(0.0)
        } else {
            LogWeight(self.0 * exp as f64)
        }
    }
}
