//! Floating-point helpers: log-gamma, logs of big rationals, compensated sums.

use core::f64::consts::PI;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of `|Γ(x)|` for real `x` that is not a non-positive integer.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        return libm::log(PI / libm::fabs(libm::sin(PI * x))) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * libm::log(2.0 * PI) + (x + 0.5) * libm::log(t) - t + libm::log(acc)
}

/// `ln(n!)`, exact up to rounding for `n <= 20`.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        let f: u64 = (1..=n).product();
        libm::log(f as f64)
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln(b^b / b!)` for a positive real `b`, i.e. `b ln b - ln Γ(b + 1)`.
pub fn ln_pow_over_gamma(b: f64) -> f64 {
    b * libm::log(b) - ln_gamma(b + 1.0)
}

/// `ln(N! / N^N)`, the log of the van der Waerden bound.
pub fn ln_vdw(n: u64) -> f64 {
    ln_factorial(n) - n as f64 * libm::log(n as f64)
}

/// Natural log of a positive big integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY));
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    libm::log(top) + shift as f64 * core::f64::consts::LN_2
}

/// Natural log of a nonnegative rational; `-inf` for zero, NaN for negatives.
pub fn ln_rational(x: &BigRational) -> f64 {
    match x.numer().sign() {
        Sign::NoSign => f64::NEG_INFINITY,
        Sign::Minus => f64::NAN,
        Sign::Plus => ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude()),
    }
}

/// Rational to `f64` that stays finite-accurate for large numerators and denominators.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if x.numer().sign() == Sign::Minus { -1.0 } else { 1.0 };
    let abs = BigRational::new(BigInt::from(x.numer().magnitude().clone()), x.denom().clone());
    sign * libm::exp(ln_rational(&abs))
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `ln(sum exp(x_k))`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: alloc::vec::Vec<f64> = xs.into_iter().collect();
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || !hi.is_finite() {
        return hi;
    }
    let s: f64 = xs.iter().map(|x| libm::exp(x - hi)).sum();
    hi + libm::log(s)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_libm_and_half_integers() {
        for k in 1..400 {
            let x = k as f64 * 0.173;
            assert!((ln_gamma(x) - libm::lgamma(x)).abs() < 1e-12, "x = {x}");
        }
        // Γ(2.5) = 3√π/4
        let exact = libm::log(0.75 * libm::sqrt(PI));
        assert!((ln_gamma(2.5) - exact).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.5 * libm::log(PI)).abs() < 1e-14);
        assert!((ln_gamma(-0.5) - libm::log(2.0 * libm::sqrt(PI))).abs() < 1e-13);
    }

    #[test]
    fn ln_factorial_small_and_large() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - libm::log(120.0)).abs() < 1e-15);
        let direct: f64 = (1..=30).map(|k| libm::log(k as f64)).sum();
        assert!((ln_factorial(30) - direct).abs() < 1e-11);
    }

    #[test]
    fn big_logs() {
        let x = BigUint::from(3u32).pow(2000);
        let expect = 2000.0 * libm::log(3.0);
        assert!((ln_biguint(&x) - expect).abs() < 1e-9);
        let r = BigRational::new(BigInt::from(1), BigInt::from(4));
        assert!((ln_rational(&r) + libm::log(4.0)).abs() < 1e-15);
        assert_eq!(ln_rational(&BigRational::zero()), f64::NEG_INFINITY);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn log_add_exp_handles_infinities() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((log_add_exp(0.0, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }
}
