//! Shared domain types: margins, weight matrices, exact counts, and the
//! margin weight `ω(B) = ∏ b_i^{b_i} / b_i!`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::special::{ln_pow_over_gamma, ln_rational, rational_to_f64};
use crate::{Error, Matrix, Result};

/// Exact value of a weighted table count.
pub type BigCount = BigRational;

/// Largest entry for which `ω` is evaluated in exact rational arithmetic.
pub const OMEGA_EXACT_MAX_ENTRY: u64 = 20;

/// A nonempty vector of positive integers (a row or column margin).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarginVector(Vec<u64>);

impl MarginVector {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() || entries.contains(&0) {
            return Err(Error::NonPositiveMargin);
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|B|`.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, t: u64) -> Self {
        Self(self.0.iter().map(|&b| b * t).collect())
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl fmt::Display for MarginVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Row and column margins with a common total `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginPair {
    rows: MarginVector,
    cols: MarginVector,
    total: u64,
}

impl MarginPair {
    pub fn new(rows: Vec<u64>, cols: Vec<u64>) -> Result<Self> {
        let rows = MarginVector::new(rows)?;
        let cols = MarginVector::new(cols)?;
        Self::from_vectors(rows, cols)
    }

    pub fn from_vectors(rows: MarginVector, cols: MarginVector) -> Result<Self> {
        let (r, c) = (rows.total(), cols.total());
        if r != c {
            return Err(Error::MismatchedTotals { rows: r, cols: c });
        }
        Ok(Self {
            rows,
            cols,
            total: r,
        })
    }

    pub fn rows(&self) -> &MarginVector {
        &self.rows
    }

    pub fn cols(&self) -> &MarginVector {
        &self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of rows `m`.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Number of columns `n`.
    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn transposed(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            total: self.total,
        }
    }

    pub fn scaled(&self, t: u64) -> Self {
        Self {
            rows: self.rows.scaled(t),
            cols: self.cols.scaled(t),
            total: self.total * t,
        }
    }
}

/// Nonnegative exact-rational `m x n` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Matrix<BigRational>);

impl WeightMatrix {
    pub fn new(entries: Matrix<BigRational>) -> Result<Self> {
        for i in 0..entries.rows() {
            for j in 0..entries.cols() {
                if entries[(i, j)].is_negative() {
                    return Err(Error::NegativeWeight { row: i, col: j });
                }
            }
        }
        Ok(Self(entries))
    }

    /// Weights from small integers.
    pub fn from_integers(rows: &[&[i64]]) -> Result<Self> {
        let m = Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&w| BigRational::from_integer(w.into())).collect())
                .collect(),
        )?;
        Self::new(m)
    }

    pub fn ones(m: usize, n: usize) -> Self {
        Self(Matrix::from_fn(m, n, |_, _| BigRational::one()))
    }

    /// 0-1 matrix from a support predicate.
    pub fn support(m: usize, n: usize, mut allowed: impl FnMut(usize, usize) -> bool) -> Self {
        Self(Matrix::from_fn(m, n, |i, j| {
            if allowed(i, j) {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }))
    }

    pub fn matrix(&self) -> &Matrix<BigRational> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.0[(i, j)]
    }

    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        !self.0[(i, j)].is_zero()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.0.map(rational_to_f64)
    }

    pub fn check_dims(&self, margins: &MarginPair) -> Result<()> {
        if self.rows() != margins.m() || self.cols() != margins.n() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "weights are {}x{}, margins need {}x{}",
                self.rows(),
                self.cols(),
                margins.m(),
                margins.n()
            )));
        }
        Ok(())
    }
}

/// Validate raw margins and weights together.
pub fn validate_instance(
    rows: &[u64],
    cols: &[u64],
    weights: &Matrix<BigRational>,
) -> Result<(MarginPair, WeightMatrix)> {
    let margins = MarginPair::new(rows.to_vec(), cols.to_vec())?;
    if weights.rows() != margins.m() || weights.cols() != margins.n() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "weights are {}x{}, margins need {}x{}",
            weights.rows(),
            weights.cols(),
            margins.m(),
            margins.n()
        )));
    }
    let weights = WeightMatrix::new(weights.clone())?;
    Ok((margins, weights))
}

/// `ω(B)` exactly, when every entry is at most [`OMEGA_EXACT_MAX_ENTRY`].
pub fn omega_exact(b: &MarginVector) -> Option<BigRational> {
    if b.entries().iter().any(|&x| x > OMEGA_EXACT_MAX_ENTRY) {
        return None;
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for &x in b.entries() {
        num *= BigUint::from(x).pow(x as u32);
        den *= (1..=x).map(BigUint::from).product::<BigUint>();
    }
    Some(BigRational::new(num.into(), den.into()))
}

/// `ln ω(B)`.
pub fn ln_omega(b: &MarginVector) -> f64 {
    match omega_exact(b) {
        Some(w) => ln_rational(&w),
        None => b.entries().iter().map(|&x| ln_pow_over_gamma(x as f64)).sum(),
    }
}

/// `ω(B) = ∏ b_i^{b_i} / b_i!`.
pub fn omega(b: &MarginVector) -> f64 {
    match omega_exact(b) {
        Some(w) => rational_to_f64(&w),
        None => libm::exp(ln_omega(b)),
    }
}

/// `ln ω` extended to positive real vectors through `Γ`.
pub fn ln_omega_real(b: &[f64]) -> f64 {
    b.iter().map(|&x| ln_pow_over_gamma(x)).sum()
}

/// `ln (s^s / Γ(s+1))^a` with `s = total / parts`.
pub fn ln_omega_uniform(total: u64, parts: u64) -> f64 {
    let s = total as f64 / parts as f64;
    parts as f64 * ln_pow_over_gamma(s)
}

/// `(s^s / Γ(s+1))^a` with `s = total / parts`.
pub fn omega_uniform(total: u64, parts: u64) -> f64 {
    libm::exp(ln_omega_uniform(total, parts))
}

/// Parse `"p/q"`, an integer, or a decimal literal such as `"-1.25e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidRational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut all = String::with_capacity(int_part.len() + frac_part.len());
    all.push_str(int_part);
    all.push_str(frac_part);
    let numer: BigInt = all.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn validate_examples() {
        let ones = |m, n| WeightMatrix::ones(m, n).matrix().clone();
        assert!(validate_instance(&[1, 1], &[1, 1], &ones(2, 2)).is_ok());
        assert_eq!(
            validate_instance(&[2, 1], &[1, 1], &ones(2, 2)).unwrap_err(),
            Error::MismatchedTotals { rows: 3, cols: 2 }
        );
        assert!(validate_instance(&[1, 1], &[2], &ones(2, 1)).is_ok());
        assert_eq!(
            validate_instance(&[0, 2], &[2], &ones(2, 1)).unwrap_err(),
            Error::NonPositiveMargin
        );
        assert!(matches!(
            validate_instance(&[1, 1], &[1, 1], &ones(2, 3)).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
        let mut w = ones(2, 2);
        w[(1, 0)] = q(-1, 2);
        assert_eq!(
            validate_instance(&[1, 1], &[1, 1], &w).unwrap_err(),
            Error::NegativeWeight { row: 1, col: 0 }
        );
    }

    #[test]
    fn omega_examples() {
        let b = |v: &[u64]| MarginVector::new(v.to_vec()).unwrap();
        assert_eq!(omega(&b(&[1, 1])), 1.0);
        assert_eq!(omega(&b(&[2, 1])), 2.0);
        assert_eq!(omega(&b(&[3, 1])), 4.5);
        assert_eq!(omega_exact(&b(&[3, 1])), Some(q(9, 2)));
        assert_eq!(omega_exact(&b(&[21])), None);
        // log-space path agrees with the exact one at the boundary
        let via_gamma: f64 = ln_pow_over_gamma(20.0);
        assert!((ln_omega(&b(&[20])) - via_gamma).abs() < 1e-12);
    }

    #[test]
    fn omega_uniform_examples() {
        assert!((omega_uniform(2, 2) - 1.0).abs() < 1e-14);
        assert!((omega_uniform(4, 2) - 4.0).abs() < 1e-13);
        // s = 1.5: Γ(2.5) = 3√π/4
        let g = 0.75 * libm::sqrt(core::f64::consts::PI);
        let expect = (libm::pow(1.5, 1.5) / g) * (libm::pow(1.5, 1.5) / g);
        assert!((omega_uniform(3, 2) - expect).abs() < 1e-13);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(" 2/4 ").unwrap(), q(1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5e-1").unwrap(), q(-3, 20));
        assert_eq!(parse_rational("1e3").unwrap(), q(1000, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        for bad in ["", "1/0", "abc", "1.2.3", "-", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn margin_pair_transpose_and_scale() {
        let p = MarginPair::new(vec![2, 1], vec![1, 1, 1]).unwrap();
        assert_eq!(p.transposed().rows().entries(), &[1, 1, 1]);
        assert_eq!(p.scaled(3).total(), 9);
        assert_eq!(alloc::format!("{}", p.rows()), "(2,1)");
    }
}
