//! Permanents: Ryser's formula with Gray-code subset order, the block
//! matrices `A(G; R, C)`, the doubly stochastic factorization of `per A`,
//! and the van der Waerden and Bregman-Minc bounds.

use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::model::ln_omega;
use crate::scaling::{minimize_f_for, PositiveMatrix, ScalingOptions};
use crate::special::{ln_vdw, CompensatedSum};
use crate::{Error, MarginPair, MarginVector, Matrix, Result};

pub const DEFAULT_PERMANENT_CAP: usize = 22;
/// Largest order accepted by [`permanent_rational`].
pub const RATIONAL_PERMANENT_CAP: usize = 12;

const DOUBLY_STOCHASTIC_TOL: f64 = 1e-10;
const ENTRY_BOUND_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-8;
const BOUND_TOL: f64 = 1e-12;

/// A square matrix with nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(Matrix<f64>);

impl SquareMatrix {
    pub fn new(entries: Matrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}x{} matrix is not square",
                entries.rows(),
                entries.cols()
            )));
        }
        if entries.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::NonPositiveInput(alloc::string::String::from(
                "entries must be nonnegative",
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn order(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.0
    }
}

/// Row and column block sizes of an `N x N` block matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    pub row_blocks: MarginVector,
    pub col_blocks: MarginVector,
}

impl BlockStructure {
    /// Block index of every row, then of every column.
    pub fn row_owner(&self) -> Vec<usize> {
        owners(&self.row_blocks)
    }

    pub fn col_owner(&self) -> Vec<usize> {
        owners(&self.col_blocks)
    }
}

fn owners(blocks: &MarginVector) -> Vec<usize> {
    blocks
        .entries()
        .iter()
        .enumerate()
        .flat_map(|(k, &size)| core::iter::repeat_n(k, size as usize))
        .collect()
}

fn check_cap(order: usize, cap: usize) -> Result<()> {
    if order > cap {
        return Err(Error::SizeCapExceeded { order, cap });
    }
    Ok(())
}

/// `per A` by Ryser's inclusion-exclusion, visiting column subsets in
/// Gray-code order so each step adds or removes one column.
pub fn permanent_exact(a: &SquareMatrix, cap: usize) -> Result<f64> {
    let n = a.order();
    check_cap(n, cap)?;
    if n == 0 {
        return Ok(1.0);
    }
    let m = a.matrix();
    let mut row_sums = vec![0.0; n];
    let mut total = CompensatedSum::new();
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        let adding = gray & (1 << j) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += m[(i, j)];
            } else {
                *s -= m[(i, j)];
            }
        }
        let prod: f64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            total.add(prod);
        } else {
            total.add(-prod);
        }
    }
    let per = total.value();
    Ok(if n.is_multiple_of(2) { per } else { -per })
}

/// Exact permanent of a rational matrix of order at most [`RATIONAL_PERMANENT_CAP`].
pub fn permanent_rational(a: &Matrix<BigRational>) -> Result<BigRational> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(alloc::string::String::from(
            "matrix is not square",
        )));
    }
    let n = a.rows();
    check_cap(n, RATIONAL_PERMANENT_CAP)?;
    if n == 0 {
        return Ok(BigRational::one());
    }
    let mut row_sums = vec![BigRational::zero(); n];
    let mut total = BigRational::zero();
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        let adding = gray & (1 << j) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += &a[(i, j)];
            } else {
                *s -= &a[(i, j)];
            }
        }
        let prod = row_sums.iter().fold(BigRational::one(), |p, s| p * s);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n.is_multiple_of(2) { total } else { -total })
}

/// `A(G; R, C)`: block `(i, j)` of size `r_i x c_j` filled with `g_ij`.
pub fn build_block_matrix<T: Clone>(
    g: &Matrix<T>,
    margins: &MarginPair,
) -> Result<(Matrix<T>, BlockStructure)> {
    if g.rows() != margins.m() || g.cols() != margins.n() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "g is {}x{}, margins need {}x{}",
            g.rows(),
            g.cols(),
            margins.m(),
            margins.n()
        )));
    }
    let blocks = BlockStructure {
        row_blocks: margins.rows().clone(),
        col_blocks: margins.cols().clone(),
    };
    let (ro, co) = (blocks.row_owner(), blocks.col_owner());
    let n = margins.total() as usize;
    Ok((Matrix::from_fn(n, n, |a, b| g[(ro[a], co[b])].clone()), blocks))
}

/// [`build_block_matrix`] for a nonnegative real `g`.
pub fn build_block_square(
    g: &Matrix<f64>,
    margins: &MarginPair,
) -> Result<(SquareMatrix, BlockStructure)> {
    let (a, blocks) = build_block_matrix(g, margins)?;
    Ok((SquareMatrix::new(a)?, blocks))
}

/// `per A(G; R, C)` without materializing `A`.
///
/// Ryser's sum only depends on how many columns of each block a subset
/// takes, so it collapses to `∏ (c_j + 1)` terms weighted by binomials:
///
/// ```text
/// per A = Σ_s (-1)^{N - Σ s_j} ∏_j C(c_j, s_j) ∏_i (Σ_j s_j g_ij)^{r_i}
/// ```
///
/// The smaller of the row and column enumerations is used.
pub fn permanent_block(g: &Matrix<f64>, margins: &MarginPair, cap: usize) -> Result<f64> {
    if g.rows() != margins.m() || g.cols() != margins.n() {
        return Err(Error::DimensionMismatch(alloc::string::String::from(
            "g does not match the margins",
        )));
    }
    check_cap(margins.total() as usize, cap)?;
    let size = |v: &MarginVector| v.entries().iter().map(|&x| x as f64 + 1.0).product::<f64>();
    if size(margins.rows()) < size(margins.cols()) {
        let gt = g.transpose();
        Ok(block_ryser(&gt, margins.cols().entries(), margins.rows().entries()))
    } else {
        Ok(block_ryser(g, margins.rows().entries(), margins.cols().entries()))
    }
}

fn block_ryser(g: &Matrix<f64>, rows: &[u64], cols: &[u64]) -> f64 {
    let (m, n) = (rows.len(), cols.len());
    let total: u64 = rows.iter().sum();
    let binom: Vec<Vec<f64>> = cols.iter().map(|&c| binomial_row(c)).collect();
    let mut s = vec![0u64; n];
    let mut row_sum = vec![0.0; m];
    let mut acc = CompensatedSum::new();
    loop {
        let chosen: u64 = s.iter().sum();
        let mut term: f64 = s.iter().enumerate().map(|(j, &sj)| binom[j][sj as usize]).product();
        for (i, rs) in row_sum.iter_mut().enumerate() {
            *rs = g.row(i).iter().zip(&s).map(|(g, &sj)| g * sj as f64).sum();
            term *= powi(*rs, rows[i]);
        }
        if (total - chosen).is_multiple_of(2) {
            acc.add(term);
        } else {
            acc.add(-term);
        }
        // odometer
        let mut j = 0;
        while j < n && s[j] == cols[j] {
            s[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        s[j] += 1;
    }
    acc.value()
}

fn binomial_row(n: u64) -> Vec<f64> {
    let mut row = vec![1.0; n as usize + 1];
    for k in 1..=n as usize {
        row[k] = row[k - 1] * (n as usize + 1 - k) as f64 / k as f64;
    }
    row
}

fn powi(mut x: f64, mut k: u64) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= x;
        }
        x *= x;
        k >>= 1;
    }
    acc
}

/// `N! / N^N`, the van der Waerden lower bound for doubly stochastic permanents.
pub fn vdw_lower_bound(n: u64) -> f64 {
    if n <= 170 {
        (1..=n).map(|k| k as f64 / n as f64).product()
    } else {
        libm::exp(ln_vdw(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Rows,
    Cols,
}

/// `∏ r_i! / r_i^{r_i}` (or the column analogue): the Bregman-Minc bound
/// for a doubly stochastic block matrix whose row block `i` has entries at
/// most `1 / r_i`.
pub fn bregman_upper_bound(margins: &MarginPair, side: Side) -> f64 {
    let v = match side {
        Side::Rows => margins.rows(),
        Side::Cols => margins.cols(),
    };
    match crate::model::omega_exact(v) {
        Some(w) => crate::special::rational_to_f64(&(BigRational::one() / w)),
        None => libm::exp(-ln_omega(v)),
    }
}

/// Which of the factorization properties held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorizationChecks {
    pub doubly_stochastic: bool,
    pub block_entries_bounded: bool,
    pub identity: bool,
    pub lower_bound: bool,
    pub upper_bound: bool,
}

impl FactorizationChecks {
    pub fn all(&self) -> bool {
        self.doubly_stochastic
            && self.block_entries_bounded
            && self.identity
            && self.lower_bound
            && self.upper_bound
    }
}

/// `per A = N^{-N} f^N ∏ r_i^{r_i} ∏ c_j^{c_j} · per B` with `B` doubly stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCertificate {
    pub b: SquareMatrix,
    pub blocks: BlockStructure,
    pub f_value: f64,
    /// `N^{-N} f^N ∏ r^r ∏ c^c`.
    pub tame_factor: f64,
    pub per_b: f64,
    pub per_a: f64,
    pub vdw_bound: f64,
    pub bregman_bound: f64,
    /// `|per A - tame · per B| / per A`.
    pub identity_error: f64,
    /// Largest deviation of a row or column sum of `B` from 1.
    pub stochastic_error: f64,
    pub checks: FactorizationChecks,
}

/// Scale `G`, divide block `(i, j)` of `A` by `μ_i r_i λ_j c_j`, and check the
/// resulting factorization and bounds.
pub fn factorize_doubly_stochastic(
    g: &PositiveMatrix,
    margins: &MarginPair,
    opts: &ScalingOptions,
    cap: usize,
) -> Result<FactorizationCertificate> {
    let n = margins.total() as usize;
    check_cap(n, cap)?;
    let mut opts = opts.clone();
    opts.tolerance = opts.tolerance.min(1e-12);
    let scaling = minimize_f_for(g, margins, &opts)?;
    let (r, c) = (margins.rows().entries(), margins.cols().entries());

    let small = Matrix::from_fn(margins.m(), margins.n(), |i, j| {
        scaling.l[(i, j)] / (r[i] as f64 * c[j] as f64)
    });
    let (b, blocks) = build_block_square(&small, margins)?;
    let (a, _) = build_block_square(g.matrix(), margins)?;
    let per_a = permanent_exact(&a, cap)?;
    let per_b = permanent_exact(&b, cap)?;

    let ln_margin_powers: f64 = r
        .iter()
        .chain(c)
        .map(|&x| x as f64 * libm::log(x as f64))
        .sum();
    let nf = n as f64;
    let tame_factor =
        libm::exp(nf * scaling.ln_f - nf * libm::log(nf) + ln_margin_powers);

    let bm = b.matrix();
    let mut stochastic_error: f64 = 0.0;
    for i in 0..n {
        let rs: f64 = bm.row(i).iter().sum();
        let cs: f64 = (0..n).map(|k| bm[(k, i)]).sum();
        stochastic_error = stochastic_error.max(libm::fabs(rs - 1.0)).max(libm::fabs(cs - 1.0));
    }
    let block_entries_bounded = (0..margins.m()).all(|i| {
        (0..margins.n()).all(|j| {
            let bound = (1.0 / r[i] as f64).min(1.0 / c[j] as f64);
            small[(i, j)] >= 0.0 && small[(i, j)] <= bound + ENTRY_BOUND_TOL
        })
    });
    let identity_error = libm::fabs(per_a - tame_factor * per_b) / per_a;
    let vdw_bound = vdw_lower_bound(n as u64);
    let bregman_bound = bregman_upper_bound(margins, Side::Rows)
        .min(bregman_upper_bound(margins, Side::Cols));

    let checks = FactorizationChecks {
        doubly_stochastic: stochastic_error <= DOUBLY_STOCHASTIC_TOL,
        block_entries_bounded,
        identity: identity_error <= IDENTITY_TOL,
        lower_bound: vdw_bound - BOUND_TOL <= per_b,
        upper_bound: per_b <= bregman_bound + BOUND_TOL,
    };
    Ok(FactorizationCertificate {
        b,
        blocks,
        f_value: scaling.f_value,
        tame_factor,
        per_b,
        per_a,
        vdw_bound,
        bregman_bound,
        identity_error,
        stochastic_error,
        checks,
    })
}
