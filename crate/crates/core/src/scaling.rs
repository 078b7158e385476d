//! Matrix scaling: factor a positive `G` as `g_ij = l_ij μ_i λ_j` with `L`
//! having prescribed margins, and the value
//!
//! ```text
//! f(G; R, C) = min Σ g_ij ξ_i η_j   subject to  ∏ ξ_i^{r_i} = ∏ η_j^{c_j} = 1.
//! ```
//!
//! The minimizer is found by alternating row/column normalization carried
//! out on log-factors, then normalized onto the product-one constraints.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::special::log_sum_exp;
use crate::{Error, MarginPair, Matrix, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Relative slack allowed when checking the convexity of `f`.
pub const LOG_CONCAVITY_SLACK: f64 = 1e-8;

/// An `m x n` matrix with strictly positive finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMatrix(Matrix<f64>);

impl PositiveMatrix {
    pub fn new(entries: Matrix<f64>) -> Result<Self> {
        if let Some(x) = entries.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::NonPositiveInput(alloc::format!("matrix entry {x}")));
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.0.map(|x| x * t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOptions {
    pub max_iterations: usize,
    /// Target for the largest relative row/column-sum violation of `L`.
    pub tolerance: f64,
    /// Starting log column factors; zeros when absent.
    pub initial_col_log: Option<Vec<f64>>,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            initial_col_log: None,
        }
    }
}

/// Result of [`minimize_f`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDecomposition {
    /// Scaled matrix with row sums `R` and column sums `C`.
    pub l: Matrix<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `f(G; R, C)`.
    pub f_value: f64,
    pub ln_f: f64,
    /// Minimizer `x*`.
    pub xi: Vec<f64>,
    /// Minimizer `y*`.
    pub eta: Vec<f64>,
    pub iterations: usize,
    /// Largest relative margin violation of `l`.
    pub residual: f64,
}

/// `F(G; x, y) = Σ g_ij ξ_i η_j`.
pub fn evaluate_f(g: &PositiveMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != g.rows() || y.len() != g.cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "vectors of length {} and {} for a {}x{} matrix",
            x.len(),
            y.len(),
            g.rows(),
            g.cols()
        )));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonPositiveInput(String::from("x and y must be positive")));
    }
    let m = g.matrix();
    let mut total = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let row: f64 = m.row(i).iter().zip(y).map(|(g, y)| g * y).sum();
        total += xi * row;
    }
    Ok(total)
}

fn check_real_margins(g: &PositiveMatrix, rows: &[f64], cols: &[f64]) -> Result<f64> {
    if rows.len() != g.rows() || cols.len() != g.cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "margins of length {} and {} for a {}x{} matrix",
            rows.len(),
            cols.len(),
            g.rows(),
            g.cols()
        )));
    }
    if rows.iter().chain(cols).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidMargins(String::from("margins must be positive")));
    }
    let (nr, nc): (f64, f64) = (rows.iter().sum(), cols.iter().sum());
    if libm::fabs(nr - nc) > 1e-12 * nr.max(nc) {
        return Err(Error::InvalidMargins(alloc::format!(
            "row total {nr} differs from column total {nc}"
        )));
    }
    Ok(nr)
}

/// Minimize `F(G; ·, ·)` over the product-one constraints for real margins.
pub fn minimize_f(
    g: &PositiveMatrix,
    rows: &[f64],
    cols: &[f64],
    opts: &ScalingOptions,
) -> Result<ScalingDecomposition> {
    let total = check_real_margins(g, rows, cols)?;
    let (m, n) = (g.rows(), g.cols());
    let lg = g.matrix().map(|x| libm::log(*x));
    let ln_r: Vec<f64> = rows.iter().map(|r| libm::log(*r)).collect();
    let ln_c: Vec<f64> = cols.iter().map(|c| libm::log(*c)).collect();

    let mut a = vec![0.0; m];
    let mut b = match &opts.initial_col_log {
        Some(init) if init.len() == n => init.clone(),
        Some(_) => return Err(Error::DimensionMismatch(String::from("initial column factors"))),
        None => vec![0.0; n],
    };

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iterations {
        iterations += 1;
        for i in 0..m {
            a[i] = ln_r[i] - log_sum_exp((0..n).map(|j| lg[(i, j)] + b[j]));
        }
        for j in 0..n {
            b[j] = ln_c[j] - log_sum_exp((0..m).map(|i| lg[(i, j)] + a[i]));
        }
        residual = margin_residual(&scaled(&lg, &a, &b), rows, cols);
        if residual <= opts.tolerance {
            break;
        }
    }
    if residual.is_nan() || residual > opts.tolerance {
        return Err(Error::ConvergenceFailure {
            iterations,
            residual,
        });
    }

    // Shift the log factors onto ∏ ξ^r = ∏ η^c = 1.
    let shift_a = a.iter().zip(rows).map(|(a, r)| a * r).sum::<f64>() / total;
    let shift_b = b.iter().zip(cols).map(|(b, c)| b * c).sum::<f64>() / total;
    let ln_xi: Vec<f64> = a.iter().map(|a| a - shift_a).collect();
    let ln_eta: Vec<f64> = b.iter().map(|b| b - shift_b).collect();
    let ln_f = log_sum_exp(
        (0..m).flat_map(|i| {
            let (lg, ln_xi, ln_eta) = (&lg, &ln_xi, &ln_eta);
            (0..n).map(move |j| lg[(i, j)] + ln_xi[i] + ln_eta[j])
        }),
    );
    let ln_total = libm::log(total);
    let mu = ln_xi.iter().map(|x| libm::exp(ln_f - ln_total - x)).collect();
    let lambda = ln_eta.iter().map(|y| libm::exp(-y)).collect();

    Ok(ScalingDecomposition {
        l: scaled(&lg, &a, &b),
        mu,
        lambda,
        f_value: libm::exp(ln_f),
        ln_f,
        xi: ln_xi.iter().map(|x| libm::exp(*x)).collect(),
        eta: ln_eta.iter().map(|y| libm::exp(*y)).collect(),
        iterations,
        residual,
    })
}

/// [`minimize_f`] for integer margins.
pub fn minimize_f_for(
    g: &PositiveMatrix,
    margins: &MarginPair,
    opts: &ScalingOptions,
) -> Result<ScalingDecomposition> {
    let rows: Vec<f64> = margins.rows().entries().iter().map(|&r| r as f64).collect();
    let cols: Vec<f64> = margins.cols().entries().iter().map(|&c| c as f64).collect();
    minimize_f(g, &rows, &cols, opts)
}

fn scaled(lg: &Matrix<f64>, a: &[f64], b: &[f64]) -> Matrix<f64> {
    Matrix::from_fn(lg.rows(), lg.cols(), |i, j| libm::exp(lg[(i, j)] + a[i] + b[j]))
}

/// Largest relative violation of the row and column sums of `l`.
pub fn margin_residual(l: &Matrix<f64>, rows: &[f64], cols: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let s: f64 = l.row(i).iter().sum();
        worst = worst.max(libm::fabs(s - r) / r);
    }
    for (j, c) in cols.iter().enumerate() {
        let s: f64 = (0..l.rows()).map(|i| l[(i, j)]).sum();
        worst = worst.max(libm::fabs(s - c) / c);
    }
    worst
}

/// One term `(G_k, R_k, C_k)` of a convex combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTerm {
    pub g: PositiveMatrix,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogConcavityReport {
    /// `f(Σ α_k G_k; Σ α_k R_k, Σ α_k C_k)`.
    pub lhs: f64,
    /// `∏ f(G_k; R_k, C_k)^{α_k}`.
    pub rhs: f64,
    pub gap: f64,
    /// `ln lhs - ln rhs`.
    pub log_gap: f64,
    pub holds: bool,
}

/// Checks `f(G; R, C) ≥ ∏ f^{α_k}(G_k; R_k, C_k)` for the convex combination.
pub fn check_log_concavity(
    terms: &[ScalingTerm],
    alphas: &[f64],
    opts: &ScalingOptions,
) -> Result<LogConcavityReport> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidConvexCombination(String::from("no terms")))?;
    check_alphas(alphas, terms.len())?;
    let (m, n) = (first.g.rows(), first.g.cols());
    let total: f64 = first.rows.iter().sum();
    for t in terms {
        check_real_margins(&t.g, &t.rows, &t.cols)?;
        if t.g.rows() != m || t.g.cols() != n {
            return Err(Error::DimensionMismatch(String::from("terms differ in shape")));
        }
        let tr: f64 = t.rows.iter().sum();
        if libm::fabs(tr - total) > 1e-12 * total {
            return Err(Error::InvalidConvexCombination(String::from(
                "terms have different totals",
            )));
        }
    }

    let mut g = Matrix::from_fn(m, n, |_, _| 0.0);
    let mut rows = vec![0.0; m];
    let mut cols = vec![0.0; n];
    let mut ln_rhs = 0.0;
    for (t, &alpha) in terms.iter().zip(alphas) {
        for i in 0..m {
            for j in 0..n {
                g[(i, j)] += alpha * t.g.matrix()[(i, j)];
            }
        }
        rows.iter_mut().zip(&t.rows).for_each(|(r, x)| *r += alpha * x);
        cols.iter_mut().zip(&t.cols).for_each(|(c, x)| *c += alpha * x);
        if alpha > 0.0 {
            ln_rhs += alpha * minimize_f(&t.g, &t.rows, &t.cols, opts)?.ln_f;
        }
    }
    let ln_lhs = minimize_f(&PositiveMatrix::new(g)?, &rows, &cols, opts)?.ln_f;
    let (lhs, rhs) = (libm::exp(ln_lhs), libm::exp(ln_rhs));
    Ok(LogConcavityReport {
        lhs,
        rhs,
        gap: lhs - rhs,
        log_gap: ln_lhs - ln_rhs,
        holds: ln_lhs >= ln_rhs - LOG_CONCAVITY_SLACK,
    })
}

pub(crate) fn check_alphas(alphas: &[f64], terms: usize) -> Result<()> {
    if alphas.len() != terms || terms == 0 {
        return Err(Error::InvalidConvexCombination(alloc::format!(
            "{} weights for {terms} terms",
            alphas.len()
        )));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidConvexCombination(String::from(
            "weights must be nonnegative",
        )));
    }
    let s: f64 = alphas.iter().sum();
    if libm::fabs(s - 1.0) > 1e-12 {
        return Err(Error::InvalidConvexCombination(alloc::format!(
            "weights sum to {s}"
        )));
    }
    Ok(())
}
