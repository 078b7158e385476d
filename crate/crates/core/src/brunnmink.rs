//! Certification of Brunn-Minkowski type inequalities between exact table
//! counts for convex combinations of margins, the dominance-order
//! monotonicity of unweighted counts, and the `W(t) = exp(t c)` limit.
//!
//! Counts are exact; `ω` and `N^N / N!` are floating point, so every
//! comparison is done in log-space with an explicit slack.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::BigRational;

use crate::model::{ln_omega, ln_omega_uniform};
use crate::semiring::LogWeight;
use crate::special::{ln_rational, ln_vdw, rational_to_f64};
use crate::tables::{count_exact, count_in, enumerate_tables, CountLimits};
use crate::{BigCount, Error, MarginPair, Matrix, Result, WeightMatrix};

/// Relative slack for every normative comparison.
pub const CERTIFICATION_SLACK: f64 = 1e-9;

/// One `(R_k, C_k)` with its convex weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BmTerm {
    pub margins: MarginPair,
    pub alpha: f64,
}

/// Weights, terms `(R_k, C_k, α_k)` and the combination `(R, C) = Σ α_k (R_k, C_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmInstance {
    weights: WeightMatrix,
    terms: Vec<BmTerm>,
    combined: MarginPair,
}

impl BmInstance {
    pub fn new(weights: WeightMatrix, terms: Vec<BmTerm>, combined: MarginPair) -> Result<Self> {
        weights.check_dims(&combined)?;
        let alphas: Vec<f64> = terms.iter().map(|t| t.alpha).collect();
        crate::scaling::check_alphas(&alphas, terms.len())?;
        let n_total = combined.total();
        for t in &terms {
            weights.check_dims(&t.margins)?;
            if t.margins.total() != n_total {
                return Err(Error::InvalidConvexCombination(alloc::format!(
                    "term total {} differs from {}",
                    t.margins.total(),
                    n_total
                )));
            }
        }
        let check = |target: &[u64], pick: &dyn Fn(&MarginPair) -> &[u64]| {
            target.iter().enumerate().all(|(i, &x)| {
                let s: f64 = terms.iter().map(|t| t.alpha * pick(&t.margins)[i] as f64).sum();
                libm::fabs(s - x as f64) <= 1e-9 * (x as f64).max(1.0)
            })
        };
        if !check(combined.rows().entries(), &|p| p.rows().entries())
            || !check(combined.cols().entries(), &|p| p.cols().entries())
        {
            return Err(Error::InvalidConvexCombination(String::from(
                "combined margins are not the weighted sum of the terms",
            )));
        }
        Ok(Self {
            weights,
            terms,
            combined,
        })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn terms(&self) -> &[BmTerm] {
        &self.terms
    }

    pub fn combined(&self) -> &MarginPair {
        &self.combined
    }
}

/// Exact counts for the combination and each term.
#[derive(Debug, Clone, PartialEq)]
pub struct BmCounts {
    pub combined: BigCount,
    pub terms: Vec<BigCount>,
}

pub fn count_instance(inst: &BmInstance, limits: &CountLimits) -> Result<BmCounts> {
    let combined = count_exact(&inst.combined, &inst.weights, limits)?.count;
    let terms = inst
        .terms
        .iter()
        .map(|t| count_exact(&t.margins, &inst.weights, limits).map(|c| c.count))
        .collect::<Result<Vec<_>>>()?;
    Ok(BmCounts { combined, terms })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDetail {
    pub alpha: f64,
    pub count: BigCount,
    pub omega_rows: f64,
    pub omega_cols: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub slack: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    /// `ln lhs - ln rhs`; zero when both sides vanish.
    pub log_slack: f64,
    pub holds: bool,
    /// Margin-only factor multiplying `T(R, C; W)` on the left (factor bounds).
    pub factor: Option<f64>,
    /// Implied `κ̂ = factor^{2/(a-1)} / s` (`FactorBound::Kappa`).
    pub kappa_hat: Option<f64>,
    pub count: BigCount,
    pub omega_rows: f64,
    pub omega_cols: f64,
    pub terms: Vec<TermDetail>,
}

fn report(
    inst: &BmInstance,
    counts: &BmCounts,
    ln_lhs: f64,
    ln_rhs: f64,
    factor: Option<f64>,
    kappa_hat: Option<f64>,
) -> CertificationReport {
    let (lhs, rhs) = (libm::exp(ln_lhs), libm::exp(ln_rhs));
    let log_slack = if ln_rhs == f64::NEG_INFINITY {
        if ln_lhs == f64::NEG_INFINITY {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ln_lhs - ln_rhs
    };
    let holds = lhs >= rhs - CERTIFICATION_SLACK * rhs.abs().max(1.0);
    CertificationReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        ln_lhs,
        ln_rhs,
        log_slack,
        holds,
        factor,
        kappa_hat,
        count: counts.combined.clone(),
        omega_rows: libm::exp(ln_omega(inst.combined.rows())),
        omega_cols: libm::exp(ln_omega(inst.combined.cols())),
        terms: inst
            .terms
            .iter()
            .zip(&counts.terms)
            .map(|(t, c)| TermDetail {
                alpha: t.alpha,
                count: c.clone(),
                omega_rows: libm::exp(ln_omega(t.margins.rows())),
                omega_cols: libm::exp(ln_omega(t.margins.cols())),
            })
            .collect(),
    }
}

/// `Σ α_k ln x_k` with `0^0 = 1`.
fn weighted_log_sum(alphas: impl Iterator<Item = f64>, logs: impl Iterator<Item = f64>) -> f64 {
    alphas
        .zip(logs)
        .filter(|(a, _)| *a > 0.0)
        .map(|(a, l)| a * l)
        .sum()
}

/// `ln (N^N / N!)`.
fn ln_inverse_vdw(total: u64) -> f64 {
    -ln_vdw(total)
}

/// Main inequality:
/// `(N^N/N!) T(R,C;W) / (ω(R) ω(C)) ≥ ∏ (T(R_k,C_k;W) / min{ω(R_k), ω(C_k)})^{α_k}`.
pub fn certify_main_inequality(inst: &BmInstance, counts: &BmCounts) -> CertificationReport {
    let p = &inst.combined;
    let ln_lhs = ln_inverse_vdw(p.total()) + ln_rational(&counts.combined)
        - ln_omega(p.rows())
        - ln_omega(p.cols());
    let ln_rhs = weighted_log_sum(
        inst.terms.iter().map(|t| t.alpha),
        inst.terms.iter().zip(&counts.terms).map(|(t, c)| {
            ln_rational(c) - ln_omega(t.margins.rows()).min(ln_omega(t.margins.cols()))
        }),
    );
    report(inst, counts, ln_lhs, ln_rhs, None, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorBound {
    /// Factor `(N^N/N!) min{∏ r!/r^r, ∏ c!/c^c}`.
    Factorials,
    /// Factor `(N^N/N!) Γ^a(s+1) / s^N` with `a = min{m, n}`, `s = N / a`.
    Gamma,
    /// The `Gamma` factor read as `(κ̂ s)^{(a-1)/2}`.
    Kappa,
}

impl FactorBound {
    pub fn from_index(k: u8) -> Option<Self> {
        match k {
            1 => Some(Self::Factorials),
            2 => Some(Self::Gamma),
            3 => Some(Self::Kappa),
            _ => None,
        }
    }
}

/// `factor · T(R, C; W) ≥ ∏ T(R_k, C_k; W)^{α_k}` for the chosen part.
pub fn certify_factor_bound(
    inst: &BmInstance,
    counts: &BmCounts,
    part: FactorBound,
) -> Result<CertificationReport> {
    let p = &inst.combined;
    let total = p.total();
    let a = p.m().min(p.n()) as u64;
    let ln_factor = match part {
        FactorBound::Factorials => {
            ln_inverse_vdw(total) - ln_omega(p.rows()).max(ln_omega(p.cols()))
        }
        FactorBound::Gamma | FactorBound::Kappa => {
            ln_inverse_vdw(total) - ln_omega_uniform(total, a)
        }
    };
    let kappa_hat = if part == FactorBound::Kappa {
        if a == 1 {
            return Err(Error::KappaUndefined);
        }
        let s = total as f64 / a as f64;
        Some(libm::exp(2.0 * ln_factor / (a - 1) as f64) / s)
    } else {
        None
    };
    let ln_lhs = ln_factor + ln_rational(&counts.combined);
    let ln_rhs = weighted_log_sum(
        inst.terms.iter().map(|t| t.alpha),
        counts.terms.iter().map(ln_rational),
    );
    Ok(report(inst, counts, ln_lhs, ln_rhs, Some(libm::exp(ln_factor)), kappa_hat))
}

/// Evidence on the open problem whether `T(R,C;W) ≥ ∏ T(R_k,C_k;W)^{α_k}`
/// holds without any correction factor. Never a failure, only a record.
#[derive(Debug, Clone, PartialEq)]
pub struct UncorrectedRecord {
    pub ln_count: f64,
    pub ln_product: f64,
    /// True when the uncorrected inequality fails on this instance.
    pub counterexample_candidate: bool,
}

pub fn explore_uncorrected(inst: &BmInstance, counts: &BmCounts) -> UncorrectedRecord {
    let ln_count = ln_rational(&counts.combined);
    let ln_product = weighted_log_sum(
        inst.terms.iter().map(|t| t.alpha),
        counts.terms.iter().map(ln_rational),
    );
    UncorrectedRecord {
        ln_count,
        ln_product,
        counterexample_candidate: ln_product != f64::NEG_INFINITY
            && ln_count < ln_product - CERTIFICATION_SLACK,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Dominates,
    Dominated,
    Incomparable,
    Equal,
}

/// Dominance (majorization) order on descending-sorted vectors with equal sums.
pub fn dominance_compare(a: &[u64], b: &[u64]) -> Result<Dominance> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (sa, sb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    if sa != sb {
        return Err(Error::UnequalSums(sa, sb));
    }
    let sorted = |v: &[u64]| {
        let mut v = v.to_vec();
        v.sort_unstable_by(|x, y| y.cmp(x));
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (mut pa, mut pb) = (0u64, 0u64);
    let (mut above, mut below) = (false, false);
    for (x, y) in a.iter().zip(&b) {
        pa += x;
        pb += y;
        match pa.cmp(&pb) {
            Ordering::Greater => above = true,
            Ordering::Less => below = true,
            Ordering::Equal => {}
        }
    }
    Ok(match (above, below) {
        (false, false) => Dominance::Equal,
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::Dominated,
        (true, true) => Dominance::Incomparable,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// `T(R_1, C_1; 1)`.
    pub count_less_spread: BigCount,
    /// `T(R_2, C_2; 1)`.
    pub count_more_spread: BigCount,
    pub holds: bool,
}

/// `T(R_1, C_1; 1) ≥ T(R_2, C_2; 1)` whenever `R_2 ⊵ R_1` and `C_2 ⊵ C_1`.
pub fn check_dominance_monotonicity(
    first: &MarginPair,
    second: &MarginPair,
    limits: &CountLimits,
) -> Result<MonotonicityReport> {
    let ok = |d: Dominance| matches!(d, Dominance::Dominates | Dominance::Equal);
    let rows = dominance_compare(second.rows().entries(), first.rows().entries())?;
    let cols = dominance_compare(second.cols().entries(), first.cols().entries())?;
    if !(ok(rows) && ok(cols)) {
        return Err(Error::NotComparable);
    }
    let ones = WeightMatrix::ones(first.m(), first.n());
    let t1 = count_exact(first, &ones, limits)?.count;
    let t2 = count_exact(second, &ones, limits)?.count;
    Ok(MonotonicityReport {
        holds: t1 >= t2,
        count_less_spread: t1,
        count_more_spread: t2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPoint {
    pub t: f64,
    /// `t^{-1} ln T(R, C; W(t))`.
    pub value: f64,
    /// `value - M*`.
    pub gap: f64,
    /// `ln(#tables) / t`.
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    /// Best value of `Σ c_ij x_ij` over tables.
    pub max_value: BigRational,
    pub table_count: u64,
    pub points: Vec<LimitPoint>,
    /// Values do not increase as `t` grows.
    pub monotone: bool,
    pub holds: bool,
}

/// Compares `t^{-1} ln T(R, C; exp(t c))` with the best linear value `M*` over
/// integer tables, which it approaches from above: `0 ≤ value - M* ≤ ln(#tables)/t`.
pub fn weighted_limit_diagnostic(
    margins: &MarginPair,
    cost: &Matrix<BigRational>,
    t_grid: &[f64],
    limits: &CountLimits,
) -> Result<LimitReport> {
    if cost.rows() != margins.m() || cost.cols() != margins.n() {
        return Err(Error::DimensionMismatch(String::from("cost matrix shape")));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::NonPositiveInput(String::from("t must be positive")));
    }
    let ones = WeightMatrix::ones(margins.m(), margins.n());
    let mut best: Option<BigRational> = None;
    let mut table_count = 0u64;
    for table in enumerate_tables(margins, &ones, limits)? {
        table_count += 1;
        let mut v = BigRational::from_integer(0.into());
        for (i, row) in table.rows().iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                v += &cost[(i, j)] * BigRational::from_integer(d.into());
            }
        }
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    let max_value = best.expect("positive margins admit a table");
    let m_star = rational_to_f64(&max_value);
    let cost_f = cost.map(rational_to_f64);
    let ln_k = libm::log(table_count as f64);
    let tol = 1e-12 * m_star.abs().max(1.0);

    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let w = cost_f.map(|c| LogWeight(t * c));
        let (ln_t, _) = count_in(margins, &w, limits.memo_budget)?;
        let value = ln_t.ln() / t;
        let gap = value - m_star;
        let bound = ln_k / t;
        points.push(LimitPoint {
            t,
            value,
            gap,
            bound,
            within_bound: gap >= -tol && gap <= bound + tol,
        });
    }
    let mut sorted: Vec<&LimitPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let monotone = sorted.windows(2).all(|w| w[1].value <= w[0].value + tol);
    let holds = monotone && points.iter().all(|p| p.within_bound);
    Ok(LimitReport {
        max_value,
        table_count,
        points,
        monotone,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pair(r: &[u64], c: &[u64]) -> MarginPair {
        MarginPair::new(r.to_vec(), c.to_vec()).unwrap()
    }

    fn worked() -> BmInstance {
        BmInstance::new(
            WeightMatrix::ones(2, 2),
            vec![
                BmTerm {
                    margins: pair(&[3, 1], &[3, 1]),
                    alpha: 0.5,
                },
                BmTerm {
                    margins: pair(&[1, 3], &[1, 3]),
                    alpha: 0.5,
                },
            ],
            pair(&[2, 2], &[2, 2]),
        )
        .unwrap()
    }

    #[test]
    fn main_inequality_worked_instance() {
        let inst = worked();
        let counts = count_instance(&inst, &CountLimits::default()).unwrap();
        assert_eq!(counts.combined, BigRational::from_integer(3.into()));
        let rep = certify_main_inequality(&inst, &counts);
        assert!((rep.lhs - 2.0).abs() < 1e-12);
        assert!((rep.rhs - 2.0 / 4.5).abs() < 1e-12);
        assert!(rep.holds);
        assert_eq!(rep.omega_rows, 4.0);
        assert_eq!(rep.terms[0].omega_rows, 4.5);
    }

    #[test]
    fn factor_bounds_worked_instance() {
        let inst = worked();
        let counts = count_instance(&inst, &CountLimits::default()).unwrap();
        let p1 = certify_factor_bound(&inst, &counts, FactorBound::Factorials).unwrap();
        assert!((p1.factor.unwrap() - 8.0 / 3.0).abs() < 1e-12);
        assert!((p1.lhs - 8.0).abs() < 1e-12 && (p1.rhs - 2.0).abs() < 1e-12);
        assert!(p1.holds);
        let p2 = certify_factor_bound(&inst, &counts, FactorBound::Gamma).unwrap();
        assert!((p2.factor.unwrap() - 8.0 / 3.0).abs() < 1e-12);
        let p3 = certify_factor_bound(&inst, &counts, FactorBound::Kappa).unwrap();
        // a = 2, s = 2: κ̂ = factor² / 2
        assert!((p3.kappa_hat.unwrap() - (8.0 / 3.0) * (8.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_undefined_for_single_row() {
        let inst = BmInstance::new(
            WeightMatrix::ones(1, 2),
            vec![BmTerm {
                margins: pair(&[3], &[1, 2]),
                alpha: 1.0,
            }],
            pair(&[3], &[1, 2]),
        )
        .unwrap();
        let counts = count_instance(&inst, &CountLimits::default()).unwrap();
        assert_eq!(
            certify_factor_bound(&inst, &counts, FactorBound::Kappa).unwrap_err(),
            Error::KappaUndefined
        );
    }

    #[test]
    fn single_term_holds() {
        let w = WeightMatrix::from_integers(&[&[1, 2, 0], &[3, 1, 1]]).unwrap();
        let p = pair(&[2, 3], &[1, 2, 2]);
        let inst = BmInstance::new(
            w,
            vec![BmTerm {
                margins: p.clone(),
                alpha: 1.0,
            }],
            p,
        )
        .unwrap();
        let counts = count_instance(&inst, &CountLimits::default()).unwrap();
        assert!(certify_main_inequality(&inst, &counts).holds);
    }

    #[test]
    fn rejects_bad_combinations() {
        let bad = BmInstance::new(
            WeightMatrix::ones(2, 2),
            vec![
                BmTerm {
                    margins: pair(&[3, 1], &[3, 1]),
                    alpha: 0.5,
                },
                BmTerm {
                    margins: pair(&[1, 3], &[1, 3]),
                    alpha: 0.5,
                },
            ],
            pair(&[3, 1], &[2, 2]),
        );
        assert!(matches!(bad, Err(Error::InvalidConvexCombination(_))));
        let bad_alpha = BmInstance::new(
            WeightMatrix::ones(2, 2),
            vec![BmTerm {
                margins: pair(&[2, 2], &[2, 2]),
                alpha: 0.9,
            }],
            pair(&[2, 2], &[2, 2]),
        );
        assert!(matches!(bad_alpha, Err(Error::InvalidConvexCombination(_))));
    }

    #[test]
    fn dominance_examples() {
        assert_eq!(dominance_compare(&[3, 1], &[2, 2]).unwrap(), Dominance::Dominates);
        assert_eq!(dominance_compare(&[2, 2], &[2, 2]).unwrap(), Dominance::Equal);
        assert_eq!(dominance_compare(&[4, 2, 1], &[3, 3, 1]).unwrap(), Dominance::Dominates);
        assert_eq!(dominance_compare(&[3, 3, 1], &[4, 2, 1]).unwrap(), Dominance::Dominated);
        assert_eq!(dominance_compare(&[1, 3], &[2, 2]).unwrap(), Dominance::Dominates);
        assert_eq!(
            dominance_compare(&[3, 3, 0, 0], &[4, 1, 1, 0]).unwrap(),
            Dominance::Incomparable
        );
        assert_eq!(dominance_compare(&[3, 1], &[2, 1]).unwrap_err(), Error::UnequalSums(4, 3));
    }

    #[test]
    fn monotonicity_examples() {
        let limits = CountLimits::default();
        let rep = check_dominance_monotonicity(&pair(&[2, 2], &[2, 2]), &pair(&[3, 1], &[3, 1]), &limits)
            .unwrap();
        assert_eq!(rep.count_less_spread, BigRational::from_integer(3.into()));
        assert_eq!(rep.count_more_spread, BigRational::from_integer(2.into()));
        assert!(rep.holds);
        let same = check_dominance_monotonicity(&pair(&[2, 1], &[1, 2]), &pair(&[2, 1], &[1, 2]), &limits)
            .unwrap();
        assert_eq!(same.count_less_spread, same.count_more_spread);
        assert_eq!(
            check_dominance_monotonicity(&pair(&[3, 1], &[3, 1]), &pair(&[2, 2], &[2, 2]), &limits)
                .unwrap_err(),
            Error::NotComparable
        );
    }

    #[test]
    fn uncorrected_records_without_failing() {
        let inst = worked();
        let counts = count_instance(&inst, &CountLimits::default()).unwrap();
        let rec = explore_uncorrected(&inst, &counts);
        // 3 ≥ √(2·2)
        assert!(!rec.counterexample_candidate);
    }

    #[test]
    fn limit_diagnostic_diagonal_cost() {
        let cost = Matrix::from_rows(vec![
            vec![BigRational::from_integer(1.into()), BigRational::from_integer(0.into())],
            vec![BigRational::from_integer(0.into()), BigRational::from_integer(1.into())],
        ])
        .unwrap();
        let rep = weighted_limit_diagnostic(&pair(&[1, 1], &[1, 1]), &cost, &[5.0, 10.0, 20.0], &CountLimits::default())
            .unwrap();
        assert_eq!(rep.max_value, BigRational::from_integer(2.into()));
        assert_eq!(rep.table_count, 2);
        for p in &rep.points {
            let closed = libm::log(libm::exp(2.0 * p.t) + 1.0) / p.t;
            assert!((p.value - closed).abs() < 1e-12);
            assert!(p.gap <= libm::log(2.0) / p.t);
        }
        assert!(rep.monotone && rep.holds);
    }

    #[test]
    fn limit_diagnostic_zero_cost() {
        let cost = Matrix::from_fn(2, 2, |_, _| BigRational::from_integer(0.into()));
        let rep = weighted_limit_diagnostic(&pair(&[2, 2], &[2, 2]), &cost, &[1.0, 4.0], &CountLimits::default())
            .unwrap();
        assert_eq!(rep.table_count, 3);
        for p in &rep.points {
            assert!((p.value - libm::log(3.0) / p.t).abs() < 1e-12);
        }
        assert!(rep.holds);
    }
}
