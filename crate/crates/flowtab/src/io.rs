//! JSON formats for instances, networks and reports.
//!
//! Counts are written as strings (`"p/q"` or an integer) so that arbitrary
//! precision survives the round trip. Non-finite reals are written as `null`.

use flowtab_core::brunnmink::{BmInstance, BmTerm, CertificationReport, UncorrectedRecord};
use flowtab_core::flows::FlowNetwork;
use flowtab_core::permanent::FactorizationCertificate;
use flowtab_core::scaling::{PositiveMatrix, ScalingDecomposition};
use flowtab_core::special::rational_to_f64;
use flowtab_core::{parse_rational, BigCount, BigRational, MarginPair, Matrix, WeightMatrix};
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A JSON number or a rational written as a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<BigRational, CliError> {
        Ok(match self {
            Number::Int(i) => BigRational::from_integer((*i).into()),
            Number::Float(x) => parse_rational(&x.to_string())?,
            Number::Text(s) => parse_rational(s)?,
        })
    }

    pub fn to_f64(&self) -> Result<f64, CliError> {
        Ok(match self {
            Number::Int(i) => *i as f64,
            Number::Float(x) => *x,
            Number::Text(s) => rational_to_f64(&parse_rational(s)?),
        })
    }

    pub fn to_u64(&self) -> Result<u64, CliError> {
        let q = self.to_rational()?;
        if !q.is_integer() || q.is_negative() {
            return Err(CliError::Input(format!("expected a nonnegative integer, got {q}")));
        }
        q.to_integer()
            .try_into()
            .map_err(|_| CliError::Input(format!("{q} is too large")))
    }
}

pub fn count_string(x: &BigCount) -> String {
    x.to_string()
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn integers(v: &[Number]) -> Result<Vec<u64>, CliError> {
    v.iter().map(Number::to_u64).collect()
}

fn reals(v: &[Number]) -> Result<Vec<f64>, CliError> {
    v.iter().map(Number::to_f64).collect()
}

fn weight_matrix(rows: &[Vec<Number>]) -> Result<Matrix<BigRational>, CliError> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(Number::to_rational).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    Ok(Matrix::from_rows(rows)?)
}

fn to_rows<T: Clone>(m: &Matrix<T>) -> Vec<Vec<T>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// `{"rows":[…],"cols":[…],"weights":[[…]]}`; missing weights mean all ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub rows: Vec<Number>,
    pub cols: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<Number>>>,
}

impl InstanceJson {
    pub fn from_core(margins: &MarginPair, weights: &WeightMatrix) -> Self {
        let ints = |v: &[u64]| v.iter().map(|&x| Number::Int(x as i64)).collect();
        InstanceJson {
            rows: ints(margins.rows().entries()),
            cols: ints(margins.cols().entries()),
            weights: Some(
                to_rows(weights.matrix())
                    .into_iter()
                    .map(|r| r.iter().map(|w| Number::Text(w.to_string())).collect())
                    .collect(),
            ),
        }
    }

    pub fn margins(&self) -> Result<MarginPair, CliError> {
        Ok(MarginPair::new(integers(&self.rows)?, integers(&self.cols)?)?)
    }

    pub fn real_margins(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        Ok((reals(&self.rows)?, reals(&self.cols)?))
    }

    pub fn weights(&self) -> Result<WeightMatrix, CliError> {
        let (m, n) = (self.rows.len(), self.cols.len());
        let w = match &self.weights {
            None => WeightMatrix::ones(m, n),
            Some(rows) => WeightMatrix::new(weight_matrix(rows)?)?,
        };
        if w.rows() != m || w.cols() != n {
            return Err(flowtab_core::Error::DimensionMismatch(format!(
                "weights are {}x{}, margins need {m}x{n}",
                w.rows(),
                w.cols()
            ))
            .into());
        }
        Ok(w)
    }

    /// Margins and weights, validated together.
    pub fn instance(&self) -> Result<(MarginPair, WeightMatrix), CliError> {
        let margins = self.margins()?;
        let weights = self.weights()?;
        weights.check_dims(&margins)?;
        Ok((margins, weights))
    }

    pub fn positive_matrix(&self) -> Result<PositiveMatrix, CliError> {
        Ok(PositiveMatrix::new(self.weights()?.to_f64())?)
    }
}

/// A square matrix, bare or as `{"matrix":[[…]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Wrapped { matrix: Vec<Vec<Number>> },
    Bare(Vec<Vec<Number>>),
}

impl MatrixJson {
    pub fn to_rational(&self) -> Result<Matrix<BigRational>, CliError> {
        match self {
            MatrixJson::Wrapped { matrix } | MatrixJson::Bare(matrix) => weight_matrix(matrix),
        }
    }
}

/// `{"n":…,"edges":[[tail,head],…],"excess":[…],"capacities":[…|null]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub excess: Vec<i64>,
    #[serde(default)]
    pub capacities: Option<Vec<Option<u64>>>,
}

impl NetworkJson {
    pub fn network(&self) -> Result<FlowNetwork, CliError> {
        Ok(FlowNetwork::new(
            self.n,
            self.edges.clone(),
            self.excess.clone(),
            self.capacities.clone(),
        )?)
    }

    pub fn from_core(net: &FlowNetwork) -> Self {
        NetworkJson {
            n: net.vertex_count(),
            edges: net.edges().to_vec(),
            excess: net.excess().to_vec(),
            capacities: net.has_capacities().then(|| net.capacities().to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmTermJson {
    pub rows: Vec<Number>,
    pub cols: Vec<Number>,
    pub alpha: Number,
}

/// Combined margins `rows`, `cols`, shared `weights`, and the terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmInstanceJson {
    pub rows: Vec<Number>,
    pub cols: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<Number>>>,
    pub terms: Vec<BmTermJson>,
}

impl BmInstanceJson {
    pub fn instance(&self) -> Result<BmInstance, CliError> {
        let combined = InstanceJson {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            weights: self.weights.clone(),
        };
        let (margins, weights) = combined.instance()?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(BmTerm {
                    margins: MarginPair::new(integers(&t.rows)?, integers(&t.cols)?)?,
                    alpha: t.alpha.to_f64()?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(BmInstance::new(weights, terms, margins)?)
    }
}

/// A list of instances, bare, wrapped as `{"instances":[…]}`, or a single one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BmListJson {
    Wrapped { instances: Vec<BmInstanceJson> },
    List(Vec<BmInstanceJson>),
    Single(BmInstanceJson),
}

impl BmListJson {
    pub fn into_vec(self) -> Vec<BmInstanceJson> {
        match self {
            BmListJson::Wrapped { instances } | BmListJson::List(instances) => instances,
            BmListJson::Single(one) => vec![one],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountOutput {
    pub count: String,
    pub tables_visited: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLine {
    pub table: Vec<Vec<u64>>,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleOutput {
    pub f: f64,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl From<&ScalingDecomposition> for ScaleOutput {
    fn from(d: &ScalingDecomposition) -> Self {
        ScaleOutput {
            f: d.f_value,
            l: to_rows(&d.l),
            mu: d.mu.clone(),
            lambda: d.lambda.clone(),
            iterations: d.iterations,
            residual: d.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermanentOutput {
    pub permanent: f64,
    /// Exact value for small orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeChecks {
    pub doubly_stochastic: bool,
    pub block_entries_bounded: bool,
    pub identity: bool,
    pub lower_bound: bool,
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeOutput {
    pub holds: bool,
    pub f: f64,
    pub tame_factor: f64,
    pub per_a: f64,
    pub per_b: f64,
    pub vdw_bound: f64,
    pub bregman_bound: f64,
    pub identity_error: f64,
    pub stochastic_error: f64,
    pub checks: FactorizeChecks,
    pub row_blocks: Vec<u64>,
    pub col_blocks: Vec<u64>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

impl From<&FactorizationCertificate> for FactorizeOutput {
    fn from(c: &FactorizationCertificate) -> Self {
        FactorizeOutput {
            holds: c.checks.all(),
            f: c.f_value,
            tame_factor: c.tame_factor,
            per_a: c.per_a,
            per_b: c.per_b,
            vdw_bound: c.vdw_bound,
            bregman_bound: c.bregman_bound,
            identity_error: c.identity_error,
            stochastic_error: c.stochastic_error,
            checks: FactorizeChecks {
                doubly_stochastic: c.checks.doubly_stochastic,
                block_entries_bounded: c.checks.block_entries_bounded,
                identity: c.checks.identity,
                lower_bound: c.checks.lower_bound,
                upper_bound: c.checks.upper_bound,
            },
            row_blocks: c.blocks.row_blocks.entries().to_vec(),
            col_blocks: c.blocks.col_blocks.entries().to_vec(),
            b: to_rows(c.b.matrix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDetailJson {
    pub alpha: f64,
    pub count: String,
    pub omega_rows: f64,
    pub omega_cols: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailJson {
    pub count: String,
    pub omega_rows: f64,
    pub omega_cols: f64,
    pub terms: Vec<TermDetailJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub log_lhs: Option<f64>,
    pub log_rhs: Option<f64>,
    pub log_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hat: Option<f64>,
    pub detail: DetailJson,
}

impl From<&CertificationReport> for ReportJson {
    fn from(r: &CertificationReport) -> Self {
        ReportJson {
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
            holds: r.holds,
            log_lhs: finite(r.ln_lhs),
            log_rhs: finite(r.ln_rhs),
            log_slack: finite(r.log_slack),
            factor: r.factor,
            kappa_hat: r.kappa_hat,
            detail: DetailJson {
                count: count_string(&r.count),
                omega_rows: r.omega_rows,
                omega_cols: r.omega_cols,
                terms: r
                    .terms
                    .iter()
                    .map(|t| TermDetailJson {
                        alpha: t.alpha,
                        count: count_string(&t.count),
                        omega_rows: t.omega_rows,
                        omega_cols: t.omega_cols,
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBoundsJson {
    pub factorials: ReportJson,
    pub gamma: ReportJson,
    /// Absent when `κ̂` is undefined (a single row or column).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<ReportJson>,
}

/// Non-normative record for the uncorrected inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreJson {
    pub log_count: Option<f64>,
    pub log_product: Option<f64>,
    pub counterexample_candidate: bool,
}

impl From<&UncorrectedRecord> for ExploreJson {
    fn from(q: &UncorrectedRecord) -> Self {
        ExploreJson {
            log_count: finite(q.ln_count),
            log_product: finite(q.ln_product),
            counterexample_candidate: q.counterexample_candidate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyLine {
    pub index: usize,
    /// The main inequality and the factorial and gamma bounds all hold.
    pub holds: bool,
    pub main: ReportJson,
    pub factor_bounds: FactorBoundsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore: Option<ExploreJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KostantOutput {
    pub phi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowCountOutput {
    pub count: String,
    /// Brute-force count when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceOutput {
    /// `null` when every margin vanishes and only the zero flow exists.
    pub instance: Option<InstanceJson>,
    pub z: Vec<u64>,
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
    /// Capacity-free network the instance was built from, when capacities were removed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expanded: Option<NetworkJson>,
}

