use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("row total {rows} differs from column total {cols}")]
    MismatchedTotals { rows: u64, cols: u64 },
    #[error("margin entries must be positive integers")]
    NonPositiveMargin,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight at ({row}, {col}) is negative")]
    NegativeWeight { row: usize, col: usize },
    #[error("inputs must be strictly positive: {0}")]
    NonPositiveInput(String),
    #[error("invalid margins: {0}")]
    InvalidMargins(String),
    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),
    #[error("memo table exceeded the budget of {budget} states")]
    ResourceLimit { budget: usize },
    #[error("instance exceeds the oracle limit ({0})")]
    OracleLimitExceeded(String),
    #[error("matrix order {order} exceeds the permanent cap {cap}")]
    SizeCapExceeded { order: usize, cap: usize },
    #[error("scaling did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("invalid convex combination: {0}")]
    InvalidConvexCombination(String),
    #[error("kappa diagnostic undefined when min(m, n) = 1")]
    KappaUndefined,
    #[error("vectors have different sums ({0} vs {1})")]
    UnequalSums(u64, u64),
    #[error("margin pairs are not comparable in dominance order")]
    NotComparable,
    #[error("graph contains a directed cycle")]
    CyclicGraph,
    #[error("excesses sum to {0}, expected 0")]
    NonZeroSum(i64),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MismatchedTotals { .. } => "MismatchedTotals",
            Error::NonPositiveMargin => "NonPositiveMargin",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::NonPositiveInput(_) => "NonPositiveInput",
            Error::InvalidMargins(_) => "InvalidMargins",
            Error::InvalidRational(_) => "InvalidRational",
            Error::ResourceLimit { .. } => "ResourceLimit",
            Error::OracleLimitExceeded(_) => "OracleLimitExceeded",
            Error::SizeCapExceeded { .. } => "SizeCapExceeded",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::InvalidConvexCombination(_) => "InvalidConvexCombination",
            Error::KappaUndefined => "KappaUndefined",
            Error::UnequalSums(..) => "UnequalSums",
            Error::NotComparable => "NotComparable",
            Error::CyclicGraph => "CyclicGraph",
            Error::NonZeroSum(_) => "NonZeroSum",
            Error::InvalidNetwork(_) => "InvalidNetwork",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }

    /// True for errors caused by a configured budget or cap rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::ResourceLimit { .. }
                | Error::OracleLimitExceeded(_)
                | Error::SizeCapExceeded { .. }
                | Error::ConvergenceFailure { .. }
        )
    }
}
