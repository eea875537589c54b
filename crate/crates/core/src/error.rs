use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular metric: operator set is not a basis (condition number {0:.3e})")]
    SingularMetric(f64),

    #[error("input set does not span the operator space (condition number {0:.3e})")]
    SingularInputSet(f64),

    #[error("operator basis `{0}` is not orthonormal")]
    NotOrthonormal(String),

    #[error("basis mismatch: `{0}` vs `{1}`")]
    BasisMismatch(String, String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing analysis setting `{setting}` for input `{input}`")]
    MissingSetting { input: String, setting: String },

    #[error("no surviving events (zero trace)")]
    ZeroTrace,

    #[error("efficiency must be positive, got {0}")]
    ZeroEfficiency(f64),

    #[error("singular denominator in effective cooperativity")]
    SingularDenominator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cavity parameters are under-determined: {0}")]
    UnderDetermined(String),

    #[error("cavity parameters are over-determined: {0}")]
    OverDetermined(String),

    #[error("inconsistent parameters: {0}")]
    Inconsistent(String),

    #[error("optimizer did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("wrong analysis settings: {0}")]
    WrongSettings(String),

    #[error("no counts recorded")]
    EmptyCounts,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SingularMetric(_) => "singular_metric",
            Error::SingularInputSet(_) => "singular_input_set",
            Error::NotOrthonormal(_) => "not_orthonormal",
            Error::BasisMismatch(..) => "basis_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MissingSetting { .. } => "missing_setting",
            Error::ZeroTrace => "zero_trace",
            Error::ZeroEfficiency(_) => "zero_efficiency",
            Error::SingularDenominator => "singular_denominator",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::UnderDetermined(_) => "under_determined",
            Error::OverDetermined(_) => "over_determined",
            Error::Inconsistent(_) => "inconsistent",
            Error::NonConvergence(_) => "non_convergence",
            Error::DegenerateData(_) => "degenerate_data",
            Error::WrongSettings(_) => "wrong_settings",
            Error::EmptyCounts => "empty_counts",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of the numerics (singular systems, non-convergence)
    /// as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMetric(_)
                | Error::SingularInputSet(_)
                | Error::ZeroTrace
                | Error::SingularDenominator
                | Error::NonConvergence(_)
                | Error::DegenerateData(_)
        )
    }
}
