use thiserror::Error;

use crate::oclust::IterationRecord;

pub type Result<T> = std::result::Result<T, OclustError>;

#[derive(Debug, Error)]
pub enum OclustError {
    #[error("empty data: at least one observation is required")]
    EmptyData,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance matrix is not positive definite")]
    SingularCovariance,

    #[error("label {label} out of range for {clusters} clusters")]
    LabelOutOfRange { label: usize, clusters: usize },

    #[error("cluster {cluster} has {count} points, need at least {required}")]
    InsufficientPoints { cluster: usize, count: usize, required: usize },

    #[error("degenerate fit in run {run}: {reason}")]
    DegenerateFit { run: usize, reason: String },

    #[error("subset refit without row {index} failed: {source}")]
    SubsetRefit {
        index: usize,
        #[source]
        source: Box<OclustError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trimming aborted at iteration {iteration}: {source}")]
    Aborted {
        iteration: usize,
        #[source]
        source: Box<OclustError>,
        partial_trace: Vec<IterationRecord>,
    },

    #[error("outlier generation stalled: {accepted} accepted out of {drawn} candidates")]
    GenerationStall { drawn: u64, accepted: u64 },

    #[error("could not calibrate separation index to {target}: {reason}")]
    Calibration { target: f64, reason: String },

    #[error("quantile inversion failed at probability {0}")]
    Inversion(f64),

    #[error("reference bin {bin} has zero mass but holds samples")]
    EmptyReferenceBin { bin: usize },
}

impl OclustError {
    /// True for failures caused by numerically degenerate fits rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        match self {
            OclustError::SingularCovariance
            | OclustError::InsufficientPoints { .. }
            | OclustError::DegenerateFit { .. } => true,
            OclustError::SubsetRefit { source, .. } | OclustError::Aborted { source, .. } => {
                source.is_degenerate()
            }
            _ => false,
        }
    }
}
