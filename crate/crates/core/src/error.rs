use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("corpus must contain at least one graph")]
    EmptyCorpus,
    #[error("node id {id} out of range for {node_count} nodes")]
    NodeOutOfRange { id: usize, node_count: usize },
    #[error("value {value} at ({row}, {col}) is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} matrix is not symmetric")]
    Asymmetric(&'static str),
    #[error("graph has no label")]
    Unlabeled,
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: i64, classes: usize },
    #[error("transport plan violates marginals by {error:e}")]
    Infeasible { error: f64 },
    #[error("zero block mass at index {0}; barycenter update undefined")]
    ZeroMass(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("enumeration of {count} assignments exceeds the exact-mode limit; use a sampling estimator")]
    TooLarge { count: u128 },
    #[error("motif invalid: {0}")]
    Motif(String),
}
