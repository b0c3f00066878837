//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by tensor kernels, file I/O, mergers, and the lab.
#[derive(Debug, Error)]
pub enum Error {
    /// Two tensor collections do not share the same key set.
    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    /// Two tensors that must agree in shape do not.
    #[error("shape mismatch for `{name}`: {left:?} vs {right:?}")]
    ShapeMismatch {
        name: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// An operation received an empty input it cannot handle.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A keep/trim ratio fell outside (0, 1].
    #[error("ratio out of range: {0} (must be in (0, 1])")]
    RatioOutOfRange(f64),

    /// A matrix operation was handed a tensor that is not 2-D.
    #[error("not a matrix: tensor has shape {0:?}")]
    NotAMatrix(Vec<usize>),

    /// The iterative SVD kernel exceeded its sweep cap.
    #[error("SVD failed to converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    /// Factor matrices disagree on the inner dimension.
    #[error("inner dimension mismatch: {left} vs {right}")]
    InnerDimMismatch { left: usize, right: usize },

    /// A truncation rank is outside the representable range.
    #[error("rank out of range: {rank} (valid: 1..={max})")]
    RankOutOfRange { rank: usize, max: usize },

    /// Tensor data contains NaN or infinite values.
    #[error("non-finite value in `{0}`")]
    NonFinite(String),

    /// A tensor was constructed with inconsistent shape/data.
    #[error("invalid tensor `{name}`: {reason}")]
    InvalidTensor { name: String, reason: String },

    /// Underlying file I/O failed.
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The container header is missing, unparseable, or inconsistent.
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// Two tensor payload ranges overlap.
    #[error("overlapping data offsets for `{name}`")]
    OffsetOverlap { name: String },

    /// A payload range extends past the end of the file.
    #[error("truncated payload: `{name}` needs bytes up to {end}, payload has {payload_len}")]
    TruncatedPayload {
        name: String,
        end: usize,
        payload_len: usize,
    },

    /// The header declares a dtype this crate does not handle.
    #[error("unsupported dtype `{dtype}` for `{name}`")]
    UnsupportedDtype { name: String, dtype: String },

    /// A low-rank adapter file mixes factor and truncated entries.
    #[error("variant mixing in adapter file: {0}")]
    VariantMixing(String),

    /// A sparse index does not fit its source tensor.
    #[error("index out of range for `{name}`: {index} >= {size}")]
    IndexOutOfRange {
        name: String,
        index: u64,
        size: usize,
    },

    /// A merge was requested over zero task checkpoints.
    #[error("empty task set")]
    EmptyTaskSet,

    /// Per-task weights do not line up with the task list.
    #[error("weight mismatch: {weights} weights for {tasks} tasks")]
    WeightMismatch { weights: usize, tasks: usize },

    /// Averaging weights are not a convex combination.
    #[error("non-convex weights: {0}")]
    NonConvexWeights(String),

    /// A per-parameter weight map contains a negative entry.
    #[error("negative weight in `{name}` at flat index {index}")]
    NegativeWeight { name: String, index: usize },

    /// A delta or adapter was applied to a base it was not built from.
    #[error("fingerprint mismatch: artifact was built against {expected}, got base {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    /// An adapter targets a tensor the base checkpoint does not have.
    #[error("target tensor `{0}` missing from base checkpoint")]
    TargetMissing(String),

    /// A synthetic-task specification is unusable.
    #[error("bad task spec: {0}")]
    BadSpec(String),

    /// Training produced a non-finite loss.
    #[error("divergence detected at step {step}: loss is not finite")]
    DivergenceDetected { step: usize },

    /// A lab config file could not be parsed.
    #[error("bad config: {0}")]
    BadConfig(String),
}

impl Error {
    /// True for errors caused by the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::IoFailure { .. })
    }
}
