use thiserror::Error;

/// Errors produced anywhere in the localization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate material pair: solid and water sound speeds are both {0} m/s")]
    DegenerateMaterial(f64),

    #[error("degenerate spectrum at angle {angle_deg:.3} deg (index {index}): zero norm")]
    DegenerateSpectrum { index: usize, angle_deg: f64 },

    #[error("invalid chirp spec: {0}")]
    InvalidSpec(String),

    #[error("corrupt frame: parity check failed for bits {bits:08b}")]
    CorruptFrame { bits: u8 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("configuration error: cutoff {f_cut:.1} Hz must be below k*t_min = {limit:.1} Hz")]
    CutoffTooHigh { f_cut: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible measurement: range {range:.4} m is shorter than depth offset {depth_offset:.4} m")]
    InfeasibleMeasurement { range: f64, depth_offset: f64 },

    #[error("solver failure: {reason} (residual norm {residual_norm:.3e}, {iterations} iterations)")]
    SolverFailure {
        reason: String,
        residual_norm: f64,
        iterations: usize,
    },

    #[error("ranging unavailable: {0}")]
    RangingUnavailable(String),

    #[error("capacity exceeded: {count} anchors requested, at most {max} supported")]
    Capacity { count: usize, max: usize },

    #[error("timestamps not monotone at index {index} ({prev} -> {next})")]
    NonMonotoneTime { index: usize, prev: f64, next: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
