use thiserror::Error;

/// Errors produced by the forward models, fitters, decoders, and I/O layers.
#[derive(Debug, Error)]
pub enum TwinError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A physical quantity left the range where its channel is monotone.
    #[error("{quantity} = {value:.4} exceeds range bound {limit:.4}")]
    RangeExceeded {
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("insufficient data for {context}: need {required}, got {actual}")]
    InsufficientData {
        context: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("fit residual {max_residual:.4} exceeds tolerance {limit:.4}")]
    FitToleranceExceeded { max_residual: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Fitted thermal gain is non-positive; the calibration cannot be inverted there.
    #[error("thermal gain {gain:.4} non-positive at {temperature_c:.2} degC")]
    DegenerateGain { gain: f64, temperature_c: f64 },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: missing columns {missing:?}")]
    SchemaMismatch { missing: Vec<String> },

    /// Wraps an error raised while processing one sample of a streamed run.
    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<TwinError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TwinError>;

impl TwinError {
    /// Wraps `self` with the index of the sample that raised it.
    pub fn at_sample(self, index: usize) -> TwinError {
        TwinError::AtSample {
            index,
            source: Box::new(self),
        }
    }
}
