use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file header or corrupted payload (PGM/PFM/checkpoint).
    #[error("format: {0}")]
    Format(String),

    /// A mask file contains intensities other than 0 and 255.
    #[error("mask domain: {0}")]
    MaskDomain(String),

    /// A value is outside its required domain (e.g. non-finite float in a PFM).
    #[error("domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("fusion: {0}")]
    Fusion(String),

    #[error("generation failed for sample {id}: {reason}")]
    Generation { id: String, reason: String },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },

    /// Weighted mean is undefined because the weight map is zero everywhere.
    #[error("undefined weight: expert disagreement entropy is zero everywhere")]
    UndefinedWeight,

    #[error("config: {0}")]
    Config(String),

    /// Wraps a failure with the pipeline stage it occurred in.
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
