use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column '{0}'")]
    MissingColumn(String),

    #[error("log has fewer than {required} frames")]
    NotEnoughFrames { required: usize },

    #[error("no usable data: {0}")]
    NoData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("significance level must be in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("empty message batch")]
    EmptyBatch,

    #[error("message decode failed: {0}")]
    Decode(String),

    #[error("interval grids differ across indicators")]
    MismatchedGrids,
}
