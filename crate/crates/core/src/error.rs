use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },

    #[error("line {line}: calendar gap, expected {expected_year}-{expected_month:02} but found {found_year}-{found_month:02}")]
    CalendarGap {
        line: u64,
        expected_year: i32,
        expected_month: u32,
        found_year: i32,
        found_month: u32,
    },

    #[error("line {line}: duplicate or out-of-order month {year}-{month:02}")]
    DuplicateMonth { line: u64, year: i32, month: u32 },

    #[error("line {line}: negative rainfall {value} for {year}-{month:02}")]
    NegativeRainfall {
        line: u64,
        year: i32,
        month: u32,
        value: f64,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("series is constant (min = max = {0}); normalization undefined")]
    ConstantSeries(f64),

    #[error("series has {len} months but at least {needed} are required")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid topology {0:?}: need at least two positive layer sizes")]
    InvalidTopology(Vec<usize>),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectra are on different frequency grids (n = {left} vs {right})")]
    GridMismatch { left: usize, right: usize },

    #[error("series are not aligned: {0}")]
    Misaligned(String),

    #[error("spectral analysis needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
