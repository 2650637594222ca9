use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Harness-level failures: anything the solver core reports, plus problem
/// construction and config/artifact handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] esam_core::Error),

    /// A constraint's index map reaches outside `1..=n`, so not even one
    /// constraint can be built at this dimension.
    #[error("{problem}: constraint i={i} references x_{j} outside 1..={n}")]
    IndexMapOutOfBounds {
        problem: &'static str,
        i: usize,
        j: usize,
        n: usize,
    },

    #[error("unknown classical problem name {0:?}")]
    UnknownProblemName(String),

    #[error("plan asks for {strings} strings but the problem has only {constraints} constraints")]
    TooManyStrings { strings: usize, constraints: usize },

    #[error("tomography view {view} retained no rays; widen the geometry")]
    EmptyView { view: usize },

    #[error(
        "default-geometry projector retained {rows} rows, outside the expected band [{lo}, {hi}]"
    )]
    RowCountOutOfBand { rows: usize, lo: usize, hi: usize },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid config value: {0}")]
    ConfigValue(String),

    #[error("batch: config {path} has no partner differing only in mode")]
    UnpairedConfig { path: PathBuf },

    #[error("batch: directory {0} contains no .toml configs")]
    EmptyBatch(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
