use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("vertex label {label} outside 1..={n}")]
    Index { label: usize, n: usize },

    #[error("graph has no edges")]
    NoEdge,

    #[error("total event rate is zero; no further event can occur")]
    Absorbing,

    #[error("update rate is zero; the graph never refreshes")]
    NeverRefreshes,

    #[error("rate audit failed: maintained {maintained}, recomputed {recomputed}")]
    RateAudit { maintained: f64, recomputed: f64 },

    #[error("critical line beta + 2 gamma = 1 is not covered")]
    Critical,

    #[error("supercritical boundary alpha = 1: order not resolved")]
    Unresolved,

    #[error("mean offspring of the size-biased weight is {0} >= 1; tree size diverges")]
    Divergent(f64),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
