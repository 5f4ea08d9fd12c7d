use std::path::PathBuf;

/// Errors raised by the library.
///
/// The variants follow the failure classes of the operations: bad arguments,
/// values outside a mathematical domain, resource and capability limits of the
/// exact algorithms, and I/O when emitting reports.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: n = {n} needs {bytes} bytes of weights, cap is {cap} bytes")]
    Resource { n: usize, bytes: u128, cap: u128 },

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("infeasible size: {0}")]
    InfeasibleSize(String),

    #[error("moment generating function diverges: n·t = {nt} is not below the smallest rate {rate}")]
    Divergence { nt: f64, rate: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a bad configuration rather than by a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Domain(_)
                | Error::Precondition(_)
                | Error::Construction(_)
                | Error::InfeasibleSize(_)
                | Error::Resource { .. }
                | Error::Capability(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
