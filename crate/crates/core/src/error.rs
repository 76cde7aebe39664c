use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported derivative order ({0}, {1}); total degree must be at most 2")]
    UnsupportedOrder(usize, usize),

    #[error("field is not mean-zero: mean = {mean:e} exceeds tolerance {tol:e}")]
    MeanViolation { mean: f64, tol: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("grid mismatch: {0}")]
    Shape(String),

    #[error("Monge-Ampere iteration left the contractive regime at iterate {iteration}: eps*|D2 psi|_inf = {value}")]
    Divergence { iteration: usize, value: f64 },

    #[error("Monge-Ampere iteration did not converge after {iterations} iterations (last update {update:e})")]
    NonConvergence { iterations: usize, update: f64 },

    #[error("step size {dt} violates the CFL limit {limit}")]
    StepSize { dt: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("velocity provider covers [{start}, {end}] but time {t} was requested")]
    Coverage { t: f64, start: f64, end: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("Sinkhorn did not converge: marginal error {marginal_error:e} after {iterations} iterations")]
    Convergence {
        iterations: usize,
        marginal_error: f64,
    },

    #[error("sample grids are not aligned: {0}")]
    Alignment(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient samples: {0}")]
    Sampling(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid config at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("malformed dump: {0}")]
    Format(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
