use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("out of range: {0}")]
    Range(String),

    /// Standard-domain Sinkhorn hit a zero or non-finite scaling.
    #[error("sinkhorn underflow at iteration {iteration}: {detail}; rerun with log-domain iterations")]
    Underflow { iteration: usize, detail: String },

    #[error("sinkhorn degenerated after {iterations} iterations (marginal error {marginal_err:e}): {detail}")]
    Convergence {
        iterations: usize,
        marginal_err: f64,
        detail: String,
    },

    #[error("problem size n = {n} exceeds the exact-solver limit of {max}")]
    Scale { n: usize, max: usize },

    #[error("training diverged at step {step} (last finite step: {last_finite:?}): {detail}")]
    Divergence {
        step: usize,
        last_finite: Option<usize>,
        detail: String,
    },

    #[error("config error at `{path}`: {detail}")]
    Config { path: String, detail: String },

    #[error("{file}:{line}: {detail}")]
    Parse {
        file: PathBuf,
        line: u64,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
