use thiserror::Error;

/// Errors raised by grid construction, the solvers and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("field layout mismatch: {0}")]
    Layout(String),

    #[error("{solver} solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverDiverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("level set unstable: phi range [{min:.4}, {max:.4}] left [-0.1, 1.1]")]
    LevelSetUnstable { min: f64, max: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 configuration, 3 solver divergence, 4 level-set
    /// instability, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGrid(_) | Error::Layout(_) => 2,
            Error::SolverDiverged { .. } => 3,
            Error::NonFinite(what) if *what == "phi" => 4,
            Error::NonFinite(_) => 3,
            Error::LevelSetUnstable { .. } => 4,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_failure_class() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        let diverged = Error::SolverDiverged {
            solver: "pressure",
            iterations: 3,
            residual: 1.0,
            history: vec![],
        };
        assert_eq!(diverged.exit_code(), 3);
        assert_eq!(Error::LevelSetUnstable { min: -1.0, max: 2.0 }.exit_code(), 4);
        assert_eq!(Error::Io(std::io::Error::other("disk")).exit_code(), 1);
    }
}
