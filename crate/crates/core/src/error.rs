use thiserror::Error;

#[derive(Debug, Error)]
pub enum PicError {
    #[error("invalid discretization: {0}")]
    InvalidSpace(String),
    #[error("singular circulant operator: {0}")]
    SingularOperator(String),
    #[error("charge density is not neutral (mean {mean:e}, tolerance {tolerance:e})")]
    NetCharge { mean: f64, tolerance: f64 },
    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("{stage} iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("run diverged at step {step}: total energy {energy:e} (initial {initial:e})")]
    Diverged { step: usize, energy: f64, initial: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PicError> = std::result::Result<T, E>;
