use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hurwitz (max real eigenvalue part {max_real:.3e})")]
    NotHurwitz { max_real: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("non-minimal realization: {0}")]
    NonMinimal(String),
    #[error("transfer function is improper: {0}")]
    Improper(String),
    #[error("plant is not minimum phase: {0}")]
    NonMinimumPhase(String),
    #[error("degenerate adaptation gain: smallest eigenvalue {0:.3e}")]
    DegenerateGain(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("divergence guard tripped at t = {time}: |{channel}| = {magnitude:.3e}")]
    Diverged {
        time: f64,
        channel: String,
        magnitude: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing channel: {0}")]
    MissingChannel(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
