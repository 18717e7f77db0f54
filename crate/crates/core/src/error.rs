use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rank_deficient: column {column} has residual norm {norm:e}")]
    RankDeficient { column: usize, norm: f64 },
    #[error("power iteration did not converge in {iters} iterations (last estimate {last})")]
    NonConvergence { iters: usize, last: f64 },
    #[error("nonfinite_objective at t = {t}")]
    NonfiniteObjective { t: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("singular_gram")]
    SingularGram,
    #[error("nondifferentiable_loss")]
    NondifferentiableLoss,
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("M_violated: measured weight norm {measured} exceeds M = {bound}")]
    MViolated { measured: f64, bound: f64 },
    #[error("sparse projector is only approximately orthonormal (max error {ortho_error:e}); pass an explicit override")]
    SparseRefused { ortho_error: f64 },
    #[error("empty codebook")]
    EmptyCodebook,
    #[error("missing constant: {0}")]
    MissingConstant(&'static str),
    #[error("critic objective became non-finite at epoch {epoch}")]
    CriticDiverged { epoch: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: expected {expected}, got {got}")))
    }
}
