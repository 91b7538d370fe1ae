use crate::expr::EvalError;
use crate::scene::SceneError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("the set does not meet the query region: {0}")]
    EmptyIntersection(String),
    #[error("integrand is not finite on a set of positive measure: {0}")]
    NonFiniteIntegrand(String),
    #[error("cell budget of {budget} exhausted; partial estimate {value:e} +/- {abs_error:e}")]
    BudgetExceeded {
        budget: usize,
        value: f64,
        abs_error: f64,
    },
    #[error("point is not on the set (nearest distance {0:e})")]
    PointNotOnSet(f64),
    #[error("only {found} directions sampled, need at least {needed}")]
    InsufficientClusters { found: usize, needed: usize },
    #[error("conical shell around the direction contains no points of the set")]
    EmptyShell,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported for this scene: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
