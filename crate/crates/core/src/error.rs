use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("grid does not cover the extremum (argmax/argmin on the boundary at {node:?}); enlarge the grid")]
    Coverage { node: Vec<f64> },

    #[error("objective is +inf at every grid node")]
    InfeasibleGrid,

    #[error("grid has {nodes} nodes, over the budget of {budget}")]
    Budget { nodes: u128, budget: u128 },

    #[error("solver failed to certify optimality: gap {gap:e} after {iterations} iterations")]
    SolverFailure {
        best: Vec<f64>,
        gap: f64,
        iterations: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }
}
