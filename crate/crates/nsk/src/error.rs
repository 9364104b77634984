use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NskError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("admissibility condition violated: {0}")]
    Admissibility(String),
    #[error("root {root} has nonpositive real part {re:e} at xi' = {xi:?}, lambda = {lambda}")]
    RootBranch {
        root: &'static str,
        re: f64,
        xi: Vec<f64>,
        lambda: String,
    },
    #[error("singular Lopatinskii determinant at |xi'| = {xi_abs}, lambda = {lambda}")]
    SingularDeterminant { xi_abs: f64, lambda: String },
    #[error("point outside sector: {0}")]
    Sector(String),
    #[error("sampling: {0}")]
    Sampling(String),
    #[error("quadrature did not converge (estimated error {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("collocation system ill-conditioned (condition estimate {cond:e} > {limit:e})")]
    IllConditioned { cond: f64, limit: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("evolution: {0}")]
    Evolution(String),
    #[error("undefined ratio: {0}")]
    Undefined(String),
    #[error("schema: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, NskError>;
