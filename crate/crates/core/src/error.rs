use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("interior required: node {node:?} lies on the boundary")]
    InteriorRequired { node: [usize; 2] },
    #[error("insufficient stencil at node {node:?}")]
    InsufficientStencil { node: [usize; 2] },
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("exponent must satisfy p⁻ > 1 (got p⁻ = {p_minus})")]
    ExponentTooSmall { p_minus: f64 },
    #[error("gradient vanishes; F undefined")]
    GradientVanishes,
    #[error("regularized operator undefined: delta = 0 and gradient vanishes")]
    DegenerateRegularization,
    #[error("test function must vanish on boundary nodes (node {node:?} = {value})")]
    BoundaryTestFunction { node: [usize; 2], value: f64 },
    #[error("no admissible probe points")]
    NoProbePoints,
    #[error("Picard iteration did not converge within {iterations} iterations at delta = {delta:e} (last sup-change {change:e}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        delta: f64,
        change: f64,
        residual: f64,
    },
    #[error("linear solve breakdown: {0}")]
    LinearSolve(String),
    #[error("relaxation diverged at step {step} (sup|u| = {sup})")]
    Divergence { step: usize, sup: f64 },
    #[error("relaxation reached {steps} steps without meeting tolerance (last residual {residual:e})")]
    MaxSteps { steps: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed grid dump: {0}")]
    Format(String),
    #[error("{label}, grid n = {n}: {source}")]
    AtGrid { label: String, n: usize, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's configuration rather than by a solver.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidDomain(_)
            | Error::ExponentTooSmall { .. }
            | Error::ShapeMismatch { .. } => true,
            Error::AtGrid { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub fn at_grid(self, label: &str, n: usize) -> Self {
        Error::AtGrid {
            label: label.to_string(),
            n,
            source: Box::new(self),
        }
    }
}
