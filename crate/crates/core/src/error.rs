use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("fibre overlap: {0}")]
    FibreOverlap(String),

    #[error("fibre packing failed: placed {placed} of {requested} fibres after {attempts} attempts")]
    PackingFailure {
        placed: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("crack seam is not aligned with the mesh: {0}")]
    SeamAlignment(String),

    #[error("invalid material parameters: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("conflicting Dirichlet constraints on dof {dof}: {first} vs {second}")]
    ConflictingConstraint { dof: usize, first: f64, second: f64 },

    #[error("matrix is not positive definite (pivot {value:e} at dof {dof})")]
    NotPositiveDefinite { dof: usize, value: f64 },

    #[error("conjugate gradient breakdown at iteration {iteration}: {reason}")]
    CgBreakdown { iteration: usize, reason: String },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNoConvergence { iterations: usize, residual: f64 },

    #[error("linear solve missed its residual contract: {residual:e} > {tolerance:e}")]
    ResidualContract { residual: f64, tolerance: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (relative residual {residual:e})")]
    NewtonNoConvergence { iterations: usize, residual: f64 },

    #[error("staggered passes did not converge in {passes} passes (max damage change {change:e})")]
    StaggeredNoConvergence { passes: usize, change: f64 },

    #[error("time step failed at t = {time} s after {halvings} halvings: {source}")]
    StepFailure {
        time: f64,
        halvings: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
