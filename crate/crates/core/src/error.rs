use thiserror::Error;

/// Failures raised anywhere in the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coupling symbol could not be evaluated at p = ({px}, {py}): {reason}")]
    Evaluation { px: f64, py: f64, reason: String },

    #[error("gap |A(p)| = {gap:e} is below eps_gap = {eps:e}; no strict diagonalizer exists")]
    DegenerateGap { gap: f64, eps: f64 },

    #[error("growth condition fails: sup |A(p)|/p^2 = {ratio} on radius {radius} exceeds 1 - delta = {limit}")]
    GrowthViolation { ratio: f64, radius: f64, limit: f64 },

    #[error("|A| is not C^2 near the extremum set: second differences drift by factor {drift} under refinement")]
    C2Violation { drift: f64 },

    #[error("position ({x}, {y}) lies outside the tabulated extent")]
    OutOfExtent { x: f64, y: f64 },

    #[error("radial transform failed its self-consistency check (a = {a}, q = {q}, estimated error {err:e})")]
    QuadratureFailure { a: f64, q: f64, err: f64 },

    #[error("Gram matrix is ill-conditioned (cond = {cond:e} > {limit:e})")]
    IllConditionedGram { cond: f64, limit: f64 },

    #[error("every exponent in the sweep produced an ill-conditioned Gram matrix")]
    AllGramsIllConditioned,

    #[error("anchors {i} and {j} coincide")]
    DuplicateAnchors { i: usize, j: usize },

    #[error("coupling {0} is not polynomial of degree <= 2 and cannot be discretized")]
    UnsupportedCoupling(String),

    #[error("eigensolver stalled after {iterations} iterations ({converged} of {wanted} pairs converged)")]
    EigensolverStall {
        iterations: usize,
        converged: usize,
        wanted: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
