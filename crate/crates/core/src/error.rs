use thiserror::Error;

/// Errors raised by model construction, the solvers, and the analyses.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidSpec(String),
    #[error("transition probabilities of hyperarc {hyperarc} sum to {sum}, not 1")]
    KernelNotStochastic { hyperarc: usize, sum: f64 },
    #[error("negative mass {value} on hyperarc index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("incidence matrix has numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("interior KKT solution leaves hyperarc index {index} with mass {value}; use the Frank-Wolfe path")]
    NotInterior { index: usize, value: f64 },
    #[error("KKT system is numerically singular")]
    SingularSystem,
    #[error("operation requires affine costs")]
    RequiresAffineCosts,
    #[error("Frank-Wolfe stopped after {iterations} iterations with gap {gap}")]
    MaxIterations { iterations: usize, gap: f64 },
    #[error("linear oracle returned an infeasible vertex (violation {violation})")]
    DegenerateOracle { violation: f64 },
    #[error("relative value iteration did not converge after {sweeps} sweeps (span {span})")]
    OracleNoConverge { sweeps: usize, span: f64 },
    #[error("multiplier on hyperarc index {index} is {value}; point is not an equilibrium")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("equilibrium mass {value} on hyperarc index {index} is not strictly positive")]
    NotStrictlyPositive { index: usize, value: f64 },
    #[error("cost Jacobian is not positive definite (min eigenvalue of symmetric part {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("reduced KKT Schur complement is ill-conditioned (condition number {condition})")]
    IllConditioned { condition: f64 },
    #[error("hyperarc {hyperarc} at state {state} has a self-loop; the signed primal incidence cannot encode it")]
    SelfLoopUnsupported { state: usize, hyperarc: usize },
    #[error("transformation is not invertible ({edges} primal edges, {hyperarcs} hyperarcs)")]
    NotInvertible { edges: usize, hyperarcs: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Variant name, for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::KernelNotStochastic { .. } => "KernelNotStochastic",
            Error::NegativeMass { .. } => "NegativeMass",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotInterior { .. } => "NotInterior",
            Error::SingularSystem => "SingularSystem",
            Error::RequiresAffineCosts => "RequiresAffineCosts",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::DegenerateOracle { .. } => "DegenerateOracle",
            Error::OracleNoConverge { .. } => "OracleNoConverge",
            Error::NegativeMultiplier { .. } => "NegativeMultiplier",
            Error::NotStrictlyPositive { .. } => "NotStrictlyPositive",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::SelfLoopUnsupported { .. } => "SelfLoopUnsupported",
            Error::NotInvertible { .. } => "NotInvertible",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
