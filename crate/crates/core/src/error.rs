use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("half-space normals do not positively span R^{dim}; the domain is unbounded")]
    UnboundedDomain { dim: usize },
    #[error("half-space intersection has empty interior")]
    EmptyDomain,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("point lies outside the domain (excess {excess:e})")]
    PointOutsideDomain { excess: f64 },
    #[error("dimension {dim} is not supported by this operation")]
    DimensionUnsupported { dim: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    // discretisation and linear algebra
    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("matrix is not positive definite (pivot {pivot}: {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigensolverNoConvergence { iterations: usize, residual: f64 },
    #[error("ground state changes sign (min nodal value {min:e})")]
    NonpositiveEigenvector { min: f64 },

    // corner analysis
    #[error("invalid sector opening angle {0}")]
    InvalidAngle(f64),
    #[error("sector is degenerate")]
    DegenerateSector,
    #[error("point lies outside the sector")]
    PointOutsideSector,
    #[error("sampling radius {radius} exceeds the cone radius {cone_radius}")]
    RadiusTooLarge { radius: f64, cone_radius: f64 },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    // ODE shooting
    #[error("theta = {0} outside (-pi/2, pi/2)")]
    ThetaOutOfRange(f64),
    #[error("integration produced a non-finite value at s = {0}")]
    IntegrationBlowup(f64),
    #[error("truncation too small: gap moved by {change:e} rad when S was enlarged")]
    TruncationTooSmall { change: f64 },
    #[error("no sign change found for the eigenvalue condition below {limit}")]
    RootNotBracketed { limit: f64 },
    #[error("radial solution is not positive (min {min:e})")]
    NonpositiveSolution { min: f64 },

    // certification
    #[error("field must be strictly positive for a log-concavity test (min {min:e})")]
    NonpositiveField { min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
