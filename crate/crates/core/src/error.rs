use thiserror::Error;

/// Errors raised by the laboratory. Each variant names the module that
/// produced it and the offending parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("constants: invalid parameters d={d}, s={s} (need d >= 2 and 0 < s < d/2)")]
    InvalidParams { d: usize, s: f64 },

    #[error("polysphere: degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: u32, cap: u32 },

    #[error("polysphere: ambient dimension mismatch ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("quadrature: {nodes} nodes for d={d}, degree={degree} exceeds the node budget {budget}")]
    NodeBudget {
        d: usize,
        degree: u32,
        nodes: u128,
        budget: usize,
    },

    #[error("quadrature: invalid rule request d={d}, degree={degree}")]
    InvalidRule { d: usize, degree: u32 },

    #[error("quadrature: integrand is not finite ({value}) at node {index} {point:?}")]
    NonFinite {
        index: usize,
        point: Vec<f64>,
        value: f64,
    },

    #[error("conformal: point {omega_last} is within {delta} of the south pole")]
    SouthPole { omega_last: f64, delta: f64 },

    #[error("conformal: bubble center |zeta| = {norm} must be < 1")]
    ZetaOutsideBall { norm: f64 },

    #[error("conformal: invalid bubble parameters ({reason})")]
    InvalidBubble { reason: &'static str },

    #[error("functional: {op} needs an exact polynomial form")]
    NotPolynomial { op: &'static str },

    #[error("functional: input is on the manifold (dist2 = {dist2:e} <= {tol:e})")]
    OnManifold { dist2: f64, tol: f64 },

    #[error("expansion: epsilon {eps} is outside 0 < |eps| <= {max}")]
    InvalidEpsilon { eps: f64, max: f64 },

    #[error("expansion: fit needs at least {needed} successful rows spanning a decade, got {rows}")]
    Underdetermined { rows: usize, needed: usize },

    #[error("expansion: no epsilon in the grid certified a positive margin for d={d}, s={s}")]
    NoCertifiedWitness { d: usize, s: f64 },

    #[error("functional: distance solver did not converge (gradient norm {grad_norm:e})")]
    NotConverged { grad_norm: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;
