use thiserror::Error;

pub type Result<T> = std::result::Result<T, CarpetError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CarpetError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid carpet parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("curvature condition violated: B = {b} but B > 2 is required")]
    CurvatureConditionViolated { b: f64 },

    #[error("degenerate denominator: 4A - B = {0:e}")]
    DegenerateDenominator(f64),

    #[error("alphabet inequality violated: log({ell_a}/{ell_b}) = {attained} does not exceed (1+V)B/V = {bound}")]
    AlphabetInequality {
        ell_a: u64,
        ell_b: u64,
        attained: f64,
        bound: f64,
    },

    #[error("construction failure: {0}")]
    Construction(String),

    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("resource limit: {needed} rectangles requested, cap is {cap}")]
    ResourceLimit { needed: u128, cap: u64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}
