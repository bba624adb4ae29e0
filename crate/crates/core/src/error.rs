use thiserror::Error;

pub type Result<T> = std::result::Result<T, HseomError>;

#[derive(Debug, Error)]
pub enum HseomError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimated error {error_estimate:e})")]
    Quadrature { subdivisions: usize, error_estimate: f64 },

    #[error("resource refusal: {what} requires {required} but the budget is {budget}")]
    ResourceRefusal { what: &'static str, required: u128, budget: u128 },

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("contour position s = {s} is not on the step grid (dt = {dt})")]
    OffGrid { s: f64, dt: f64 },

    #[error("non-finite state at s = {s} (max |entry| = {max_abs:e})")]
    NonFinite { s: f64, max_abs: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("malformed expansion table at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl HseomError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter { name, reason: reason.into() }
    }
}
