use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not a unital *-homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("trace not preserved: residual {residual:.3e}")]
    NotTracePreserving { residual: f64 },
    #[error("not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },
    #[error("invalid algebra shape: {0}")]
    InvalidShape(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
    #[error("map does not descend to the quotient: residual {residual:.3e}")]
    NotDescending { residual: f64 },
    #[error("element is not in the image: residual {residual:.3e}")]
    NotInImage { residual: f64 },
    #[error("region error: {0}")]
    Region(String),
    #[error("not composable: {0}")]
    NotComposable(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
