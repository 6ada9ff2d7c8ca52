use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("unsupported polynomial degree {0} (expected 1 or 2)")]
    UnsupportedDegree(usize),
    #[error("quadrature produced a non-positive weight {weight} in cell {cell}")]
    NegativeWeight { cell: usize, weight: f64 },
    #[error("cut cell {0} has no interface quadrature")]
    MissingInterfaceRule(usize),
    #[error("quadrature was built for {expected} cells, mesh has {found}")]
    QuadratureMismatch { expected: usize, found: usize },
    #[error("no exact solution attached to the problem")]
    MissingExactSolution,
}
