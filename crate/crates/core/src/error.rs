use thiserror::Error;

use crate::spaces::SpaceKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh touches or crosses the symmetry axis (r = {r})")]
    AxisTouched { r: f64 },
    #[error("degenerate mesh extents: {0}")]
    DegenerateExtent(String),
    #[error("cell {cell} has non-positive signed area {area:e}")]
    NonPositiveArea { cell: usize, area: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported element type {0}")]
    UnsupportedElement(u32),
    #[error("mesh is not two-dimensional: {0}")]
    NotPlanar(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected a field in {expected:?}, found {found:?}")]
    KindMismatch { expected: Vec<SpaceKind>, found: SpaceKind },
    #[error("{0} is not defined for this space kind")]
    UndefinedDerivative(&'static str),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("non-finite integrand value in cell {cell}")]
    NonFinite { cell: usize },
    #[error("negative radicand f0^2 + 2 c psi = {value:e} at node {node}")]
    NegativeRadicand { node: usize, value: f64 },
    #[error("{fraction:.1}% of cross-mesh evaluation points fall outside the source mesh")]
    OutsideHull { fraction: f64 },
    #[error("region mask selects no cells")]
    EmptyMask,
    #[error("missing input: {0}")]
    MissingInput(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverDiverged { .. }
                | Error::NonFinite { .. }
                | Error::NegativeRadicand { .. }
                | Error::OutsideHull { .. }
        )
    }
}
