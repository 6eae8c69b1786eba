use thiserror::Error;

/// Failures of the spectral kernels and norm evaluations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid points per side must be even and at least 4, got {0}")]
    BadResolution(usize),
    #[error("box length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("grid dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("axis {axis} is invalid on a {dim}-dimensional grid")]
    BadAxis { axis: usize, dim: usize },
    #[error("derivative order {0} is not supported (use 1 or 2)")]
    BadOrder(u32),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected {expected} components, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("array length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("Lebesgue exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),
    #[error("Sobolev order {0} is not supported (use 0, 1 or 2)")]
    BadSobolevOrder(u32),
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has nonzero mean (|mean| = {0:e})")]
    NotMeanFree(f64),
    #[error("field is not divergence free (relative divergence {0:e})")]
    NotDivergenceFree(f64),
    #[error("operation requires a two-dimensional field")]
    NotTwoDimensional,
    #[error("spectrum decay exponent must be positive, got {0}")]
    BadDecay(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Failures of the snapshot reader and writer.
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a field snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("corrupt snapshot header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}
