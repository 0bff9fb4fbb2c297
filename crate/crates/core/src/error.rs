use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("surface is not connected")]
    NotConnected,
    #[error("unstabilizable surface: 2g_a + #M = {0} < 3")]
    Unstabilizable(i64),
    #[error("no weeding rule applies to component {0}")]
    NoWeedingRule(String),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("marked point index {index} out of range ({len} marked points)")]
    InvalidIndex { index: usize, len: usize },
    #[error("canonical form supports at most 8 components, got {0}")]
    TooManyComponents(usize),
    #[error("modulus {0} outside (0, 1]")]
    ModulusOutOfRange(f64),
    #[error("negative length {0}")]
    NegativeLength(f64),
    #[error("invalid gluing parameter: {0}")]
    InvalidParameter(String),
    #[error("negative quadrant coordinate at position {0}")]
    NegativeCoordinate(usize),
    #[error("invalid sc-scale: {0}")]
    InvalidScale(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("derivative order {order} not supported with {n_s} s-samples")]
    OrderTooLarge { order: usize, n_s: usize },
    #[error("point s = {0} outside the grid")]
    OutOfRange(f64),
    #[error("|a| = {0} exceeds 1/2")]
    ParameterTooLarge(f64),
    #[error("neck length {0} is shorter than the cut-off transition (R >= 2 required)")]
    NeckTooShort(f64),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("ungluing at a = 0 is only defined for w = 0")]
    DegenerateUnglue,
    #[error("asymptotic constants: {0}")]
    Asymptotics(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("transversality lost: no convergence in {0} iterations")]
    TransversalityLost(usize),
    #[error("target dimension {0} is not even")]
    OddDimension(usize),
    #[error("complex structure: {0}")]
    ComplexStructure(String),
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = core::result::Result<T, Error>;
