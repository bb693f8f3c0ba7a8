use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A raster with zero width or height.
    EmptyRaster,
    /// Two inputs that must share a shape do not.
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    /// Resampling or patching factor is not an integer.
    NonIntegerScale { from: f64, to: f64 },
    /// Raster too small for the requested operation.
    RasterTooSmall { what: &'static str },
    InvalidParameter(String),
    MissingBandRole(String),
    /// A labelled input was required.
    Unlabeled,
    EmptyTable,
    FeatureMismatch { expected: usize, found: usize },
    /// Nothing to train a matrix from.
    NoTrainingData(&'static str),
    /// Evaluation found no pixel defined in both maps.
    NoOverlap,
    /// Numerical breakdown (non-finite values where finite ones are required).
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyRaster => write!(f, "empty raster"),
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::NonIntegerScale { from, to } => {
                write!(f, "non-integer scale factor between {from} m and {to} m")
            }
            Error::RasterTooSmall { what } => write!(f, "raster too small for {what}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::MissingBandRole(role) => write!(f, "missing band role '{role}'"),
            Error::Unlabeled => write!(f, "labels required"),
            Error::EmptyTable => write!(f, "empty feature table"),
            Error::FeatureMismatch { expected, found } => {
                write!(f, "feature mismatch: expected {expected} features, found {found}")
            }
            Error::NoTrainingData(what) => write!(f, "no training data for {what}"),
            Error::NoOverlap => write!(f, "no overlapping labeled pixels"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
