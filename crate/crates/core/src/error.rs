use alloc::string::String;
use core::fmt;

/// Errors shared across the pipeline stages.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A frame or buffer did not have the shape an operation requires.
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },
    /// An operation was applied to a frame in the wrong colorspace.
    ColorSpace {
        what: &'static str,
        expected: &'static str,
        got: &'static str,
    },
    /// Invalid parameter value (zero sizes, bad probabilities, ...).
    InvalidParameter { what: &'static str, detail: String },
    /// A wire packet failed structural validation or CRC.
    Packet { detail: String },
    /// Streams could not be aligned within the sync tolerance.
    Desync { detail: String },
    /// Homography estimation hit a degenerate configuration.
    Degenerate { detail: String },
    /// A decoder returned frames violating its output contract.
    Decoder { detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected shape {expected}, got {got}"),
            Error::ColorSpace {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected colorspace {expected}, got {got}"),
            Error::InvalidParameter { what, detail } => {
                write!(f, "invalid parameter {what}: {detail}")
            }
            Error::Packet { detail } => write!(f, "packet error: {detail}"),
            Error::Desync { detail } => write!(f, "stream desync: {detail}"),
            Error::Degenerate { detail } => write!(f, "degenerate geometry: {detail}"),
            Error::Decoder { detail } => write!(f, "decoder contract violation: {detail}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
