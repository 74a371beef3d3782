use core::fmt;

/// Errors raised by the quantization core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation precondition.
    InvalidArgument(&'static str),
    /// A row or table index was out of bounds.
    OutOfRange { index: usize, len: usize },
    /// A pooled query referenced a row that does not exist.
    QueryIndexOutOfRange { position: usize, index: usize, rows: usize },
    /// The input contained NaN or an infinity.
    NonFinite { position: usize },
    /// Two tables (or vectors) that must agree in shape did not.
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A value cannot be stored at the requested auxiliary precision.
    AuxOverflow(f32),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::OutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::QueryIndexOutOfRange {
                position,
                index,
                rows,
            } => write!(
                f,
                "query position {position} references row {index}, table has {rows} rows"
            ),
            Error::NonFinite { position } => {
                write!(f, "non-finite value at flat position {position}")
            }
            Error::ShapeMismatch { expected, found } => write!(
                f,
                "shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::AuxOverflow(v) => {
                write!(f, "value {v} overflows the auxiliary fp16 range")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
