use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported {field} tag {value}")]
    UnknownTag { field: &'static str, value: u8 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("header declares an impossible shape {rows}x{dim}")]
    BadShape { rows: u64, dim: u64 },
    #[error("non-finite value at element {position}")]
    NonFinite { position: u64 },
    #[error("corrupt payload: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Core(#[from] rowquant_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
