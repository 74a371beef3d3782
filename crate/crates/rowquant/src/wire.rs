//! Little-endian decoding helpers shared by the file formats.

use crate::error::{Error, Result};

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn header(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self.bytes.get(self.pos..end).ok_or(Error::TruncatedHeader)?;
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn array4(&mut self) -> Result<[u8; 4]> {
        Ok(self.header(4)?.try_into().unwrap())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.header(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array4()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.header(8)?.try_into().unwrap()))
    }

    /// The remaining bytes, which must number exactly `expected`.
    pub(crate) fn exact_rest(&mut self, expected: u64) -> Result<&'a [u8]> {
        let rest = &self.bytes[self.pos..];
        let found = rest.len() as u64;
        if found < expected {
            return Err(Error::TruncatedPayload { expected, found });
        }
        if found > expected {
            return Err(Error::TrailingBytes(found - expected));
        }
        self.pos = self.bytes.len();
        Ok(rest)
    }
}

pub(crate) fn check_magic(r: &mut ByteReader<'_>, expected: [u8; 4]) -> Result<()> {
    let found = r.array4()?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// `rows * dim`, rejecting empty or overflowing shapes.
pub(crate) fn element_count(rows: u64, dim: u64) -> Result<u64> {
    if rows == 0 || dim == 0 || rows > usize::MAX as u64 || dim > usize::MAX as u64 {
        return Err(Error::BadShape { rows, dim });
    }
    rows.checked_mul(dim).ok_or(Error::BadShape { rows, dim })
}
