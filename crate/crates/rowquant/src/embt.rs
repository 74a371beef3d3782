//! EMBT: a dense fp32 embedding table.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EMBT"
//! 4       4     version, u32 = 1
//! 8       8     rows, u64
//! 16      8     dim, u64
//! 24      1     dtype, u8 (0 = fp32)
//! 25      ...   rows * dim fp32 values, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rowquant_core::EmbeddingTable;

use crate::error::{Error, Result};
use crate::wire::{check_magic, ByteReader};

pub const MAGIC: [u8; 4] = *b"EMBT";
pub const VERSION: u32 = 1;
const DTYPE_FP32: u8 = 0;

pub fn write_embt<W: Write>(mut w: W, table: &EmbeddingTable) -> Result<()> {
    let mut buf = Vec::with_capacity(25 + 4 * table.data().len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(table.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(table.dim() as u64).to_le_bytes());
    buf.push(DTYPE_FP32);
    for v in table.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_embt<R: Read>(mut r: R) -> Result<EmbeddingTable> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingTable> {
    let mut r = ByteReader::new(bytes);
    check_magic(&mut r, MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (rows, dim) = (r.u64()?, r.u64()?);
    let dtype = r.u8()?;
    if dtype != DTYPE_FP32 {
        return Err(Error::UnknownTag {
            field: "dtype",
            value: dtype,
        });
    }
    let count = crate::wire::element_count(rows, dim)?;
    let payload = r.exact_rest(count.checked_mul(4).ok_or(Error::BadShape { rows, dim })?)?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(p) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { position: p as u64 });
    }
    Ok(EmbeddingTable::new(rows as usize, dim as usize, data)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    decode(&fs::read(path)?)
}

pub fn save(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let mut buf = Vec::new();
    write_embt(&mut buf, table)?;
    fs::write(path, buf)?;
    Ok(())
}
