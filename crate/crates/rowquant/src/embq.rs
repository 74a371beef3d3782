//! EMBQ: a quantized embedding table.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EMBQ"
//! 4       4     version, u32 = 1
//! 8       1     scheme: 0 uniform4, 1 uniform8, 2 kmeans_row, 3 kmeans_cls
//! 9       1     aux: 0 fp32, 1 fp16
//! 10      8     rows, u64
//! 18      8     dim, u64
//! 26      4     K, u32 (kmeans_cls only)
//! ```
//!
//! Payloads, with `A` the aux width in bytes and `h = ceil(dim / 2)`:
//!
//! - uniform4 / uniform8: the packed row layout of
//!   [`rowquant_core::pooling`], `rows` rows of `ceil(dim * nbits / 8) + 2A`
//!   bytes.
//! - kmeans_row: per row, `h` bytes of packed 4-bit indices followed by the
//!   row's 16 codebook values.
//! - kmeans_cls: `K * 16` codebook values (block-major), then the block id
//!   of every row packed LSB-first at `log2 K` bits each and padded to a
//!   whole byte, then `rows * h` bytes of packed indices.
//!
//! Everything is little-endian; fp16 values are IEEE-754 binary16.

use std::fs;
use std::path::Path;

use half::f16;
use rowquant_core::codebook::{
    CodebookQuantTable, CodebookRowQuant, TwoTierQuantTable, CODEBOOK_SIZE,
};
use rowquant_core::metrics::{quantized_size_bytes, SchemeKind, SizeReport};
use rowquant_core::pooling::{pack_nibbles, unpack_nibbles, PackedTable};
use rowquant_core::{AuxPrecision, QuantizedTable};

use crate::error::{Error, Result};
use crate::wire::{check_magic, element_count, ByteReader};

pub const MAGIC: [u8; 4] = *b"EMBQ";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Uniform4,
    Uniform8,
    KmeansRow,
    KmeansCls,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        match self {
            Scheme::Uniform4 => 0,
            Scheme::Uniform8 => 1,
            Scheme::KmeansRow => 2,
            Scheme::KmeansCls => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Scheme::Uniform4,
            1 => Scheme::Uniform8,
            2 => Scheme::KmeansRow,
            3 => Scheme::KmeansCls,
            value => {
                return Err(Error::UnknownTag {
                    field: "scheme",
                    value,
                })
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Uniform4 => "uniform4",
            Scheme::Uniform8 => "uniform8",
            Scheme::KmeansRow => "kmeans_row",
            Scheme::KmeansCls => "kmeans_cls",
        }
    }
}

fn aux_tag(aux: AuxPrecision) -> u8 {
    match aux {
        AuxPrecision::Fp32 => 0,
        AuxPrecision::Fp16 => 1,
    }
}

fn aux_from_tag(tag: u8) -> Result<AuxPrecision> {
    match tag {
        0 => Ok(AuxPrecision::Fp32),
        1 => Ok(AuxPrecision::Fp16),
        value => Err(Error::UnknownTag { field: "aux", value }),
    }
}

/// The decoded content of an EMBQ file.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbqTable {
    Uniform(PackedTable),
    Codebook(CodebookQuantTable),
    TwoTier(TwoTierQuantTable),
}

impl EmbqTable {
    pub fn scheme(&self) -> Scheme {
        match self {
            EmbqTable::Uniform(p) if p.nbits() == 4 => Scheme::Uniform4,
            EmbqTable::Uniform(_) => Scheme::Uniform8,
            EmbqTable::Codebook(_) => Scheme::KmeansRow,
            EmbqTable::TwoTier(_) => Scheme::KmeansCls,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            EmbqTable::Uniform(p) => p.rows(),
            EmbqTable::Codebook(q) => q.num_rows(),
            EmbqTable::TwoTier(q) => q.num_rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbqTable::Uniform(p) => p.dim(),
            EmbqTable::Codebook(q) => q.dim,
            EmbqTable::TwoTier(q) => q.dim,
        }
    }

    pub fn aux(&self) -> AuxPrecision {
        match self {
            EmbqTable::Uniform(p) => p.aux(),
            EmbqTable::Codebook(q) => q.aux,
            EmbqTable::TwoTier(q) => q.aux,
        }
    }

    pub fn dequantize(&self) -> Vec<f32> {
        match self {
            EmbqTable::Uniform(p) => (0..p.rows())
                .flat_map(|i| p.unpack_row(i).expect("row index in range"))
                .collect(),
            EmbqTable::Codebook(q) => q.dequantize(),
            EmbqTable::TwoTier(q) => q.dequantize(),
        }
    }

    /// Storage accounting under the payload-only size model.
    pub fn size(&self) -> Result<SizeReport> {
        let (kind, nbits, k) = match self {
            EmbqTable::Uniform(p) => (SchemeKind::Uniform, p.nbits(), None),
            EmbqTable::Codebook(_) => (SchemeKind::RowKmeans, 4, None),
            EmbqTable::TwoTier(q) => (SchemeKind::KmeansCls, 4, Some(q.k)),
        };
        Ok(quantized_size_bytes(kind, self.rows(), self.dim(), nbits, self.aux(), k)?)
    }
}

impl TryFrom<&QuantizedTable> for EmbqTable {
    type Error = Error;

    fn try_from(q: &QuantizedTable) -> Result<Self> {
        Ok(match q {
            QuantizedTable::Uniform(u) => EmbqTable::Uniform(PackedTable::pack(u)?),
            QuantizedTable::Codebook(c) => EmbqTable::Codebook(c.clone()),
            QuantizedTable::TwoTier(t) => EmbqTable::TwoTier(t.clone()),
        })
    }
}

fn put_aux(out: &mut Vec<u8>, v: f32, aux: AuxPrecision) {
    match aux {
        AuxPrecision::Fp32 => out.extend_from_slice(&v.to_le_bytes()),
        AuxPrecision::Fp16 => out.extend_from_slice(&f16::from_f32(v).to_le_bytes()),
    }
}

fn get_aux(bytes: &[u8], aux: AuxPrecision) -> f32 {
    match aux {
        AuxPrecision::Fp32 => f32::from_le_bytes(bytes.try_into().unwrap()),
        AuxPrecision::Fp16 => f16::from_le_bytes(bytes.try_into().unwrap()).to_f32(),
    }
}

fn log2k(k: usize) -> usize {
    k.trailing_zeros() as usize
}

pub fn encode(t: &EmbqTable) -> Vec<u8> {
    let aux = t.aux();
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(t.scheme().tag());
    out.push(aux_tag(aux));
    out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(t.dim() as u64).to_le_bytes());
    match t {
        EmbqTable::Uniform(p) => out.extend_from_slice(p.as_bytes()),
        EmbqTable::Codebook(q) => {
            for row in &q.rows {
                pack_nibbles(&row.indices, &mut out);
                for &c in &row.codebook {
                    put_aux(&mut out, c, aux);
                }
            }
        }
        EmbqTable::TwoTier(q) => {
            out.extend_from_slice(&(q.k as u32).to_le_bytes());
            for codebook in &q.block_codebooks {
                for &c in codebook {
                    put_aux(&mut out, c, aux);
                }
            }
            let bits = log2k(q.k);
            let mut packed = vec![0u8; (q.num_rows() * bits).div_ceil(8)];
            for (i, &a) in q.assignments.iter().enumerate() {
                for b in 0..bits {
                    if (a >> b) & 1 == 1 {
                        let pos = i * bits + b;
                        packed[pos / 8] |= 1 << (pos % 8);
                    }
                }
            }
            out.extend_from_slice(&packed);
            for row in q.indices.chunks_exact(q.dim) {
                pack_nibbles(row, &mut out);
            }
        }
    }
    out
}

fn finite_aux(bytes: &[u8], aux: AuxPrecision, position: &mut u64) -> Result<f32> {
    let v = get_aux(bytes, aux);
    if !v.is_finite() {
        return Err(Error::NonFinite {
            position: *position,
        });
    }
    *position += 1;
    Ok(v)
}

fn codebook_from(bytes: &[u8], aux: AuxPrecision, position: &mut u64) -> Result<[f32; CODEBOOK_SIZE]> {
    let mut codebook = [0.0f32; CODEBOOK_SIZE];
    for (slot, chunk) in codebook.iter_mut().zip(bytes.chunks_exact(aux.bytes())) {
        *slot = finite_aux(chunk, aux, position)?;
    }
    Ok(codebook)
}

fn check_pad_nibbles(packed: &[u8], dim: usize) -> Result<()> {
    if dim % 2 == 1 && packed[packed.len() - 1] >> 4 != 0 {
        return Err(Error::Corrupt("nonzero pad nibble"));
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<EmbqTable> {
    let mut r = ByteReader::new(bytes);
    check_magic(&mut r, MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let scheme = Scheme::from_tag(r.u8()?)?;
    let aux = aux_from_tag(r.u8()?)?;
    let (rows, dim) = (r.u64()?, r.u64()?);
    element_count(rows, dim)?;
    let (n, d) = (rows as usize, dim as usize);
    let a = aux.bytes();
    let half = d.div_ceil(2);
    let shape = Error::BadShape { rows, dim };

    match scheme {
        Scheme::Uniform4 | Scheme::Uniform8 => {
            let nbits = if scheme == Scheme::Uniform4 { 4 } else { 8 };
            let stride = PackedTable::stride_for(d, nbits, aux);
            let len = n.checked_mul(stride).ok_or(shape)?;
            let payload = r.exact_rest(len as u64)?;
            let p = PackedTable::from_bytes(n, d, nbits, aux, payload.to_vec())?;
            let payload_len = stride - 2 * a;
            let mut position = 0;
            for row in payload.chunks_exact(stride) {
                if nbits == 4 {
                    check_pad_nibbles(&row[..payload_len], d)?;
                }
                finite_aux(&row[payload_len..payload_len + a], aux, &mut position)?;
                finite_aux(&row[payload_len + a..], aux, &mut position)?;
            }
            Ok(EmbqTable::Uniform(p))
        }
        Scheme::KmeansRow => {
            let stride = half + CODEBOOK_SIZE * a;
            let len = n.checked_mul(stride).ok_or(shape)?;
            let payload = r.exact_rest(len as u64)?;
            let mut position = 0;
            let rows = payload
                .chunks_exact(stride)
                .map(|row| {
                    check_pad_nibbles(&row[..half], d)?;
                    Ok(CodebookRowQuant {
                        indices: unpack_nibbles(&row[..half], d),
                        codebook: codebook_from(&row[half..], aux, &mut position)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(EmbqTable::Codebook(CodebookQuantTable { rows, dim: d, aux }))
        }
        Scheme::KmeansCls => {
            let k = r.u32()? as usize;
            if !k.is_power_of_two() || k > n {
                return Err(Error::Corrupt("K must be a power of two no larger than rows"));
            }
            let bits = log2k(k);
            let codebook_bytes = k * CODEBOOK_SIZE * a;
            let id_bytes = (n * bits).div_ceil(8);
            let len = n
                .checked_mul(half)
                .and_then(|v| v.checked_add(codebook_bytes + id_bytes))
                .ok_or(shape)?;
            let payload = r.exact_rest(len as u64)?;
            let (codebooks, rest) = payload.split_at(codebook_bytes);
            let (ids, packed) = rest.split_at(id_bytes);
            let mut position = 0;
            let block_codebooks = codebooks
                .chunks_exact(CODEBOOK_SIZE * a)
                .map(|c| codebook_from(c, aux, &mut position))
                .collect::<Result<Vec<_>>>()?;
            let assignments = (0..n)
                .map(|i| {
                    (0..bits).fold(0u32, |acc, b| {
                        let pos = i * bits + b;
                        acc | ((((ids[pos / 8] >> (pos % 8)) & 1) as u32) << b)
                    })
                })
                .collect();
            let mut indices = Vec::with_capacity(n * d);
            for row in packed.chunks_exact(half) {
                check_pad_nibbles(row, d)?;
                indices.extend(unpack_nibbles(row, d));
            }
            Ok(EmbqTable::TwoTier(TwoTierQuantTable {
                k,
                dim: d,
                assignments,
                block_codebooks,
                indices,
                aux,
            }))
        }
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<EmbqTable> {
    decode(&fs::read(path)?)
}

pub fn save(path: impl AsRef<Path>, t: &EmbqTable) -> Result<()> {
    fs::write(path, encode(t))?;
    Ok(())
}
