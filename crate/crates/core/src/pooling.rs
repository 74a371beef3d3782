//! Packed row storage and the pooled-sum lookup kernel.
//!
//! A packed row is `ceil(d * nbits / 8)` payload bytes followed by the row's
//! scale and then its bias, each stored little-endian at the auxiliary width.
//! With 4-bit codes, element `j` sits in the low nibble of byte `j / 2` when
//! `j` is even and in the high nibble when odd; an odd `d` leaves the final
//! high nibble zero.
//!
//! Pooled sums accumulate in `f32` in strict query order. The packed kernel
//! and the reference path perform the same operations in the same order and
//! agree bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use half::f16;

use crate::error::{Error, Result};
use crate::tensor::{EmbeddingTable, SplitMix64};
use crate::uniform::{check_nbits, AuxPrecision, Codec, UniformQuantTable, UniformRowQuant};

/// An immutable table of packed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedTable {
    rows: usize,
    dim: usize,
    nbits: u32,
    aux: AuxPrecision,
    buffer: Vec<u8>,
}

fn payload_bytes(dim: usize, nbits: u32) -> usize {
    (dim * nbits as usize).div_ceil(8)
}

fn write_aux(out: &mut Vec<u8>, v: f32, aux: AuxPrecision) {
    match aux {
        AuxPrecision::Fp32 => out.extend_from_slice(&v.to_le_bytes()),
        AuxPrecision::Fp16 => out.extend_from_slice(&f16::from_f32(v).to_le_bytes()),
    }
}

fn read_aux(bytes: &[u8], aux: AuxPrecision) -> f32 {
    match aux {
        AuxPrecision::Fp32 => f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        AuxPrecision::Fp16 => f16::from_le_bytes([bytes[0], bytes[1]]).to_f32(),
    }
}

impl PackedTable {
    /// Packs a uniformly quantized table (4 or 8 bits).
    pub fn pack(q: &UniformQuantTable) -> Result<Self> {
        check_nbits(q.nbits)?;
        let stride = Self::stride_for(q.dim, q.nbits, q.aux);
        let mut buffer = Vec::with_capacity(stride * q.rows.len());
        for row in &q.rows {
            if row.codes.len() != q.dim {
                return Err(Error::InvalidArgument("row length differs from table dimension"));
            }
            match q.nbits {
                4 => pack_nibbles(&row.codes, &mut buffer),
                _ => buffer.extend_from_slice(&row.codes),
            }
            write_aux(&mut buffer, row.scale, q.aux);
            write_aux(&mut buffer, row.bias, q.aux);
        }
        Ok(Self {
            rows: q.rows.len(),
            dim: q.dim,
            nbits: q.nbits,
            aux: q.aux,
            buffer,
        })
    }

    /// Wraps an existing buffer, checking only its length.
    pub fn from_bytes(
        rows: usize,
        dim: usize,
        nbits: u32,
        aux: AuxPrecision,
        buffer: Vec<u8>,
    ) -> Result<Self> {
        check_nbits(nbits)?;
        if rows == 0 || dim == 0 {
            return Err(Error::InvalidArgument("table must have at least one row and column"));
        }
        if buffer.len() != rows * Self::stride_for(dim, nbits, aux) {
            return Err(Error::InvalidArgument("buffer length must equal rows * row stride"));
        }
        Ok(Self {
            rows,
            dim,
            nbits,
            aux,
            buffer,
        })
    }

    pub fn stride_for(dim: usize, nbits: u32, aux: AuxPrecision) -> usize {
        payload_bytes(dim, nbits) + 2 * aux.bytes()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nbits(&self) -> u32 {
        self.nbits
    }

    pub fn aux(&self) -> AuxPrecision {
        self.aux
    }

    pub fn row_stride(&self) -> usize {
        Self::stride_for(self.dim, self.nbits, self.aux)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buffer
    }

    fn raw_row(&self, i: usize) -> Result<&[u8]> {
        if i >= self.rows {
            return Err(Error::OutOfRange {
                index: i,
                len: self.rows,
            });
        }
        let s = self.row_stride();
        Ok(&self.buffer[i * s..(i + 1) * s])
    }

    fn split_row<'a>(&self, raw: &'a [u8]) -> (&'a [u8], f32, f32) {
        let p = payload_bytes(self.dim, self.nbits);
        let a = self.aux.bytes();
        (
            &raw[..p],
            read_aux(&raw[p..p + a], self.aux),
            read_aux(&raw[p + a..], self.aux),
        )
    }

    /// Codes, scale and bias of row `i`.
    pub fn unpack_codes(&self, i: usize) -> Result<UniformRowQuant> {
        let (payload, scale, bias) = self.split_row(self.raw_row(i)?);
        let codes = (0..self.dim).map(|j| self.code_at(payload, j)).collect();
        Ok(UniformRowQuant {
            codes,
            scale,
            bias,
            nbits: self.nbits,
        })
    }

    /// Dequantized row `i`, bit-identical to dequantizing the source row.
    pub fn unpack_row(&self, i: usize) -> Result<Vec<f32>> {
        let (payload, scale, bias) = self.split_row(self.raw_row(i)?);
        let codec = Codec::from_parts(scale, bias, self.nbits);
        Ok((0..self.dim)
            .map(|j| codec.decode(self.code_at(payload, j)))
            .collect())
    }

    #[inline]
    fn code_at(&self, payload: &[u8], j: usize) -> u8 {
        match self.nbits {
            4 => (payload[j / 2] >> ((j & 1) * 4)) & 0x0F,
            _ => payload[j],
        }
    }

    /// `out += row i`, element by element.
    fn accumulate_row(&self, i: usize, out: &mut [f32]) -> Result<()> {
        let (payload, scale, bias) = self.split_row(self.raw_row(i)?);
        match self.nbits {
            4 => {
                let mut lut = [0.0f32; 16];
                for (c, l) in lut.iter_mut().enumerate() {
                    *l = scale * c as f32 + bias;
                }
                for (pair, &byte) in out.chunks_mut(2).zip(payload) {
                    pair[0] += lut[(byte & 0x0F) as usize];
                    if let Some(o) = pair.get_mut(1) {
                        *o += lut[(byte >> 4) as usize];
                    }
                }
            }
            _ => {
                for (o, &c) in out.iter_mut().zip(payload) {
                    *o += scale * c as f32 + bias;
                }
            }
        }
        Ok(())
    }
}

/// Appends 4-bit `codes` two per byte, low nibble first; an odd count
/// leaves the last high nibble zero.
pub fn pack_nibbles(codes: &[u8], out: &mut Vec<u8>) {
    for pair in codes.chunks(2) {
        let hi = pair.get(1).copied().unwrap_or(0);
        out.push((pair[0] & 0x0F) | ((hi & 0x0F) << 4));
    }
}

/// Inverse of [`pack_nibbles`] for `count` codes.
pub fn unpack_nibbles(bytes: &[u8], count: usize) -> Vec<u8> {
    (0..count)
        .map(|j| (bytes[j / 2] >> ((j & 1) * 4)) & 0x0F)
        .collect()
}

pub fn pack_table4(q: &UniformQuantTable) -> Result<PackedTable> {
    if q.nbits != 4 {
        return Err(Error::InvalidArgument("pack_table4 needs a 4-bit table"));
    }
    PackedTable::pack(q)
}

pub fn pack_table8(q: &UniformQuantTable) -> Result<PackedTable> {
    if q.nbits != 8 {
        return Err(Error::InvalidArgument("pack_table8 needs an 8-bit table"));
    }
    PackedTable::pack(q)
}

/// A batch of `B` pooled lookups: segment `s` sums the rows listed in the
/// next `lengths[s]` entries of `indices`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PooledQuery {
    indices: Vec<usize>,
    lengths: Vec<usize>,
}

impl PooledQuery {
    pub fn new(indices: Vec<usize>, lengths: Vec<usize>) -> Result<Self> {
        if lengths.iter().sum::<usize>() != indices.len() {
            return Err(Error::InvalidArgument("segment lengths must sum to the index count"));
        }
        Ok(Self { indices, lengths })
    }

    /// `batch` segments with lengths uniform in `[0, 2 * mean_len]` and
    /// indices uniform over `rows`.
    pub fn random(rows: usize, batch: usize, mean_len: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let lengths: Vec<usize> = (0..batch)
            .map(|_| rng.next_below(2 * mean_len as u64 + 1) as usize)
            .collect();
        let total = lengths.iter().sum();
        let indices = (0..total)
            .map(|_| rng.next_below(rows as u64) as usize)
            .collect();
        Self { indices, lengths }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn batch(&self) -> usize {
        self.lengths.len()
    }

    fn check(&self, rows: usize) -> Result<()> {
        match self.indices.iter().position(|&i| i >= rows) {
            Some(position) => Err(Error::QueryIndexOutOfRange {
                position,
                index: self.indices[position],
                rows,
            }),
            None => Ok(()),
        }
    }

    fn segments(&self) -> impl Iterator<Item = &[usize]> {
        let mut start = 0;
        self.lengths.iter().map(move |&len| {
            let seg = &self.indices[start..start + len];
            start += len;
            seg
        })
    }
}

fn pooled_sum(
    dim: usize,
    rows: usize,
    q: &PooledQuery,
    mut add_row: impl FnMut(usize, &mut [f32]) -> Result<()>,
) -> Result<Vec<f32>> {
    q.check(rows)?;
    let mut out = vec![0.0f32; q.batch() * dim];
    for (seg, acc) in q.segments().zip(out.chunks_exact_mut(dim)) {
        for &i in seg {
            add_row(i, acc)?;
        }
    }
    Ok(out)
}

/// Pooled sums over a packed table, `B x d` row-major.
pub fn sparse_lengths_sum_packed(p: &PackedTable, q: &PooledQuery) -> Result<Vec<f32>> {
    pooled_sum(p.dim, p.rows, q, |i, acc| p.accumulate_row(i, acc))
}

/// The packed kernel restricted to 4-bit tables.
pub fn sparse_lengths_sum_4bit(p: &PackedTable, q: &PooledQuery) -> Result<Vec<f32>> {
    if p.nbits != 4 {
        return Err(Error::InvalidArgument("expected a 4-bit packed table"));
    }
    sparse_lengths_sum_packed(p, q)
}

/// Row sources for [`sparse_lengths_sum_ref`].
#[derive(Debug, Clone, Copy)]
pub enum RefSource<'a> {
    Fp32(&'a EmbeddingTable),
    Quantized(&'a UniformQuantTable),
}

/// Scalar reference: materialize each row, then add it in query order.
pub fn sparse_lengths_sum_ref(src: RefSource<'_>, q: &PooledQuery) -> Result<Vec<f32>> {
    let (rows, dim) = match src {
        RefSource::Fp32(t) => (t.rows(), t.dim()),
        RefSource::Quantized(t) => (t.num_rows(), t.dim),
    };
    pooled_sum(dim, rows, q, |i, acc| {
        let row = match src {
            RefSource::Fp32(t) => t.row(i)?.to_vec(),
            RefSource::Quantized(t) => t.dequantize_row(i)?,
        };
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        Ok(())
    })
}

/// Element types of a pooled lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Fp32,
    Int8,
    Int4,
}

impl DataType {
    pub fn name(self) -> &'static str {
        match self {
            DataType::Fp32 => "fp32",
            DataType::Int8 => "int8",
            DataType::Int4 => "int4",
        }
    }
}

/// Bytes read per pooled row under the packed layout.
pub fn bytes_per_row(dtype: DataType, dim: usize, aux: AuxPrecision) -> usize {
    match dtype {
        DataType::Fp32 => 4 * dim,
        DataType::Int8 => PackedTable::stride_for(dim, 8, aux),
        DataType::Int4 => PackedTable::stride_for(dim, 4, aux),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{sample_table, ClipRange, RngSpec};
    use crate::uniform::{dequantize_uniform, quantize_table_uniform, ClipMethod};

    fn table_of(rows: Vec<UniformRowQuant>, dim: usize, aux: AuxPrecision) -> UniformQuantTable {
        UniformQuantTable {
            nbits: rows[0].nbits,
            rows,
            dim,
            aux,
            method: ClipMethod::Asym,
        }
    }

    fn row(codes: Vec<u8>, scale: f32, bias: f32) -> UniformRowQuant {
        UniformRowQuant {
            codes,
            scale,
            bias,
            nbits: 4,
        }
    }

    #[test]
    fn nibble_order() {
        let p = pack_table4(&table_of(vec![row(vec![1, 2], 1.0, 0.0)], 2, AuxPrecision::Fp32)).unwrap();
        assert_eq!(p.as_bytes()[0], 0x21);
        assert_eq!(p.unpack_row(0).unwrap(), vec![1.0, 2.0]);
        let p = pack_table4(&table_of(vec![row(vec![15], 1.0, 0.0)], 1, AuxPrecision::Fp32)).unwrap();
        assert_eq!(p.as_bytes()[0], 0x0F);
        assert_eq!(p.row_stride(), 9);
    }

    #[test]
    fn aux_trailer_layout() {
        let p = pack_table4(&table_of(vec![row(vec![1, 2], 0.5, -1.0)], 2, AuxPrecision::Fp32)).unwrap();
        assert_eq!(&p.as_bytes()[1..5], &0.5f32.to_le_bytes());
        assert_eq!(&p.as_bytes()[5..9], &(-1.0f32).to_le_bytes());
        assert_eq!(p.unpack_row(0).unwrap(), vec![-0.5, 0.0]);
        let p16 = pack_table4(&table_of(vec![row(vec![1, 2], 1.0, 0.0)], 2, AuxPrecision::Fp16)).unwrap();
        assert_eq!(p16.as_bytes(), &[0x21, 0x00, 0x3C, 0x00, 0x00]);
        assert_eq!(p16.unpack_row(0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn round_trip_matches_dequantize() {
        for (nbits, aux, dim) in [
            (4, AuxPrecision::Fp32, 7),
            (4, AuxPrecision::Fp16, 8),
            (8, AuxPrecision::Fp32, 5),
            (8, AuxPrecision::Fp16, 3),
        ] {
            let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 1), 100, dim).unwrap();
            let q = quantize_table_uniform(&t, ClipMethod::Asym, nbits, aux).unwrap();
            let p = PackedTable::pack(&q).unwrap();
            assert_eq!(p.as_bytes().len(), 100 * p.row_stride());
            for i in 0..100 {
                assert_eq!(p.unpack_codes(i).unwrap(), q.rows[i]);
                let a = p.unpack_row(i).unwrap();
                let b = dequantize_uniform(&q.rows[i]);
                assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            assert!(p.unpack_row(100).is_err());
        }
    }

    #[test]
    fn wrong_width_is_rejected() {
        let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 1), 2, 4).unwrap();
        let q8 = quantize_table_uniform(&t, ClipMethod::Asym, 8, AuxPrecision::Fp32).unwrap();
        assert!(pack_table4(&q8).is_err());
        assert!(pack_table8(&q8).is_ok());
        let p = PackedTable::pack(&q8).unwrap();
        assert!(sparse_lengths_sum_4bit(&p, &PooledQuery::new(vec![], vec![]).unwrap()).is_err());
    }

    #[test]
    fn kernel_examples() {
        let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 2), 6, 5).unwrap();
        let q = quantize_table_uniform(&t, ClipMethod::Asym, 4, AuxPrecision::Fp32).unwrap();
        let p = pack_table4(&q).unwrap();
        let empty = sparse_lengths_sum_4bit(&p, &PooledQuery::new(vec![], vec![0]).unwrap()).unwrap();
        assert_eq!(empty, vec![0.0; 5]);
        let one = sparse_lengths_sum_4bit(&p, &PooledQuery::new(vec![3], vec![1]).unwrap()).unwrap();
        assert_eq!(one, p.unpack_row(3).unwrap());
        let bad = PooledQuery::new(vec![1, 6], vec![2]).unwrap();
        assert_eq!(
            sparse_lengths_sum_4bit(&p, &bad),
            Err(Error::QueryIndexOutOfRange {
                position: 1,
                index: 6,
                rows: 6
            })
        );
        assert!(PooledQuery::new(vec![1], vec![2]).is_err());
    }

    #[test]
    fn fp32_reference_equals_direct_sums() {
        let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 4), 9, 3).unwrap();
        let q = PooledQuery::new(vec![0, 8, 4, 4], vec![3, 0, 1]).unwrap();
        let out = sparse_lengths_sum_ref(RefSource::Fp32(&t), &q).unwrap();
        let r = |i: usize| t.row(i).unwrap();
        for j in 0..3 {
            assert_eq!(out[j], 0.0 + r(0)[j] + r(8)[j] + r(4)[j]);
            assert_eq!(out[3 + j], 0.0);
            assert_eq!(out[6 + j], 0.0 + r(4)[j]);
        }
    }

    #[test]
    fn kernel_matches_reference_bitwise() {
        let t = sample_table(&RngSpec::laplacian(0.0, 1.0, 17), 50, 13).unwrap();
        for nbits in [4, 8] {
            let q = quantize_table_uniform(&t, ClipMethod::Asym, nbits, AuxPrecision::Fp16).unwrap();
            let p = PackedTable::pack(&q).unwrap();
            let query = PooledQuery::random(50, 20, 6, 17);
            let fast = sparse_lengths_sum_packed(&p, &query).unwrap();
            let slow = sparse_lengths_sum_ref(RefSource::Quantized(&q), &query).unwrap();
            assert!(fast.iter().zip(&slow).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn constant_row_packs() {
        let q = crate::uniform::quantize_uniform(&[2.0; 3], ClipRange::new(2.0, 2.0).unwrap(), 4).unwrap();
        let p = pack_table4(&table_of(vec![q], 3, AuxPrecision::Fp32)).unwrap();
        assert_eq!(p.unpack_row(0).unwrap(), vec![2.0; 3]);
    }

    #[test]
    fn bytes_per_row_model() {
        assert_eq!(bytes_per_row(DataType::Fp32, 128, AuxPrecision::Fp32), 512);
        assert_eq!(bytes_per_row(DataType::Int8, 128, AuxPrecision::Fp32), 136);
        assert_eq!(bytes_per_row(DataType::Int4, 128, AuxPrecision::Fp32), 72);
        assert_eq!(bytes_per_row(DataType::Int4, 128, AuxPrecision::Fp16), 68);
        // The 2-value trailer outweighs the payload saving only for tiny rows.
        assert!(bytes_per_row(DataType::Int4, 2, AuxPrecision::Fp32) > 8);
        for d in 3..300 {
            for aux in [AuxPrecision::Fp32, AuxPrecision::Fp16] {
                let int4 = bytes_per_row(DataType::Int4, d, aux);
                assert!(int4 < bytes_per_row(DataType::Fp32, d, aux));
                assert!(int4 <= bytes_per_row(DataType::Int8, d, aux));
            }
        }
    }
}
