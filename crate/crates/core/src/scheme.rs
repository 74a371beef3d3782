//! One entry point for every quantization method.

use alloc::vec::Vec;

use crate::codebook::{
    quantize_table_kmeans, quantize_table_kmeans_cls, CodebookQuantTable, TwoTierQuantTable,
};
use crate::error::{Error, Result};
use crate::metrics::{quantized_size_bytes, Aggregation, QuantReport, SchemeKind, SizeReport};
use crate::tensor::EmbeddingTable;
use crate::uniform::{quantize_table_uniform, AuxPrecision, ClipMethod, UniformQuantTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Uniform quantization with a searched clipping range.
    Clip(ClipMethod),
    /// One 16-entry codebook per row.
    Kmeans,
    /// Rows clustered into `k` blocks with one codebook per block.
    KmeansCls { k: usize, seed: u64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Clip(m) => m.name(),
            Method::Kmeans => "kmeans",
            Method::KmeansCls { .. } => "kmeans-cls",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizedTable {
    Uniform(UniformQuantTable),
    Codebook(CodebookQuantTable),
    TwoTier(TwoTierQuantTable),
}

impl QuantizedTable {
    pub fn rows(&self) -> usize {
        match self {
            QuantizedTable::Uniform(q) => q.num_rows(),
            QuantizedTable::Codebook(q) => q.num_rows(),
            QuantizedTable::TwoTier(q) => q.num_rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantizedTable::Uniform(q) => q.dim,
            QuantizedTable::Codebook(q) => q.dim,
            QuantizedTable::TwoTier(q) => q.dim,
        }
    }

    pub fn nbits(&self) -> u32 {
        match self {
            QuantizedTable::Uniform(q) => q.nbits,
            _ => 4,
        }
    }

    pub fn aux(&self) -> AuxPrecision {
        match self {
            QuantizedTable::Uniform(q) => q.aux,
            QuantizedTable::Codebook(q) => q.aux,
            QuantizedTable::TwoTier(q) => q.aux,
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            QuantizedTable::Uniform(_) => SchemeKind::Uniform,
            QuantizedTable::Codebook(_) => SchemeKind::RowKmeans,
            QuantizedTable::TwoTier(_) => SchemeKind::KmeansCls,
        }
    }

    pub fn dequantize(&self) -> Vec<f32> {
        match self {
            QuantizedTable::Uniform(q) => q.dequantize(),
            QuantizedTable::Codebook(q) => q.dequantize(),
            QuantizedTable::TwoTier(q) => q.dequantize(),
        }
    }

    pub fn size(&self) -> Result<SizeReport> {
        let k = match self {
            QuantizedTable::TwoTier(q) => Some(q.k),
            _ => None,
        };
        quantized_size_bytes(self.kind(), self.rows(), self.dim(), self.nbits(), self.aux(), k)
    }
}

/// Quantizes `table` with `method`. Codebook methods are 4-bit only.
pub fn quantize_table(
    table: &EmbeddingTable,
    method: Method,
    nbits: u32,
    aux: AuxPrecision,
) -> Result<QuantizedTable> {
    match method {
        Method::Clip(m) => quantize_table_uniform(table, m, nbits, aux).map(QuantizedTable::Uniform),
        Method::Kmeans | Method::KmeansCls { .. } if nbits != 4 => {
            Err(Error::InvalidArgument("codebook schemes are 4-bit only"))
        }
        Method::Kmeans => quantize_table_kmeans(table, aux).map(QuantizedTable::Codebook),
        Method::KmeansCls { k, seed } => {
            quantize_table_kmeans_cls(table, k, seed, aux).map(QuantizedTable::TwoTier)
        }
    }
}

/// Loss and size of `q` against the table it was built from.
pub fn report(
    method: &str,
    orig: &EmbeddingTable,
    q: &QuantizedTable,
    aggregation: Aggregation,
) -> Result<QuantReport> {
    QuantReport::new(method, orig, &q.dequantize(), aggregation, q.size()?)
}
