//! Two-tier codebooks: rows are clustered into `K` blocks, then each block
//! shares one 16-entry codebook fitted to all of its scalars.

use alloc::vec;
use alloc::vec::Vec;

use super::{cluster_rows, fit_codebook, nearest_index, Codebook, KMeansOptions, CODEBOOK_SIZE};
use crate::error::{Error, Result};
use crate::tensor::EmbeddingTable;
use crate::uniform::AuxPrecision;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoTierQuantTable {
    pub k: usize,
    pub dim: usize,
    /// Block of each row, in `[0, k)`.
    pub assignments: Vec<u32>,
    pub block_codebooks: Vec<Codebook>,
    /// `rows x dim` codebook indices, row-major.
    pub indices: Vec<u8>,
    pub aux: AuxPrecision,
}

impl TwoTierQuantTable {
    pub fn num_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn dequantize_row(&self, i: usize) -> Result<Vec<f32>> {
        let block = *self.assignments.get(i).ok_or(Error::OutOfRange {
            index: i,
            len: self.num_rows(),
        })?;
        let codebook = &self.block_codebooks[block as usize];
        Ok(self.indices[i * self.dim..(i + 1) * self.dim]
            .iter()
            .map(|&c| codebook[c as usize])
            .collect())
    }

    pub fn dequantize(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.indices.len());
        for (row, &block) in self.indices.chunks_exact(self.dim).zip(&self.assignments) {
            let codebook = &self.block_codebooks[block as usize];
            out.extend(row.iter().map(|&c| codebook[c as usize]));
        }
        out
    }
}

/// Quantizes `table` with `k` row blocks (a power of two, `1 <= k <= N`).
///
/// Block scalars are pooled in row order before fitting, so the result is a
/// function of `(table, k, seed, aux)` only. A block left empty by the
/// clustering gets an all-zero codebook that no row references.
pub fn quantize_table_kmeans_cls(
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
    aux: AuxPrecision,
) -> Result<TwoTierQuantTable> {
    if !k.is_power_of_two() {
        return Err(Error::InvalidArgument("K must be a power of two"));
    }
    let opts = KMeansOptions::default();
    let clusters = cluster_rows(table, k, seed, opts)?;
    let dim = table.dim();

    let mut pooled: Vec<Vec<f32>> = vec![Vec::new(); k];
    for (&block, row) in clusters.assignments.iter().zip(table.iter_rows()) {
        pooled[block].extend_from_slice(row);
    }
    let block_codebooks = pooled
        .iter()
        .map(|values| {
            if values.is_empty() {
                Ok([0.0; CODEBOOK_SIZE])
            } else {
                fit_codebook(values, aux, opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut indices = Vec::with_capacity(table.rows() * dim);
    for (&block, row) in clusters.assignments.iter().zip(table.iter_rows()) {
        let codebook = &block_codebooks[block];
        indices.extend(row.iter().map(|&v| nearest_index(codebook, v)));
    }
    Ok(TwoTierQuantTable {
        k,
        dim,
        assignments: clusters.assignments.iter().map(|&a| a as u32).collect(),
        block_codebooks,
        indices,
        aux,
    })
}
