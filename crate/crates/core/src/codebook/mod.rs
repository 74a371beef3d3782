//! Non-uniform 4-bit quantization with 16-entry codebooks.
//!
//! Row-wise KMEANS fits one codebook per row. The two-tier variant first
//! groups similar rows into `K` blocks and fits one codebook per block.
//! Both start Lloyd's iterations from the 16 levels of the row's (or block's)
//! ASYM uniform grid.

mod cluster;
mod kmeans;
mod two_tier;

pub use cluster::{cluster_rows, RowClusters};
pub use kmeans::{kmeans_1d, KMeans1d, KMeansOptions};
pub use two_tier::{quantize_table_kmeans_cls, TwoTierQuantTable};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{min_max, ClipRange, EmbeddingTable};
use crate::uniform::{AuxPrecision, Codec};

pub const CODEBOOK_SIZE: usize = 16;

pub type Codebook = [f32; CODEBOOK_SIZE];

/// One row stored as indices into its own sorted codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookRowQuant {
    pub codebook: Codebook,
    pub indices: Vec<u8>,
}

impl CodebookRowQuant {
    pub fn dequantize(&self) -> Vec<f32> {
        self.indices
            .iter()
            .map(|&i| self.codebook[i as usize])
            .collect()
    }
}

/// Index of the codebook entry nearest to `v`, lowest index on ties.
#[inline]
pub fn nearest_index(codebook: &Codebook, v: f32) -> u8 {
    let v = v as f64;
    let mut best = 0u8;
    let mut best_d = f64::INFINITY;
    for (i, &c) in codebook.iter().enumerate() {
        let e = v - c as f64;
        if e * e < best_d {
            best_d = e * e;
            best = i as u8;
        }
    }
    best
}

/// Maps every value of `x` to its nearest entry of a fixed codebook.
pub fn encode_with_codebook(codebook: &Codebook, x: &[f32]) -> CodebookRowQuant {
    CodebookRowQuant {
        codebook: *codebook,
        indices: x.iter().map(|&v| nearest_index(codebook, v)).collect(),
    }
}

fn codebook_sse(codebook: &Codebook, x: &[f32]) -> f64 {
    x.iter()
        .map(|&v| {
            let e = v as f64 - codebook[nearest_index(codebook, v) as usize] as f64;
            e * e
        })
        .sum()
}

fn rounded_codebook(centers: impl Iterator<Item = f32>, aux: AuxPrecision) -> Result<Codebook> {
    let mut codebook = [0.0f32; CODEBOOK_SIZE];
    for (slot, c) in codebook.iter_mut().zip(centers) {
        *slot = aux.round(c)?;
    }
    codebook.sort_by(f32::total_cmp);
    Ok(codebook)
}

/// Fits a sorted 16-entry codebook to `values`, stored at `aux` precision.
///
/// Lloyd starts from the ASYM grid. Rounding centers to `aux` can in rare
/// cases leave the codebook worse than the rounded grid itself; the grid is
/// kept then, so the result never loses to its own initialization.
pub fn fit_codebook(values: &[f32], aux: AuxPrecision, opts: KMeansOptions) -> Result<Codebook> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("input must be non-empty"));
    }
    let (lo, hi) = min_max(values);
    let grid = Codec::new(ClipRange { xmin: lo, xmax: hi }, 4);
    let init: Vec<f64> = (0..CODEBOOK_SIZE as u8)
        .map(|i| grid.decode(i) as f64)
        .collect();
    let km = kmeans_1d(values, &init, opts, None)?;
    let fitted = rounded_codebook(km.centers.iter().map(|&c| c as f32), aux)?;
    let fallback = rounded_codebook(init.iter().map(|&c| c as f32), aux)?;
    if codebook_sse(&fallback, values) < codebook_sse(&fitted, values) {
        Ok(fallback)
    } else {
        Ok(fitted)
    }
}

/// Row-wise KMEANS with fp32 codebook entries.
pub fn quantize_row_kmeans(x: &[f32]) -> Result<CodebookRowQuant> {
    quantize_row_kmeans_with(x, AuxPrecision::Fp32)
}

pub fn quantize_row_kmeans_with(x: &[f32], aux: AuxPrecision) -> Result<CodebookRowQuant> {
    let codebook = fit_codebook(x, aux, KMeansOptions::default())?;
    Ok(encode_with_codebook(&codebook, x))
}

/// A table quantized with one codebook per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookQuantTable {
    pub rows: Vec<CodebookRowQuant>,
    pub dim: usize,
    pub aux: AuxPrecision,
}

impl CodebookQuantTable {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dequantize(&self) -> Vec<f32> {
        self.rows.iter().flat_map(|r| r.dequantize()).collect()
    }
}

pub fn quantize_table_kmeans(table: &EmbeddingTable, aux: AuxPrecision) -> Result<CodebookQuantTable> {
    let rows = table
        .iter_rows()
        .map(|r| quantize_row_kmeans_with(r, aux))
        .collect::<Result<Vec<_>>>()?;
    Ok(CodebookQuantTable {
        rows,
        dim: table.dim(),
        aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{quant_mse, RngSpec};
    use crate::uniform::{clip_range_asym, clip_range_greedy};
    use alloc::vec;

    fn sse(x: &[f32], y: &[f32]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (a as f64 - b as f64) * (a as f64 - b as f64))
            .sum()
    }

    #[test]
    fn integer_ramp_is_its_own_codebook() {
        let x: Vec<f32> = (0..16).map(|i| i as f32).collect();
        let q = quantize_row_kmeans(&x).unwrap();
        assert_eq!(q.codebook.to_vec(), x);
        assert_eq!(q.dequantize(), x);
    }

    #[test]
    fn constant_row() {
        let q = quantize_row_kmeans(&[2.5; 9]).unwrap();
        assert!(q.codebook.iter().all(|&c| c == 2.5));
        assert!(q.indices.iter().all(|&i| i == q.indices[0]));
        assert_eq!(q.dequantize(), vec![2.5; 9]);
    }

    #[test]
    fn never_worse_than_asym() {
        for seed in 0..200 {
            let x = if seed % 2 == 0 {
                RngSpec::gaussian(0.0, 1.0, seed).sample(64).unwrap()
            } else {
                RngSpec::laplacian(0.0, 1.0, seed).sample(64).unwrap()
            };
            let q = quantize_row_kmeans(&x).unwrap();
            let asym = quant_mse(&x, clip_range_asym(&x).unwrap(), 4);
            assert!(sse(&x, &q.dequantize()) <= asym, "seed {seed}");
        }
    }

    #[test]
    fn beats_greedy_on_gaussian_row() {
        let x = RngSpec::gaussian(0.0, 1.0, 5).sample(64).unwrap();
        let q = quantize_row_kmeans(&x).unwrap();
        let greedy = quant_mse(&x, clip_range_greedy(&x, 4, 200, 0.16).unwrap(), 4);
        assert!(sse(&x, &q.dequantize()) < greedy);
    }

    #[test]
    fn short_rows_reconstruct_exactly() {
        for seed in 0..50 {
            let x = RngSpec::gaussian(0.0, 3.0, seed).sample(16).unwrap();
            let q = quantize_row_kmeans(&x).unwrap();
            assert_eq!(q.dequantize(), x);
        }
    }

    #[test]
    fn requantizing_is_idempotent() {
        for aux in [AuxPrecision::Fp32, AuxPrecision::Fp16] {
            let x = RngSpec::laplacian(0.0, 1.0, 3).sample(100).unwrap();
            let q = quantize_row_kmeans_with(&x, aux).unwrap();
            let again = encode_with_codebook(&q.codebook, &q.dequantize());
            assert_eq!(again, q);
        }
    }

    #[test]
    fn codebook_is_sorted_and_at_aux_precision() {
        let x = RngSpec::gaussian(0.3, 2.0, 8).sample(128).unwrap();
        let q = quantize_row_kmeans_with(&x, AuxPrecision::Fp16).unwrap();
        assert!(q.codebook.windows(2).all(|w| w[0] <= w[1]));
        for &c in &q.codebook {
            assert_eq!(AuxPrecision::Fp16.round(c).unwrap(), c);
        }
        assert!(q.indices.iter().all(|&i| (i as usize) < CODEBOOK_SIZE));
    }

    #[test]
    fn empty_row_is_rejected() {
        assert!(quantize_row_kmeans(&[]).is_err());
    }
}
