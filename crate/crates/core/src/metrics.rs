//! Normalized l2 loss, storage accounting and CSV report rows.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::EmbeddingTable;
use crate::uniform::AuxPrecision;

/// `||x - xq|| / ||x||`.
///
/// An all-zero `x` gives 0 when `xq` is also all zero and `+inf` otherwise.
pub fn normalized_l2(x: &[f32], xq: &[f32]) -> Result<f64> {
    if x.len() != xq.len() {
        return Err(Error::ShapeMismatch {
            expected: (1, x.len()),
            found: (1, xq.len()),
        });
    }
    let (err, norm) = sums(x, xq);
    Ok(ratio(err, norm))
}

fn sums(x: &[f32], xq: &[f32]) -> (f64, f64) {
    let mut err = 0.0f64;
    let mut norm = 0.0f64;
    for (&a, &b) in x.iter().zip(xq) {
        let e = a as f64 - b as f64;
        err += e * e;
        norm += a as f64 * a as f64;
    }
    (err, norm)
}

fn ratio(err: f64, norm: f64) -> f64 {
    if norm == 0.0 {
        if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        libm::sqrt(err) / libm::sqrt(norm)
    }
}

/// How per-row errors are combined into one table loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Norms over the whole table viewed as one vector.
    #[default]
    Flattened,
    /// Arithmetic mean of per-row normalized losses.
    RowMean,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Flattened => "flattened",
            Aggregation::RowMean => "row-mean",
        }
    }
}

fn check_shape(orig: &EmbeddingTable, deq: &[f32]) -> Result<()> {
    if deq.len() != orig.data().len() {
        return Err(Error::ShapeMismatch {
            expected: (orig.rows(), orig.dim()),
            found: (deq.len() / orig.dim(), orig.dim()),
        });
    }
    Ok(())
}

/// Normalized l2 of every row of `orig` against the row-major `deq`.
pub fn per_row_l2(orig: &EmbeddingTable, deq: &[f32]) -> Result<Vec<f64>> {
    check_shape(orig, deq)?;
    Ok(orig
        .iter_rows()
        .zip(deq.chunks_exact(orig.dim()))
        .map(|(x, xq)| {
            let (err, norm) = sums(x, xq);
            ratio(err, norm)
        })
        .collect())
}

pub fn table_normalized_l2(orig: &EmbeddingTable, deq: &[f32], mode: Aggregation) -> Result<f64> {
    check_shape(orig, deq)?;
    Ok(match mode {
        Aggregation::Flattened => {
            let (err, norm) = sums(orig.data(), deq);
            ratio(err, norm)
        }
        Aggregation::RowMean => {
            let rows = per_row_l2(orig, deq)?;
            rows.iter().sum::<f64>() / rows.len() as f64
        }
    })
}

/// Storage families with distinct size formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Packed codes plus per-row scale and bias.
    Uniform,
    /// 4-bit indices plus a 16-entry codebook per row.
    RowKmeans,
    /// 4-bit indices, a `log2 K`-bit block id per row and `K` codebooks.
    KmeansCls,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    pub bytes_fp32: u64,
    pub bytes_quant: u64,
    pub percent_of_fp32: f64,
}

/// Bytes needed to store an `rows x dim` table under `kind`, counting
/// payload and auxiliary values only.
///
/// The two-tier total is computed in bits and rounded up to whole bytes
/// once, so block ids pack across row boundaries.
pub fn quantized_size_bytes(
    kind: SchemeKind,
    rows: usize,
    dim: usize,
    nbits: u32,
    aux: AuxPrecision,
    k: Option<usize>,
) -> Result<SizeReport> {
    if rows == 0 || dim == 0 {
        return Err(Error::InvalidArgument("table must have at least one row and column"));
    }
    let (n, d, a) = (rows as u64, dim as u64, aux.bytes() as u64);
    let bytes_quant = match kind {
        SchemeKind::Uniform => {
            crate::uniform::check_nbits(nbits)?;
            (d * nbits as u64).div_ceil(8) * n + 2 * n * a
        }
        SchemeKind::RowKmeans => {
            check_codebook_bits(nbits)?;
            n * d.div_ceil(2) + 16 * n * a
        }
        SchemeKind::KmeansCls => {
            check_codebook_bits(nbits)?;
            let k = k.ok_or(Error::InvalidArgument("the two-tier scheme needs K"))?;
            if !k.is_power_of_two() {
                return Err(Error::InvalidArgument("K must be a power of two"));
            }
            let log2k = k.trailing_zeros() as u64;
            let bits = 4 * n * d + n * log2k + 128 * k as u64 * a;
            bits.div_ceil(8)
        }
    };
    let bytes_fp32 = 4 * n * d;
    Ok(SizeReport {
        bytes_fp32,
        bytes_quant,
        percent_of_fp32: 100.0 * bytes_quant as f64 / bytes_fp32 as f64,
    })
}

fn check_codebook_bits(nbits: u32) -> Result<()> {
    if nbits == 4 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("codebook schemes are 4-bit only"))
    }
}

/// Loss and size summary of one quantized table.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantReport {
    pub method: String,
    pub dim: usize,
    pub aggregation: Aggregation,
    pub per_row_loss: Vec<f64>,
    pub table_loss: f64,
    pub size: SizeReport,
}

impl QuantReport {
    pub fn new(
        method: &str,
        orig: &EmbeddingTable,
        deq: &[f32],
        aggregation: Aggregation,
        size: SizeReport,
    ) -> Result<Self> {
        Ok(Self {
            method: String::from(method),
            dim: orig.dim(),
            aggregation,
            per_row_loss: per_row_l2(orig, deq)?,
            table_loss: table_normalized_l2(orig, deq, aggregation)?,
            size,
        })
    }

    /// Column order of [`QuantReport::csv_row`].
    pub const CSV_HEADER: &'static str = "method,d,loss,bytes,percent";

    /// `method,d,loss,bytes,percent` with the loss to 8 decimals and the
    /// percentage to 2.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.8},{},{:.2}",
            self.method, self.dim, self.table_loss, self.size.bytes_quant, self.size.percent_of_fp32
        )
    }
}
