use alloc::vec::Vec;

use super::{
    clip_range_aciq, clip_range_asym, clip_range_sym, clip_range_table, greedy_search, gss_search,
    hist_apprx_search, hist_brute_search, quantize_uniform_with, AciqPrior, AuxPrecision,
    UniformQuantTable,
};
use crate::error::{Error, Result};
use crate::tensor::{ClipRange, EmbeddingTable};

/// Work counters for hardware-independent complexity checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Objective evaluations (squared-error sums or histogram window norms).
    pub loss_evals: u64,
    /// Histogram bins visited while scoring windows.
    pub bin_visits: u64,
}

/// A clipping-range strategy with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipMethod {
    Sym,
    Asym,
    /// One range for the whole table.
    Table,
    Gss { tol: f64 },
    Aciq(AciqPrior),
    Greedy { bins: usize, ratio: f64 },
    HistApprx { bins: usize },
    HistBrute { bins: usize },
}

impl ClipMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ClipMethod::Sym => "sym",
            ClipMethod::Asym => "asym",
            ClipMethod::Table => "table",
            ClipMethod::Gss { .. } => "gss",
            ClipMethod::Aciq(_) => "aciq",
            ClipMethod::Greedy { .. } => "greedy",
            ClipMethod::HistApprx { .. } => "hist-apprx",
            ClipMethod::HistBrute { .. } => "hist-brute",
        }
    }

    /// Range for a single row. [`ClipMethod::Table`] needs the whole table
    /// and is rejected here.
    pub fn search_row(&self, x: &[f32], nbits: u32) -> Result<(ClipRange, SearchStats)> {
        let none = SearchStats::default();
        match *self {
            ClipMethod::Sym => clip_range_sym(x).map(|r| (r, none)),
            ClipMethod::Asym => clip_range_asym(x).map(|r| (r, none)),
            ClipMethod::Table => Err(Error::InvalidArgument(
                "the table strategy needs the whole table, not one row",
            )),
            ClipMethod::Gss { tol } => gss_search(x, nbits, tol),
            ClipMethod::Aciq(prior) => clip_range_aciq(x, prior).map(|r| (r, none)),
            ClipMethod::Greedy { bins, ratio } => greedy_search(x, nbits, bins, ratio),
            ClipMethod::HistApprx { bins } => {
                hist_apprx_search(x, bins, nbits).map(|s| (s.range, s.stats))
            }
            ClipMethod::HistBrute { bins } => {
                hist_brute_search(x, bins, nbits).map(|s| (s.range, s.stats))
            }
        }
    }
}

/// Quantizes every row of `table` with ranges chosen by `method`.
pub fn quantize_table_uniform(
    table: &EmbeddingTable,
    method: ClipMethod,
    nbits: u32,
    aux: AuxPrecision,
) -> Result<UniformQuantTable> {
    super::check_nbits(nbits)?;
    let shared = match method {
        ClipMethod::Table => Some(clip_range_table(table)),
        _ => None,
    };
    let rows = table
        .iter_rows()
        .map(|row| {
            let range = match shared {
                Some(r) => r,
                None => method.search_row(row, nbits)?.0,
            };
            quantize_uniform_with(row, range, nbits, aux)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniformQuantTable {
        rows,
        dim: table.dim(),
        nbits,
        aux,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{sample_table, RngSpec};

    #[test]
    fn table_method_shares_one_range() {
        let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 1), 4, 8).unwrap();
        let q = quantize_table_uniform(&t, ClipMethod::Table, 4, AuxPrecision::Fp32).unwrap();
        assert!(q.rows.windows(2).all(|w| w[0].scale == w[1].scale && w[0].bias == w[1].bias));
        assert!(ClipMethod::Table.search_row(t.row(0).unwrap(), 4).is_err());
    }

    #[test]
    fn dequantized_shape_matches() {
        let t = sample_table(&RngSpec::gaussian(0.0, 1.0, 2), 3, 5).unwrap();
        let q = quantize_table_uniform(&t, ClipMethod::Asym, 8, AuxPrecision::Fp16).unwrap();
        assert_eq!(q.num_rows(), 3);
        assert_eq!(q.dequantize().len(), 15);
        assert_eq!(q.dequantize_row(2).unwrap().len(), 5);
        assert!(q.dequantize_row(3).is_err());
    }
}
