//! Loss-versus-dimension and time-versus-dimension sweeps, and per-row
//! value histograms.
//!
//! Each `(trial, d)` pair draws its own table from a seed derived from the
//! base seed, so every dimension is an independent draw and all methods
//! within one pair see the same table.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use rowquant_core::metrics::{table_normalized_l2, Aggregation};
use rowquant_core::tensor::{sample_table, Distribution, RngSpec, SplitMix64};
use rowquant_core::uniform::{quantize_uniform_with, ClipMethod, SearchStats};
use rowquant_core::{quantize_table, AuxPrecision, EmbeddingTable, Method};

use crate::error::Result;

/// Seed for trial `trial` at dimension `d`.
pub fn derive_seed(base: u64, d: usize, trial: usize) -> u64 {
    let mut rng = SplitMix64::new(base ^ ((d as u64) << 32) ^ trial as u64);
    rng.next_u64()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub rows: usize,
    pub distribution: Distribution,
    pub seed: u64,
    pub trials: usize,
    pub nbits: u32,
    pub aux: AuxPrecision,
    /// `(label, method)` pairs in output order.
    pub methods: Vec<(String, Method)>,
}

impl SweepConfig {
    fn table(&self, d: usize, trial: usize) -> Result<EmbeddingTable> {
        let spec = RngSpec {
            distribution: self.distribution,
            seed: derive_seed(self.seed, d, trial),
        };
        Ok(sample_table(&spec, self.rows, d)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimRow {
    pub method: String,
    pub d: usize,
    pub mean_loss: f64,
}

/// Mean flattened normalized loss per `(method, d)` over `trials` tables.
///
/// Work runs in parallel across `(d, trial)`; means are summed in trial
/// order, so the output does not depend on scheduling.
pub fn sweep_dim(cfg: &SweepConfig) -> Result<Vec<DimRow>> {
    let jobs: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let losses = jobs
        .par_iter()
        .map(|&(d, trial)| {
            let t = cfg.table(d, trial)?;
            cfg.methods
                .iter()
                .map(|(_, m)| {
                    let q = quantize_table(&t, *m, cfg.nbits, cfg.aux)?;
                    Ok(table_normalized_l2(&t, &q.dequantize(), Aggregation::Flattened)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (mi, (label, _)) in cfg.methods.iter().enumerate() {
        for (di, &d) in cfg.dims.iter().enumerate() {
            let sum: f64 = (0..cfg.trials)
                .map(|t| losses[di * cfg.trials + t][mi])
                .sum();
            out.push(DimRow {
                method: label.clone(),
                d,
                mean_loss: sum / cfg.trials as f64,
            });
        }
    }
    Ok(out)
}

pub const DIM_CSV_HEADER: &str = "method,d,loss";

pub fn dim_csv(rows: &[DimRow]) -> String {
    let mut s = String::from(DIM_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{:.8}", r.method, r.d, r.mean_loss).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRow {
    pub method: String,
    pub d: usize,
    pub ms_per_row: f64,
    /// Mean work counters per row.
    pub loss_evals: f64,
    pub bin_visits: f64,
}

impl TimeRow {
    pub fn log10_ms(&self) -> f64 {
        self.ms_per_row.log10()
    }
}

/// Quantizes one row, returning the work counters of its range search.
fn quantize_row_counted(x: &[f32], method: Method, nbits: u32, aux: AuxPrecision) -> Result<SearchStats> {
    match method {
        Method::Clip(m) => {
            let m = if m == ClipMethod::Table { ClipMethod::Asym } else { m };
            let (r, s) = m.search_row(x, nbits)?;
            quantize_uniform_with(x, r, nbits, aux)?;
            Ok(s)
        }
        _ => {
            let t = EmbeddingTable::new(1, x.len(), x.to_vec())?;
            quantize_table(&t, method, nbits, aux)?;
            Ok(SearchStats::default())
        }
    }
}

/// Per-row quantization time and work counters for each `(method, d)`.
///
/// Runs sequentially so timings do not compete for cores. Every row of one
/// freshly drawn table is quantized `repeats` times. TABLE is timed as a
/// single-row range computation, which is what it costs per row.
pub fn sweep_time(cfg: &SweepConfig, repeats: usize) -> Result<Vec<TimeRow>> {
    let repeats = repeats.max(1);
    let mut out = Vec::new();
    for (label, method) in &cfg.methods {
        for &d in &cfg.dims {
            let t = cfg.table(d, 0)?;
            let mut stats = SearchStats::default();
            let start = Instant::now();
            for _ in 0..repeats {
                for row in t.iter_rows() {
                    let s = quantize_row_counted(row, *method, cfg.nbits, cfg.aux)?;
                    stats.loss_evals += s.loss_evals;
                    stats.bin_visits += s.bin_visits;
                }
            }
            let elapsed = start.elapsed().as_secs_f64();
            let n = (repeats * t.rows()) as f64;
            out.push(TimeRow {
                method: label.clone(),
                d,
                ms_per_row: 1e3 * elapsed / n,
                loss_evals: stats.loss_evals as f64 / n,
                bin_visits: stats.bin_visits as f64 / n,
            });
        }
    }
    Ok(out)
}

pub const TIME_CSV_HEADER: &str = "method,d,ms_per_row,log10_ms,loss_evals,bin_visits";

pub fn time_csv(rows: &[TimeRow]) -> String {
    let mut s = String::from(TIME_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{:.6e},{:.4},{},{}",
            r.method,
            r.d,
            r.ms_per_row,
            r.log10_ms(),
            r.loss_evals,
            r.bin_visits
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistRow {
    pub method: String,
    /// `original` or `quantized`.
    pub stage: &'static str,
    pub bin_center: f64,
    pub count: u64,
}

fn bin_counts(values: &[f32], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let idx = if width > 0.0 {
            (((v as f64 - lo) / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    counts
}

/// Histograms of row `row` before and after each method, over one common
/// range spanning every series. The original series is repeated per method
/// so each method's pair plots on its own.
pub fn hist_dump(
    table: &EmbeddingTable,
    row: usize,
    methods: &[(String, Method)],
    bins: usize,
    nbits: u32,
    aux: AuxPrecision,
) -> Result<Vec<HistRow>> {
    let original = table.row(row)?.to_vec();
    let dim = table.dim();
    let mut series = Vec::new();
    for (label, m) in methods {
        let q = match m {
            Method::Clip(ClipMethod::Table) | Method::KmeansCls { .. } => {
                quantize_table(table, *m, nbits, aux)?.dequantize()[row * dim..(row + 1) * dim].to_vec()
            }
            _ => {
                let t = EmbeddingTable::new(1, dim, original.clone())?;
                quantize_table(&t, *m, nbits, aux)?.dequantize()
            }
        };
        series.push((label.clone(), q));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in original.iter().chain(series.iter().flat_map(|(_, q)| q.iter())) {
        lo = lo.min(*v as f64);
        hi = hi.max(*v as f64);
    }
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let center = |b: usize| lo + (b as f64 + 0.5) * width;
    let before = bin_counts(&original, lo, hi, bins);
    let mut out = Vec::new();
    for (label, q) in &series {
        let after = bin_counts(q, lo, hi, bins);
        for (stage, counts) in [("original", &before), ("quantized", &after)] {
            for (b, &count) in counts.iter().enumerate() {
                out.push(HistRow {
                    method: label.clone(),
                    stage,
                    bin_center: center(b),
                    count,
                });
            }
        }
    }
    Ok(out)
}

pub const HIST_CSV_HEADER: &str = "method,stage,bin_center,count";

pub fn hist_csv(rows: &[HistRow]) -> String {
    let mut s = String::from(HIST_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{:.6},{}", r.method, r.stage, r.bin_center, r.count).unwrap();
    }
    s
}
