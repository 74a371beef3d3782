//! Single-threaded throughput benchmark of pooled lookups.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rowquant_core::pooling::{
    bytes_per_row, sparse_lengths_sum_packed, sparse_lengths_sum_ref, DataType, PackedTable,
    PooledQuery, RefSource,
};
use rowquant_core::tensor::{sample_table, RngSpec};
use rowquant_core::uniform::{quantize_table_uniform, ClipMethod};
use rowquant_core::AuxPrecision;

use crate::error::Result;

/// Size of the buffer swept between repeats in cache-flushed mode.
pub const FLUSH_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    /// Repeats run back to back, so a small table stays in cache.
    Resident,
    /// A 64 MiB buffer is written between repeats to evict the table.
    Flushed,
}

impl CacheMode {
    pub fn name(self) -> &'static str {
        match self {
            CacheMode::Resident => "cache_resident",
            CacheMode::Flushed => "cache_flushed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dtype: DataType,
    pub dim: usize,
    pub rows: usize,
    pub batch: usize,
    pub mean_len: usize,
    pub mode: CacheMode,
    pub repeats: usize,
    pub aux: AuxPrecision,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub dtype: DataType,
    pub dim: usize,
    pub mode: CacheMode,
    pub median_secs: f64,
    /// Scalar additions per second, in billions.
    pub gsums_per_sec: f64,
    pub bytes_per_row: usize,
}

fn flush(buf: &mut [u8], round: u8) {
    for (i, b) in buf.iter_mut().enumerate().step_by(64) {
        *b = round.wrapping_add(i as u8);
    }
    black_box(&buf);
}

/// Times `repeats` runs of one pooled query and reports the median.
pub fn bench_sls(cfg: &BenchConfig) -> Result<BenchReport> {
    let table = sample_table(&RngSpec::gaussian(0.0, 1.0, cfg.seed), cfg.rows, cfg.dim)?;
    let query = PooledQuery::random(cfg.rows, cfg.batch, cfg.mean_len, cfg.seed);
    let packed = match cfg.dtype {
        DataType::Fp32 => None,
        DataType::Int8 | DataType::Int4 => {
            let nbits = if cfg.dtype == DataType::Int8 { 8 } else { 4 };
            let q = quantize_table_uniform(&table, ClipMethod::Asym, nbits, cfg.aux)?;
            Some(PackedTable::pack(&q)?)
        }
    };
    let mut flush_buf = match cfg.mode {
        CacheMode::Flushed => vec![0u8; FLUSH_BYTES],
        CacheMode::Resident => Vec::new(),
    };

    let mut times = Vec::with_capacity(cfg.repeats.max(1));
    for round in 0..cfg.repeats.max(1) {
        if cfg.mode == CacheMode::Flushed {
            flush(&mut flush_buf, round as u8);
        }
        let start = Instant::now();
        let out = match &packed {
            Some(p) => sparse_lengths_sum_packed(p, &query)?,
            None => sparse_lengths_sum_ref(RefSource::Fp32(&table), &query)?,
        };
        times.push(start.elapsed().as_secs_f64());
        black_box(out);
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    let sums = (query.indices().len() * cfg.dim) as f64;
    Ok(BenchReport {
        dtype: cfg.dtype,
        dim: cfg.dim,
        mode: cfg.mode,
        median_secs: median,
        gsums_per_sec: if median > 0.0 { sums / median / 1e9 } else { f64::INFINITY },
        bytes_per_row: bytes_per_row(cfg.dtype, cfg.dim, cfg.aux),
    })
}

pub const BENCH_CSV_HEADER: &str = "dtype,d,mode,median_s,gsums_per_s,bytes_per_row";

pub fn bench_csv(rows: &[BenchReport]) -> String {
    let mut s = String::from(BENCH_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{:.6e},{:.4},{}",
            r.dtype.name(),
            r.dim,
            r.mode.name(),
            r.median_secs,
            r.gsums_per_sec,
            r.bytes_per_row
        )
        .unwrap();
    }
    s
}
