//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad or incompatible flags),
//! 2 for data errors (unreadable or malformed files, shape mismatches).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rowquant_core::metrics::{table_normalized_l2, Aggregation, QuantReport};
use rowquant_core::pooling::DataType;
use rowquant_core::tensor::{sample_table, Distribution, RngSpec};
use rowquant_core::{quantize_table, scheme, AuxPrecision, Method};

use crate::bench::{bench_csv, bench_sls, BenchConfig, CacheMode};
use crate::embq::{self, EmbqTable};
use crate::embt;
use crate::error::Error;
use crate::methods::{build_method, AciqDist, MethodName, MethodOptions};
use crate::sweep::{dim_csv, hist_csv, hist_dump, sweep_dim, sweep_time, time_csv, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "rowquant", version, about = "Row-wise 4-bit and 8-bit quantization of embedding tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    Gaussian,
    Laplacian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Aux {
    Fp32,
    Fp16,
}

impl From<Aux> for AuxPrecision {
    fn from(a: Aux) -> Self {
        match a {
            Aux::Fp32 => AuxPrecision::Fp32,
            Aux::Fp16 => AuxPrecision::Fp16,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Agg {
    Flattened,
    RowMean,
}

impl From<Agg> for Aggregation {
    fn from(a: Agg) -> Self {
        match a {
            Agg::Flattened => Aggregation::Flattened,
            Agg::RowMean => Aggregation::RowMean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dtype {
    Fp32,
    Int8,
    Int4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    CacheResident,
    CacheFlushed,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: Dist,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mean: f64,
    /// Standard deviation (gaussian) or scale b (laplacian).
    #[arg(long, default_value_t = 1.0)]
    std: f64,
}

impl DataArgs {
    fn distribution(&self) -> Distribution {
        match self.dist {
            Dist::Gaussian => Distribution::Gaussian {
                mean: self.mean,
                stddev: self.std,
            },
            Dist::Laplacian => Distribution::Laplacian {
                location: self.mean,
                scale: self.std,
            },
        }
    }
}

#[derive(Debug, Args)]
struct QuantArgs {
    #[arg(long, default_value_t = 4, value_parser = PossibleValuesParser::new(["4", "8"]).map(|s| s.parse::<u32>().unwrap()))]
    bits: u32,
    #[arg(long, value_enum, default_value = "fp32")]
    aux: Aux,
    /// Bin count for greedy and the histogram methods [default: 200].
    #[arg(long = "b", value_parser = clap::value_parser!(u64).range(1..))]
    bins: Option<u64>,
    /// Search ratio for greedy [default: 0.16].
    #[arg(long = "r")]
    ratio: Option<f64>,
    /// Block count for kmeans-cls (a power of two).
    #[arg(long = "k", value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Relative bracket tolerance for gss [default: 1e-4].
    #[arg(long)]
    tol: Option<f64>,
    /// Distribution prior for aciq [default: laplace].
    #[arg(long, value_enum)]
    aciq_dist: Option<AciqDist>,
    /// Sigma multiplier for aciq with the gaussian prior.
    #[arg(long)]
    aciq_alpha: Option<f64>,
}

impl QuantArgs {
    fn options(&self) -> MethodOptions {
        MethodOptions {
            bins: self.bins.map(|b| b as usize),
            ratio: self.ratio,
            k: self.k.map(|k| k as usize),
            seed: None,
            tol: self.tol,
            aciq_dist: self.aciq_dist,
            aciq_alpha: self.aciq_alpha,
        }
    }

    fn methods(&self, names: &[MethodName], seed: u64) -> Result<Vec<(String, Method)>, CliError> {
        let opts = self.options();
        opts.check_applicable(names).map_err(CliError::Usage)?;
        let opts = MethodOptions {
            seed: Some(seed),
            ..opts
        };
        names
            .iter()
            .map(|&n| {
                build_method(n, &opts, self.bits)
                    .map(|m| (n.label().to_string(), m))
                    .map_err(CliError::Usage)
            })
            .collect()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random table as EMBT.
    Gen {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        rows: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize an EMBT table into EMBQ.
    ///
    /// Prints one CSV report row: method,d,loss,bytes,percent (flattened
    /// normalized l2 loss; size of the quantized payload in bytes and as a
    /// percentage of fp32).
    Quantize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MethodName,
        #[command(flatten)]
        quant: QuantArgs,
        /// Tier-1 clustering seed for kmeans-cls [default: 0].
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an EMBQ table against its EMBT original.
    ///
    /// Prints CSV: method,d,agg,loss,bytes,percent. Without --agg both the
    /// flattened and row-mean aggregations are printed.
    Evaluate {
        #[arg(long)]
        orig: PathBuf,
        #[arg(long)]
        quant: PathBuf,
        #[arg(long, value_enum)]
        agg: Option<Agg>,
    },
    /// Mean loss per (method, d) over fresh random tables.
    ///
    /// Prints CSV: method,d,loss (mean flattened normalized l2).
    SweepDim {
        #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
        dims: Vec<u64>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        rows: u64,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent tables per dimension.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_delimiter = ',', required = true, value_enum)]
        methods: Vec<MethodName>,
        #[command(flatten)]
        quant: QuantArgs,
    },
    /// Per-row quantization time and work counters per (method, d).
    ///
    /// Prints CSV: method,d,ms_per_row,log10_ms,loss_evals,bin_visits. The
    /// two counter columns are per-row means and are hardware independent.
    SweepTime {
        #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
        dims: Vec<u64>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        rows: u64,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[arg(long, value_delimiter = ',', required = true, value_enum)]
        methods: Vec<MethodName>,
        #[command(flatten)]
        quant: QuantArgs,
    },
    /// Histograms of one row before and after quantization.
    ///
    /// Prints CSV: method,stage,bin_center,count with stage `original` or
    /// `quantized`; all series share one binning range.
    HistDump {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        row: usize,
        #[arg(long, value_delimiter = ',', required = true, value_enum)]
        methods: Vec<MethodName>,
        /// Histogram bin count.
        #[arg(long = "bins", default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
        hist_bins: u64,
        /// Tier-1 clustering seed for kmeans-cls.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        quant: QuantArgs,
    },
    /// Pooled-lookup throughput for fp32, int8 and int4 rows.
    ///
    /// Prints CSV: dtype,d,mode,median_s,gsums_per_s,bytes_per_row.
    Bench {
        #[arg(long, value_delimiter = ',', value_enum, default_values = ["fp32", "int8", "int4"])]
        dtypes: Vec<Dtype>,
        #[arg(long, value_delimiter = ',', default_values = ["128"], value_parser = clap::value_parser!(u64).range(1..))]
        dims: Vec<u64>,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        rows: u64,
        #[arg(long, default_value_t = 256)]
        batch: u64,
        #[arg(long, default_value_t = 32)]
        mean_len: u64,
        #[arg(long, value_enum, default_value = "cache-resident")]
        mode: Mode,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[arg(long, value_enum, default_value = "fp32")]
        aux: Aux,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

fn usize_list(v: &[u64]) -> Vec<usize> {
    v.iter().map(|&x| x as usize).collect()
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Gen {
            data,
            rows,
            dim,
            seed,
            out: path,
        } => {
            let spec = RngSpec {
                distribution: data.distribution(),
                seed,
            };
            let t = sample_table(&spec, rows as usize, dim as usize)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            embt::save(path, &t)?;
        }
        Command::Quantize {
            input,
            method,
            quant,
            seed,
            out: path,
        } => {
            if seed.is_some() && method != MethodName::KmeansCls {
                return Err(CliError::Usage("--seed applies only to kmeans-cls".into()));
            }
            let (_, m) = quant.methods(&[method], seed.unwrap_or(0))?.remove(0);
            let t = embt::load(input)?;
            let q = quantize_table(&t, m, quant.bits, quant.aux.into())?;
            embq::save(path, &EmbqTable::try_from(&q)?)?;
            let report = scheme::report(method.label(), &t, &q, Aggregation::Flattened)?;
            writeln!(out, "{}", QuantReport::CSV_HEADER)?;
            writeln!(out, "{}", report.csv_row())?;
        }
        Command::Evaluate { orig, quant, agg } => {
            let t = embt::load(orig)?;
            let q = embq::load(quant)?;
            if (q.rows(), q.dim()) != (t.rows(), t.dim()) {
                return Err(CliError::Data(Error::Core(rowquant_core::Error::ShapeMismatch {
                    expected: (t.rows(), t.dim()),
                    found: (q.rows(), q.dim()),
                })));
            }
            let deq = q.dequantize();
            let size = q.size()?;
            let aggs = match agg {
                Some(a) => vec![a.into()],
                None => vec![Aggregation::Flattened, Aggregation::RowMean],
            };
            writeln!(out, "method,d,agg,loss,bytes,percent")?;
            for a in aggs {
                let loss = table_normalized_l2(&t, &deq, a)?;
                writeln!(
                    out,
                    "{},{},{},{:.8},{},{:.2}",
                    q.scheme().name(),
                    t.dim(),
                    a.name(),
                    loss,
                    size.bytes_quant,
                    size.percent_of_fp32
                )?;
            }
        }
        Command::SweepDim {
            dims,
            rows,
            data,
            seed,
            trials,
            methods,
            quant,
        } => {
            let cfg = SweepConfig {
                dims: usize_list(&dims),
                rows: rows as usize,
                distribution: data.distribution(),
                seed,
                trials: trials as usize,
                nbits: quant.bits,
                aux: quant.aux.into(),
                methods: quant.methods(&methods, seed)?,
            };
            write!(out, "{}", dim_csv(&sweep_dim(&cfg)?))?;
        }
        Command::SweepTime {
            dims,
            rows,
            data,
            seed,
            repeats,
            methods,
            quant,
        } => {
            let cfg = SweepConfig {
                dims: usize_list(&dims),
                rows: rows as usize,
                distribution: data.distribution(),
                seed,
                trials: 1,
                nbits: quant.bits,
                aux: quant.aux.into(),
                methods: quant.methods(&methods, seed)?,
            };
            write!(out, "{}", time_csv(&sweep_time(&cfg, repeats as usize)?))?;
        }
        Command::HistDump {
            input,
            row,
            methods,
            hist_bins,
            seed,
            quant,
        } => {
            let ms = quant.methods(&methods, seed)?;
            let t = embt::load(input)?;
            let rows = hist_dump(&t, row, &ms, hist_bins as usize, quant.bits, quant.aux.into())?;
            write!(out, "{}", hist_csv(&rows))?;
        }
        Command::Bench {
            dtypes,
            dims,
            rows,
            batch,
            mean_len,
            mode,
            repeats,
            aux,
            seed,
        } => {
            let mut reports = Vec::new();
            for &d in &dims {
                for &dt in &dtypes {
                    reports.push(bench_sls(&BenchConfig {
                        dtype: match dt {
                            Dtype::Fp32 => DataType::Fp32,
                            Dtype::Int8 => DataType::Int8,
                            Dtype::Int4 => DataType::Int4,
                        },
                        dim: d as usize,
                        rows: rows as usize,
                        batch: batch as usize,
                        mean_len: mean_len as usize,
                        mode: match mode {
                            Mode::CacheResident => CacheMode::Resident,
                            Mode::CacheFlushed => CacheMode::Flushed,
                        },
                        repeats: repeats as usize,
                        aux: aux.into(),
                        seed,
                    })?);
                }
            }
            write!(out, "{}", bench_csv(&reports))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn arguments_are_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["rowquant", "--version"], &mut out, &mut err), 0);
        assert_eq!(run(["rowquant", "gen"], &mut out, &mut err), 1);
        let missing = ["rowquant", "hist-dump", "--in", "/nonexistent.embt", "--row", "0", "--methods", "asym"];
        assert_eq!(run(missing, &mut out, &mut err), 2);
    }
}
