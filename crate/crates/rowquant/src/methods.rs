//! Method names as they appear on the command line and in CSV output.

use clap::ValueEnum;
use rowquant_core::uniform::{
    AciqPrior, ClipMethod, GREEDY_DEFAULT_BINS, GREEDY_DEFAULT_RATIO, GSS_DEFAULT_TOL,
    HIST_DEFAULT_BINS,
};
use rowquant_core::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum MethodName {
    Sym,
    Asym,
    Table,
    Gss,
    Greedy,
    /// GREEDY with the wider search setting b=1000, r=0.5.
    GreedyOpt,
    Aciq,
    HistApprx,
    HistBrute,
    Kmeans,
    KmeansCls,
}

impl MethodName {
    pub fn label(self) -> &'static str {
        match self {
            MethodName::Sym => "sym",
            MethodName::Asym => "asym",
            MethodName::Table => "table",
            MethodName::Gss => "gss",
            MethodName::Greedy => "greedy",
            MethodName::GreedyOpt => "greedy-opt",
            MethodName::Aciq => "aciq",
            MethodName::HistApprx => "hist-apprx",
            MethodName::HistBrute => "hist-brute",
            MethodName::Kmeans => "kmeans",
            MethodName::KmeansCls => "kmeans-cls",
        }
    }

    fn uses_bins(self) -> bool {
        matches!(
            self,
            MethodName::Greedy | MethodName::HistApprx | MethodName::HistBrute
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AciqDist {
    Laplace,
    Gaussian,
}

/// Optional hyperparameters; each applies only to some methods.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MethodOptions {
    pub bins: Option<usize>,
    pub ratio: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub aciq_dist: Option<AciqDist>,
    pub aciq_alpha: Option<f64>,
}

impl MethodOptions {
    /// Rejects options that no method in `names` would read.
    pub fn check_applicable(&self, names: &[MethodName]) -> Result<(), String> {
        let any = |f: fn(MethodName) -> bool| names.iter().any(|&m| f(m));
        let flag = |set: bool, ok: bool, msg: &str| {
            if set && !ok {
                Err(msg.to_string())
            } else {
                Ok(())
            }
        };
        flag(self.bins.is_some(), any(MethodName::uses_bins), "--b applies only to greedy, hist-apprx and hist-brute")?;
        flag(self.ratio.is_some(), any(|m| m == MethodName::Greedy), "--r applies only to greedy")?;
        flag(self.k.is_some(), any(|m| m == MethodName::KmeansCls), "--k applies only to kmeans-cls")?;
        flag(self.seed.is_some(), any(|m| m == MethodName::KmeansCls), "--seed applies only to kmeans-cls")?;
        flag(self.tol.is_some(), any(|m| m == MethodName::Gss), "--tol applies only to gss")?;
        flag(
            self.aciq_dist.is_some() || self.aciq_alpha.is_some(),
            any(|m| m == MethodName::Aciq),
            "--aciq-dist and --aciq-alpha apply only to aciq",
        )?;
        Ok(())
    }
}

/// Resolves `name` and `opts` into a core method, enforcing per-method
/// flag rules for bit width `nbits`.
pub fn build_method(name: MethodName, opts: &MethodOptions, nbits: u32) -> Result<Method, String> {
    let codebook = matches!(name, MethodName::Kmeans | MethodName::KmeansCls);
    if codebook && nbits != 4 {
        return Err(format!("{} supports only --bits 4", name.label()));
    }
    Ok(match name {
        MethodName::Sym => Method::Clip(ClipMethod::Sym),
        MethodName::Asym => Method::Clip(ClipMethod::Asym),
        MethodName::Table => Method::Clip(ClipMethod::Table),
        MethodName::Gss => Method::Clip(ClipMethod::Gss {
            tol: opts.tol.unwrap_or(GSS_DEFAULT_TOL),
        }),
        MethodName::Greedy => Method::Clip(ClipMethod::Greedy {
            bins: opts.bins.unwrap_or(GREEDY_DEFAULT_BINS),
            ratio: opts.ratio.unwrap_or(GREEDY_DEFAULT_RATIO),
        }),
        MethodName::GreedyOpt => Method::Clip(ClipMethod::Greedy {
            bins: 1000,
            ratio: 0.5,
        }),
        MethodName::Aciq => {
            if nbits != 4 {
                return Err("aciq is calibrated for --bits 4 only".into());
            }
            let prior = match (opts.aciq_dist.unwrap_or(AciqDist::Laplace), opts.aciq_alpha) {
                (AciqDist::Laplace, None) => AciqPrior::Laplace,
                (AciqDist::Laplace, Some(_)) => {
                    return Err("--aciq-alpha applies only to --aciq-dist gaussian".into())
                }
                (AciqDist::Gaussian, Some(m)) => AciqPrior::Gaussian { sigma_multiplier: m },
                (AciqDist::Gaussian, None) => {
                    return Err("--aciq-dist gaussian requires --aciq-alpha".into())
                }
            };
            Method::Clip(ClipMethod::Aciq(prior))
        }
        MethodName::HistApprx => Method::Clip(ClipMethod::HistApprx {
            bins: opts.bins.unwrap_or(HIST_DEFAULT_BINS),
        }),
        MethodName::HistBrute => Method::Clip(ClipMethod::HistBrute {
            bins: opts.bins.unwrap_or(HIST_DEFAULT_BINS),
        }),
        MethodName::Kmeans => Method::Kmeans,
        MethodName::KmeansCls => {
            let k = opts.k.ok_or("kmeans-cls requires --k")?;
            if !k.is_power_of_two() {
                return Err("--k must be a power of two".into());
            }
            Method::KmeansCls {
                k,
                seed: opts.seed.unwrap_or(0),
            }
        }
    })
}
