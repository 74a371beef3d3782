//! Closed-form clipping ranges: SYM, ASYM, TABLE and ACIQ.

use crate::error::{Error, Result};
use crate::tensor::{min_max, ClipRange, EmbeddingTable};

/// Laplace clipping multiplier for 4-bit quantization: `alpha = 5.03 * E|X - E(X)|`.
pub const ACIQ_LAPLACE_4BIT: f64 = 5.03;

fn non_empty(x: &[f32]) -> Result<()> {
    if x.is_empty() {
        Err(Error::InvalidArgument("input must be non-empty"))
    } else {
        Ok(())
    }
}

/// `(-max|x|, max|x|)`.
pub fn clip_range_sym(x: &[f32]) -> Result<ClipRange> {
    non_empty(x)?;
    let t = x.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    Ok(ClipRange::symmetric(t))
}

/// `(min x, max x)`.
pub fn clip_range_asym(x: &[f32]) -> Result<ClipRange> {
    non_empty(x)?;
    let (lo, hi) = min_max(x);
    ClipRange::new(lo, hi)
}

/// One range over every value in the table, shared by all rows.
pub fn clip_range_table(t: &EmbeddingTable) -> ClipRange {
    let (lo, hi) = min_max(t.data());
    ClipRange { xmin: lo, xmax: hi }
}

/// Distribution assumed by ACIQ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AciqPrior {
    /// `alpha = 5.03 * mean|x - mean(x)|`.
    Laplace,
    /// `alpha = sigma_multiplier * std(x)`. No default multiplier is
    /// provided; the caller must supply one.
    Gaussian { sigma_multiplier: f64 },
}

/// `(mean - alpha, mean + alpha)`; falls back to ASYM when `alpha` is 0.
pub fn clip_range_aciq(x: &[f32], prior: AciqPrior) -> Result<ClipRange> {
    non_empty(x)?;
    let n = x.len() as f64;
    let mean = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let alpha = match prior {
        AciqPrior::Laplace => {
            ACIQ_LAPLACE_4BIT * x.iter().map(|&v| (v as f64 - mean).abs()).sum::<f64>() / n
        }
        AciqPrior::Gaussian { sigma_multiplier } => {
            if !(sigma_multiplier.is_finite() && sigma_multiplier > 0.0) {
                return Err(Error::InvalidArgument(
                    "gaussian ACIQ needs a positive finite sigma multiplier",
                ));
            }
            let var = x.iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n;
            sigma_multiplier * libm::sqrt(var)
        }
    };
    if alpha == 0.0 {
        return clip_range_asym(x);
    }
    ClipRange::new((mean - alpha) as f32, (mean + alpha) as f32)
}
