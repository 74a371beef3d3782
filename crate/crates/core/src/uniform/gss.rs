//! Symmetric threshold search by golden-section search.

use super::method::SearchStats;
use crate::error::{Error, Result};
use crate::tensor::{quant_mse, ClipRange};

/// Default bracket tolerance, relative to `max|x|`.
pub const GSS_DEFAULT_TOL: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub fn clip_range_gss(x: &[f32], nbits: u32, tol: f64) -> Result<ClipRange> {
    gss_search(x, nbits, tol).map(|(r, _)| r)
}

/// Minimizes `t -> quant_mse(x, (-t, t))` over `(0, max|x|]`.
///
/// The objective is not unimodal in general, so the result is the best
/// point evaluated anywhere on the trajectory, seeded with the unclipped
/// threshold `max|x|`. It therefore never loses to SYM.
pub fn gss_search(x: &[f32], nbits: u32, tol: f64) -> Result<(ClipRange, SearchStats)> {
    super::check_nbits(nbits)?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("input must be non-empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let t_max = x.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let mut stats = SearchStats::default();
    if t_max == 0.0 {
        return Ok((ClipRange::symmetric(0.0), stats));
    }

    let mut eval = |t: f64| {
        stats.loss_evals += 1;
        let t = t as f32;
        (t, quant_mse(x, ClipRange::symmetric(t), nbits))
    };

    let (mut best_t, mut best_loss) = eval(t_max as f64);
    let mut consider = |(t, loss): (f32, f64)| {
        if loss < best_loss {
            best_t = t;
            best_loss = loss;
        }
        loss
    };

    let width_stop = tol * t_max as f64;
    let (mut a, mut b) = (0.0f64, t_max as f64);
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = consider(eval(c));
    let mut fd = consider(eval(d));
    while b - a > width_stop {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = consider(eval(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = consider(eval(d));
        }
    }
    Ok((ClipRange::symmetric(best_t), stats))
}
