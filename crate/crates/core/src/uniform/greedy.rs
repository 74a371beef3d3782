//! Greedy asymmetric range search.
//!
//! Starting from `[min x, max x]`, each step tries shrinking the range by one
//! `stepsize = (max - min) / b` from the left and from the right, moves to the
//! cheaper side, and remembers the best range visited. The walk stops once
//! the remaining width drops to `(1 - r)` of the original, so it takes about
//! `b * r` steps and `2 * b * r + 1` loss evaluations.

use super::method::SearchStats;
use crate::error::{Error, Result};
use crate::tensor::{min_max, quant_mse, ClipRange};

pub const GREEDY_DEFAULT_BINS: usize = 200;
pub const GREEDY_DEFAULT_RATIO: f64 = 0.16;

pub fn clip_range_greedy(x: &[f32], nbits: u32, bins: usize, ratio: f64) -> Result<ClipRange> {
    greedy_search(x, nbits, bins, ratio).map(|(r, _)| r)
}

/// Range whose bounds sit `left` steps above the minimum and `right` steps
/// below the maximum. Endpoints are computed from step counts rather than
/// accumulated, so every visited range lies exactly on the step lattice.
pub(crate) fn lattice_range(lo: f32, hi: f32, step: f64, left: usize, right: usize) -> ClipRange {
    let xmin = (lo as f64 + left as f64 * step) as f32;
    let xmax = (hi as f64 - right as f64 * step) as f32;
    ClipRange {
        xmin,
        xmax: xmax.max(xmin),
    }
}

pub fn greedy_search(
    x: &[f32],
    nbits: u32,
    bins: usize,
    ratio: f64,
) -> Result<(ClipRange, SearchStats)> {
    super::check_nbits(nbits)?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("input must be non-empty"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1"));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument("ratio must lie in (0, 1]"));
    }
    let (lo, hi) = min_max(x);
    let mut stats = SearchStats::default();
    if lo == hi {
        return Ok((ClipRange { xmin: lo, xmax: hi }, stats));
    }

    let b = bins as f64;
    let step = (hi as f64 - lo as f64) / b;
    let min_steps = b * (1.0 - ratio) * step;
    let mut loss_at = |left: usize, right: usize| {
        stats.loss_evals += 1;
        quant_mse(x, lattice_range(lo, hi, step, left, right), nbits)
    };

    let mut best_loss = loss_at(0, 0);
    let mut best = (0usize, 0usize);
    let (mut left, mut right) = (0usize, 0usize);
    while lo as f64 + left as f64 * step + min_steps < hi as f64 - right as f64 * step {
        let loss_l = loss_at(left + 1, right);
        let loss_r = loss_at(left, right + 1);
        // The range actually evaluated is recorded as a pair so the returned
        // loss is one that was measured.
        if loss_l < loss_r {
            left += 1;
            if loss_l < best_loss {
                best_loss = loss_l;
                best = (left, right);
            }
        } else {
            right += 1;
            if loss_r < best_loss {
                best_loss = loss_r;
                best = (left, right);
            }
        }
    }
    Ok((lattice_range(lo, hi, step, best.0, best.1), stats))
}
