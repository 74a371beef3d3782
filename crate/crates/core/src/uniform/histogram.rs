//! Histogram-based range selection.
//!
//! The input is summarized as a `b`-bin histogram with uniform density inside
//! each bin. A candidate range is a window of consecutive source bins; its
//! cost is the L2 error of mapping every source bin (clamped to the window)
//! onto the `2^n` evenly spaced destination levels spanning the window.
//!
//! [`hist_brute_search`] scores every window (`O(b^2)` windows at `O(b)` each).
//! [`hist_apprx_search`] shrinks the window one bin at a time from whichever
//! end is cheaper, scoring `O(b)` windows.

use alloc::vec;
use alloc::vec::Vec;

use super::method::SearchStats;
use crate::error::{Error, Result};
use crate::tensor::{min_max, ClipRange};

pub const HIST_DEFAULT_BINS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f32,
    pub hi: f32,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn nbins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi as f64 - self.lo as f64) / self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins `x` over `[min x, max x]`. Bins are half-open except the last, which
/// is closed. A constant input puts all mass in bin 0.
pub fn build_histogram(x: &[f32], bins: usize) -> Result<Histogram> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("input must be non-empty"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1"));
    }
    let (lo, hi) = min_max(x);
    let mut counts = vec![0u64; bins];
    let width = (hi as f64 - lo as f64) / bins as f64;
    for &v in x {
        let idx = if width > 0.0 {
            let f = libm::floor((v as f64 - lo as f64) / width);
            (f.max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram { lo, hi, counts })
}

/// `density * (end^3 - begin^3) / 3`: the integral of `t^2` over
/// `[begin, end]` under uniform `density`.
#[inline]
pub fn bin_l2_norm(delta_begin: f64, delta_end: f64, density: f64) -> f64 {
    density * (delta_end * delta_end * delta_end - delta_begin * delta_begin * delta_begin) / 3.0
}

/// Approximated L2 error of quantizing the whole histogram with levels
/// spanning source bins `[start, start + nselected)`.
///
/// Every source bin is visited; `bin_visits` is incremented once per bin.
pub fn window_norm(
    hist: &Histogram,
    start: usize,
    nselected: usize,
    nbits: u32,
    bin_visits: &mut u64,
) -> f64 {
    let dst_nbins = (1usize << nbits) as f64;
    let bin_width = hist.bin_width();
    let dst_width = bin_width * nselected as f64 / (dst_nbins - 1.0);
    let half = dst_width / 2.0;
    let dst_bin = |offset: f64| libm::floor((offset + half) / dst_width).max(0.0).min(dst_nbins - 1.0);

    let mut norm = 0.0;
    *bin_visits += hist.counts.len() as u64;
    for (src, &count) in hist.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let begin = (src as f64 - start as f64) * bin_width;
        let end = begin + bin_width;
        let first = dst_bin(begin);
        let last = dst_bin(end);
        let density = count as f64 / bin_width;
        let first_center = first * dst_width;
        if first == last {
            norm += bin_l2_norm(begin - first_center, end - first_center, density);
        } else {
            norm += bin_l2_norm(begin - first_center, half, density);
            norm += (last - first - 1.0) * bin_l2_norm(-half, half, density);
            norm += bin_l2_norm(-half, end - last * dst_width, density);
        }
    }
    norm
}

/// Outcome of a histogram search, including the selected window and the
/// work counters.
#[derive(Debug, Clone, PartialEq)]
pub struct HistSearch {
    pub range: ClipRange,
    pub start_bin: usize,
    pub nbins_selected: usize,
    pub norm: f64,
    pub stats: SearchStats,
}

fn window_range(hist: &Histogram, start: usize, nselected: usize) -> ClipRange {
    let w = hist.bin_width();
    let lo = hist.lo as f64;
    let xmin = ((lo + w * start as f64) as f32).max(hist.lo);
    let xmax = ((lo + w * (start + nselected) as f64) as f32).min(hist.hi).max(xmin);
    ClipRange { xmin, xmax }
}

fn prepare(x: &[f32], bins: usize, nbits: u32) -> Result<core::result::Result<Histogram, HistSearch>> {
    super::check_nbits(nbits)?;
    let hist = build_histogram(x, bins)?;
    if hist.lo == hist.hi {
        return Ok(Err(HistSearch {
            range: ClipRange {
                xmin: hist.lo,
                xmax: hist.hi,
            },
            start_bin: 0,
            nbins_selected: bins,
            norm: 0.0,
            stats: SearchStats::default(),
        }));
    }
    Ok(Ok(hist))
}

/// Exhaustive search over every window of consecutive bins. Ties keep the
/// first window found (fewest bins, then leftmost).
pub fn hist_brute_search(x: &[f32], bins: usize, nbits: u32) -> Result<HistSearch> {
    let hist = match prepare(x, bins, nbits)? {
        Ok(h) => h,
        Err(done) => return Ok(done),
    };
    let mut stats = SearchStats::default();
    let (mut best_norm, mut best_start, mut best_nsel) = (f64::INFINITY, 0usize, bins);
    for nsel in 1..=bins {
        for start in 0..=(bins - nsel) {
            stats.loss_evals += 1;
            let norm = window_norm(&hist, start, nsel, nbits, &mut stats.bin_visits);
            if norm < best_norm {
                best_norm = norm;
                best_start = start;
                best_nsel = nsel;
            }
        }
    }
    Ok(HistSearch {
        range: window_range(&hist, best_start, best_nsel),
        start_bin: best_start,
        nbins_selected: best_nsel,
        norm: best_norm,
        stats,
    })
}

/// Linear greedy variant: from the full window, repeatedly drop the end bin
/// whose removal gives the lower norm, keeping the best window seen.
pub fn hist_apprx_search(x: &[f32], bins: usize, nbits: u32) -> Result<HistSearch> {
    let hist = match prepare(x, bins, nbits)? {
        Ok(h) => h,
        Err(done) => return Ok(done),
    };
    let mut stats = SearchStats::default();
    let (mut start, mut nsel) = (0usize, bins);
    stats.loss_evals += 1;
    let mut best_norm = window_norm(&hist, start, nsel, nbits, &mut stats.bin_visits);
    let (mut best_start, mut best_nsel) = (start, nsel);
    while nsel > 1 {
        stats.loss_evals += 2;
        let drop_left = window_norm(&hist, start + 1, nsel - 1, nbits, &mut stats.bin_visits);
        let drop_right = window_norm(&hist, start, nsel - 1, nbits, &mut stats.bin_visits);
        let norm = if drop_left < drop_right {
            start += 1;
            drop_left
        } else {
            drop_right
        };
        nsel -= 1;
        if norm < best_norm {
            best_norm = norm;
            best_start = start;
            best_nsel = nsel;
        }
    }
    Ok(HistSearch {
        range: window_range(&hist, best_start, best_nsel),
        start_bin: best_start,
        nbins_selected: best_nsel,
        norm: best_norm,
        stats,
    })
}

pub fn clip_range_hist_brute(x: &[f32], bins: usize) -> Result<ClipRange> {
    hist_brute_search(x, bins, 4).map(|s| s.range)
}

pub fn clip_range_hist_apprx(x: &[f32], bins: usize) -> Result<ClipRange> {
    hist_apprx_search(x, bins, 4).map(|s| s.range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{quant_mse, RngSpec};

    #[test]
    fn histogram_examples() {
        assert_eq!(build_histogram(&[0.0, 1.0], 2).unwrap().counts, vec![1, 1]);
        assert_eq!(build_histogram(&[0.0, 0.49, 0.51, 1.0], 2).unwrap().counts, vec![2, 2]);
        assert_eq!(build_histogram(&[5.0; 3], 4).unwrap().counts, vec![3, 0, 0, 0]);
        assert!(build_histogram(&[], 4).is_err());
        assert!(build_histogram(&[1.0], 0).is_err());
    }

    #[test]
    fn histogram_mass_is_conserved() {
        let x = RngSpec::gaussian(0.0, 1.0, 1).sample(1000).unwrap();
        let h = build_histogram(&x, 37).unwrap();
        assert_eq!(h.total(), 1000);
        assert_eq!(h.nbins(), 37);
    }

    #[test]
    fn l2_norm_closed_form() {
        let w = 0.3;
        let rho = 2.0;
        assert!((bin_l2_norm(-w / 2.0, w / 2.0, rho) - rho * w * w * w / 12.0).abs() < 1e-15);
        assert_eq!(bin_l2_norm(0.0, 0.0, 5.0), 0.0);
        assert_eq!(bin_l2_norm(0.0, 1.0, 3.0), 1.0);
    }

    #[test]
    fn constant_input() {
        let r = clip_range_hist_brute(&[2.0; 4], 200).unwrap();
        assert_eq!(r, ClipRange::new(2.0, 2.0).unwrap());
        let r = clip_range_hist_apprx(&[2.0; 4], 200).unwrap();
        assert_eq!(r, ClipRange::new(2.0, 2.0).unwrap());
    }

    #[test]
    fn brute_force_clips_a_far_outlier() {
        // 10k values over the first 16 of 200 bins and one far outlier.
        let mut rng = crate::tensor::SplitMix64::new(3);
        let mut x: Vec<f32> = (0..10_000).map(|_| (rng.next_open01() * 16.0) as f32).collect();
        x.push(200.0);
        let s = hist_brute_search(&x, 200, 4).unwrap();
        assert!(s.range.xmax < 100.0, "{:?}", s.range);
        let hist = build_histogram(&x, 200).unwrap();
        assert!(s.norm < window_norm(&hist, 0, 200, 4, &mut 0));
    }

    #[test]
    fn apprx_keeps_full_window_on_exact_grid() {
        let x: Vec<f32> = (0..16).map(|i| i as f32).collect();
        let s = hist_apprx_search(&x, 16, 4).unwrap();
        assert_eq!(s.range, ClipRange::new(0.0, 15.0).unwrap());
    }

    #[test]
    fn brute_never_loses_to_apprx_on_its_own_objective() {
        for seed in 0..20 {
            let x = RngSpec::gaussian(0.0, 1.0, seed).sample(64).unwrap();
            let b = hist_brute_search(&x, 60, 4).unwrap();
            let a = hist_apprx_search(&x, 60, 4).unwrap();
            assert!(b.norm <= a.norm);
        }
    }

    #[test]
    fn work_counters() {
        let x = RngSpec::gaussian(0.0, 1.0, 5).sample(64).unwrap();
        let b = 40u64;
        let s = hist_brute_search(&x, b as usize, 4).unwrap();
        assert_eq!(s.stats.loss_evals, b * (b + 1) / 2);
        assert_eq!(s.stats.bin_visits, b * b * (b + 1) / 2);
        let a = hist_apprx_search(&x, b as usize, 4).unwrap();
        assert_eq!(a.stats.loss_evals, 2 * b - 1);
    }

    #[test]
    fn ranges_stay_inside_the_data() {
        for seed in 0..10 {
            let x = RngSpec::laplacian(0.0, 1.0, seed).sample(64).unwrap();
            let (lo, hi) = min_max(&x);
            for r in [clip_range_hist_brute(&x, 50).unwrap(), clip_range_hist_apprx(&x, 50).unwrap()] {
                assert!(lo <= r.xmin && r.xmin <= r.xmax && r.xmax <= hi);
                assert!(quant_mse(&x, r, 4).is_finite());
            }
        }
    }
}
