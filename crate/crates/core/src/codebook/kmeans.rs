use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::min_max;

/// Lloyd stopping rules shared by scalar and row clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no center moves more than `tol * (max - min)` of the data.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub sse: f64,
    pub iterations: usize,
}

/// Index of the nearest center; ties go to the lower index.
#[inline]
pub(crate) fn nearest(centers: &[f64], v: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &c) in centers.iter().enumerate() {
        let d = (v - c) * (v - c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn assign(values: &[f32], centers: &[f64], assignments: &mut [usize]) -> f64 {
    let mut sse = 0.0;
    for (a, &v) in assignments.iter_mut().zip(values) {
        let v = v as f64;
        *a = nearest(centers, v);
        let e = v - centers[*a];
        sse += e * e;
    }
    sse
}

/// Scalar Lloyd iterations from `init`.
///
/// Empty clusters keep their previous center. `observer` is called with
/// `(iteration, sse)` after each assignment step; the SSE it sees never
/// increases.
///
/// When `values` has at most `init.len()` distinct entries the optimum is
/// known: one center per distinct value (sorted), padded with copies of the
/// largest. That case is returned directly with zero SSE.
pub fn kmeans_1d(
    values: &[f32],
    init: &[f64],
    opts: KMeansOptions,
    mut observer: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<KMeans1d> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("kmeans input must be non-empty"));
    }
    if init.is_empty() {
        return Err(Error::InvalidArgument("kmeans needs at least one center"));
    }
    let k = init.len();

    let mut distinct: Vec<f32> = values.to_vec();
    distinct.sort_by(f32::total_cmp);
    distinct.dedup();
    if distinct.len() <= k {
        let mut centers: Vec<f64> = distinct.iter().map(|&v| v as f64).collect();
        let last = *centers.last().unwrap();
        centers.resize(k, last);
        let mut assignments = vec![0; values.len()];
        let sse = assign(values, &centers, &mut assignments);
        if let Some(obs) = observer.as_mut() {
            obs(0, sse);
        }
        return Ok(KMeans1d {
            centers,
            assignments,
            sse,
            iterations: 0,
        });
    }

    let (lo, hi) = min_max(values);
    let threshold = opts.tol * (hi as f64 - lo as f64);
    let mut centers = init.to_vec();
    let mut assignments = vec![0; values.len()];
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let sse = assign(values, &centers, &mut assignments);
        if let Some(obs) = observer.as_mut() {
            obs(iterations, sse);
        }
        iterations += 1;

        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (&a, &v) in assignments.iter().zip(values) {
            sums[a] += v as f64;
            counts[a] += 1;
        }
        let mut movement = 0.0f64;
        for ((c, &s), &n) in centers.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                let updated = s / n as f64;
                movement = movement.max((updated - *c).abs());
                *c = updated;
            }
        }
        if movement <= threshold {
            break;
        }
    }
    let sse = assign(values, &centers, &mut assignments);
    if let Some(obs) = observer.as_mut() {
        obs(iterations, sse);
    }
    Ok(KMeans1d {
        centers,
        assignments,
        sse,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RngSpec;
    use std::cell::RefCell;

    #[test]
    fn grid_is_a_fixed_point() {
        let grid: Vec<f64> = (0..16).map(|i| -1.0 + i as f64 * 0.125).collect();
        let values: Vec<f32> = grid.iter().map(|&g| g as f32).collect();
        let km = kmeans_1d(&values, &grid, KMeansOptions::default(), None).unwrap();
        assert_eq!(km.centers, grid);
        assert_eq!(km.sse, 0.0);
    }

    #[test]
    fn two_obvious_clusters() {
        let km = kmeans_1d(&[0.0, 0.1, 10.0, 10.1], &[0.0, 10.0], KMeansOptions::default(), None)
            .unwrap();
        assert!((km.centers[0] - 0.05).abs() < 1e-6);
        assert!((km.centers[1] - 10.05).abs() < 1e-6);
        assert_eq!(km.assignments, vec![0, 0, 1, 1]);
    }

    #[test]
    fn few_distinct_values_reconstruct_exactly() {
        // Nearest-grid initialization would merge 0.0 and 0.01 here.
        let values = [0.0f32, 0.01, 15.0, 15.0, 7.3];
        let init: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let km = kmeans_1d(&values, &init, KMeansOptions::default(), None).unwrap();
        assert_eq!(km.sse, 0.0);
        for (&v, &a) in values.iter().zip(&km.assignments) {
            assert_eq!(km.centers[a], v as f64);
        }
    }

    #[test]
    fn sse_never_increases() {
        let x = RngSpec::gaussian(0.0, 1.0, 21).sample(500).unwrap();
        let init: Vec<f64> = (0..16).map(|i| -3.0 + 0.4 * i as f64).collect();
        let trace = RefCell::new(Vec::new());
        let mut obs = |_: usize, sse: f64| trace.borrow_mut().push(sse);
        let km = kmeans_1d(&x, &init, KMeansOptions::default(), Some(&mut obs)).unwrap();
        let trace = trace.into_inner();
        assert!(trace.len() >= 3);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        assert_eq!(*trace.last().unwrap(), km.sse);
    }

    #[test]
    fn empty_cluster_keeps_stale_center() {
        let km = kmeans_1d(&[0.0, 1.0, 2.0], &[0.0, 1.0, 50.0], KMeansOptions::default(), None);
        // Three distinct values, three centers: exact path.
        assert_eq!(km.unwrap().sse, 0.0);
        let values = [0.0f32, 1.0, 2.0, 3.0];
        let km = kmeans_1d(&values, &[0.0, 3.0, 50.0], KMeansOptions::default(), None).unwrap();
        assert_eq!(km.centers[2], 50.0);
    }

    #[test]
    fn nearest_breaks_ties_low() {
        assert_eq!(nearest(&[0.0, 2.0], 1.0), 0);
        assert_eq!(nearest(&[1.0, 1.0], 1.0), 0);
    }
}
