//! Tier-1 clustering: k-means over whole rows.

use alloc::vec;
use alloc::vec::Vec;

use super::KMeansOptions;
use crate::error::{Error, Result};
use crate::tensor::{min_max, EmbeddingTable, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct RowClusters {
    pub k: usize,
    pub dim: usize,
    pub assignments: Vec<usize>,
    /// `k x dim`, row-major.
    pub centroids: Vec<f64>,
    pub sse: f64,
}

impl RowClusters {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }
}

fn sq_dist(row: &[f32], center: &[f64]) -> f64 {
    row.iter()
        .zip(center)
        .map(|(&a, &b)| {
            let e = a as f64 - b;
            e * e
        })
        .sum()
}

fn nearest_centroid(row: &[f32], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding. When every remaining row already coincides with a
/// chosen center the next center is the lowest-index row not yet chosen.
fn seed_centroids(table: &EmbeddingTable, k: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let n = table.rows();
    let dim = table.dim();
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.next_below(n as u64) as usize;
    chosen[first] = true;
    centroids.extend(table.row(first).unwrap().iter().map(|&v| v as f64));
    let mut dist: Vec<f64> = table
        .iter_rows()
        .map(|r| sq_dist(r, &centroids[..dim]))
        .collect();

    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_open01() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc >= target {
                    break;
                }
            }
            pick.unwrap()
        } else {
            chosen.iter().position(|&c| !c).unwrap()
        };
        chosen[pick] = true;
        let start = centroids.len();
        centroids.extend(table.row(pick).unwrap().iter().map(|&v| v as f64));
        for (d, r) in dist.iter_mut().zip(table.iter_rows()) {
            *d = d.min(sq_dist(r, &centroids[start..]));
        }
    }
    centroids
}

/// Clusters the rows of `table` into `k` groups under Euclidean distance.
///
/// Seeding is k-means++ driven by `seed`; Lloyd iterations follow with
/// lowest-index tie breaks, stale centers for empty clusters and sums taken
/// in row order, so the result depends only on `(table, k, seed, opts)`.
pub fn cluster_rows(
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<RowClusters> {
    let n = table.rows();
    let dim = table.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument("cluster count must satisfy 1 <= K <= N"));
    }
    let mut rng = SplitMix64::new(seed);
    let mut centroids = seed_centroids(table, k, &mut rng);
    let (lo, hi) = min_max(table.data());
    let threshold = opts.tol * (hi as f64 - lo as f64);

    let mut assignments = vec![0usize; n];
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for _ in 0..opts.max_iter {
        for (a, row) in assignments.iter_mut().zip(table.iter_rows()) {
            *a = nearest_centroid(row, &centroids, dim).0;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (&a, row) in assignments.iter().zip(table.iter_rows()) {
            counts[a] += 1;
            for (s, &v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row) {
                *s += v as f64;
            }
        }
        let mut movement = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = counts[c] as f64;
            let mut shift = 0.0;
            for (old, &s) in centroids[c * dim..(c + 1) * dim]
                .iter_mut()
                .zip(&sums[c * dim..(c + 1) * dim])
            {
                let updated = s / inv;
                shift += (updated - *old) * (updated - *old);
                *old = updated;
            }
            movement = movement.max(libm::sqrt(shift));
        }
        if movement <= threshold {
            break;
        }
    }
    let mut sse = 0.0;
    for (a, row) in assignments.iter_mut().zip(table.iter_rows()) {
        let (c, d) = nearest_centroid(row, &centroids, dim);
        *a = c;
        sse += d;
    }
    Ok(RowClusters {
        k,
        dim,
        assignments,
        centroids,
        sse,
    })
}
