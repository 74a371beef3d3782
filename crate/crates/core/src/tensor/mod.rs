//! Dense embedding tables, clipping ranges, seeded sampling and the
//! squared-error objective every range search minimizes.

mod objective;
mod rng;

pub use objective::quant_mse;
pub use rng::{sample_table, Distribution, RngSpec, SplitMix64};

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A dense `rows x dim` matrix of `f32` stored row-major.
///
/// All values are finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::InvalidArgument("table must have at least one row and column"));
        }
        let expected = rows
            .checked_mul(dim)
            .ok_or(Error::InvalidArgument("table shape overflows usize"))?;
        if data.len() != expected {
            return Err(Error::InvalidArgument("data length must equal rows * dim"));
        }
        if let Some(position) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        Ok(Self { rows, dim, data })
    }

    /// Builds a table from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.as_ref().len() != dim {
                return Err(Error::InvalidArgument("rows must share one dimension"));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Row `i` as a contiguous slice of length `dim`.
    pub fn row(&self, i: usize) -> Result<&[f32]> {
        if i >= self.rows {
            return Err(Error::OutOfRange {
                index: i,
                len: self.rows,
            });
        }
        Ok(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }
}

/// The `[xmin, xmax]` interval values are clamped into before uniform
/// quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipRange {
    pub xmin: f32,
    pub xmax: f32,
}

impl ClipRange {
    pub fn new(xmin: f32, xmax: f32) -> Result<Self> {
        if !xmin.is_finite() || !xmax.is_finite() {
            return Err(Error::InvalidArgument("clip range bounds must be finite"));
        }
        if xmin > xmax {
            return Err(Error::InvalidArgument("clip range requires xmin <= xmax"));
        }
        Ok(Self { xmin, xmax })
    }

    /// `(-t, t)`; the lower bound is the exact negation of the upper.
    pub fn symmetric(t: f32) -> Self {
        let t = t.abs();
        Self { xmin: -t, xmax: t }
    }

    pub fn width(&self) -> f32 {
        self.xmax - self.xmin
    }

    pub fn is_degenerate(&self) -> bool {
        self.xmin == self.xmax
    }
}

/// Min and max of a non-empty slice.
pub(crate) fn min_max(x: &[f32]) -> (f32, f32) {
    x.iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_by_three() -> EmbeddingTable {
        EmbeddingTable::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn row_views_follow_row_major_layout() {
        let t = two_by_three();
        assert_eq!(t.row(0).unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.row(1).unwrap(), &[4.0, 5.0, 6.0]);
        assert_eq!(t.row(2), Err(Error::OutOfRange { index: 2, len: 2 }));
    }

    #[test]
    fn rejects_bad_shapes_and_non_finite_values() {
        assert!(EmbeddingTable::new(0, 3, vec![]).is_err());
        assert!(EmbeddingTable::new(2, 2, vec![1.0; 3]).is_err());
        assert_eq!(
            EmbeddingTable::new(1, 3, vec![0.0, f32::NAN, 1.0]),
            Err(Error::NonFinite { position: 1 })
        );
        assert_eq!(
            EmbeddingTable::new(1, 2, vec![0.0, f32::INFINITY]),
            Err(Error::NonFinite { position: 1 })
        );
    }

    #[test]
    fn clip_range_validation() {
        assert!(ClipRange::new(1.0, 0.0).is_err());
        assert!(ClipRange::new(f32::NEG_INFINITY, 0.0).is_err());
        let r = ClipRange::symmetric(-3.0);
        assert_eq!((r.xmin, r.xmax), (-3.0, 3.0));
        assert_eq!(r.xmin.to_bits(), (-r.xmax).to_bits());
    }
}
