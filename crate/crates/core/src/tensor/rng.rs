use alloc::vec::Vec;

use super::EmbeddingTable;
use crate::error::{Error, Result};

/// SplitMix64 generator.
///
/// Integer-only state transitions, so a given seed produces the same stream
/// on every platform. Floating-point transforms on top of it go through
/// `libm`, which is also platform independent.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1): the top 53 bits, offset by half
    /// an ulp so neither endpoint is reachable.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        // Lemire's multiply-shift; the bias is < n / 2^64 and irrelevant here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Gaussian { mean: f64, stddev: f64 },
    Laplacian { location: f64, scale: f64 },
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            Distribution::Gaussian { mean, stddev } => (mean, stddev),
            Distribution::Laplacian { location, scale } => (location, scale),
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("distribution parameters must be finite"));
        }
        if b < 0.0 {
            return Err(Error::InvalidArgument("distribution spread must be non-negative"));
        }
        Ok(())
    }
}

/// A distribution plus the seed that fixes its sample stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RngSpec {
    pub distribution: Distribution,
    pub seed: u64,
}

impl RngSpec {
    pub fn gaussian(mean: f64, stddev: f64, seed: u64) -> Self {
        Self {
            distribution: Distribution::Gaussian { mean, stddev },
            seed,
        }
    }

    pub fn laplacian(location: f64, scale: f64, seed: u64) -> Self {
        Self {
            distribution: Distribution::Laplacian { location, scale },
            seed,
        }
    }

    /// Draws `n` samples in stream order.
    pub fn sample(&self, n: usize) -> Result<Vec<f32>> {
        self.distribution.validate()?;
        let mut rng = SplitMix64::new(self.seed);
        let mut out = Vec::with_capacity(n);
        match self.distribution {
            Distribution::Gaussian { mean, stddev } => {
                // Box-Muller; both outputs of each pair are used.
                while out.len() < n {
                    let u1 = rng.next_open01();
                    let u2 = rng.next_open01();
                    let r = libm::sqrt(-2.0 * libm::log(u1));
                    let theta = 2.0 * core::f64::consts::PI * u2;
                    out.push((mean + stddev * r * libm::cos(theta)) as f32);
                    if out.len() < n {
                        out.push((mean + stddev * r * libm::sin(theta)) as f32);
                    }
                }
            }
            Distribution::Laplacian { location, scale } => {
                // Inverse CDF.
                for _ in 0..n {
                    let v = rng.next_open01() - 0.5;
                    let mag = -libm::log(1.0 - 2.0 * v.abs());
                    let x = if v < 0.0 {
                        location - scale * mag
                    } else {
                        location + scale * mag
                    };
                    out.push(x as f32);
                }
            }
        }
        Ok(out)
    }
}

/// Samples a `rows x dim` table, filled row-major from one stream.
pub fn sample_table(spec: &RngSpec, rows: usize, dim: usize) -> Result<EmbeddingTable> {
    if rows == 0 || dim == 0 {
        return Err(Error::InvalidArgument("rows and dim must be at least 1"));
    }
    let n = rows
        .checked_mul(dim)
        .ok_or(Error::InvalidArgument("table shape overflows usize"))?;
    EmbeddingTable::new(rows, dim, spec.sample(n)?)
}
