//! Uniform (affine) row quantization and the clipping-range searches that
//! feed it.
//!
//! A value `x` clipped to `[xmin, xmax]` is stored as
//! `code = round((x - bias) / scale)` with `scale = (xmax - xmin) / (2^n - 1)`
//! and `bias = xmin`, and reconstructed as `scale * code + bias`. Rounding is
//! half away from zero. A zero-width range stores `scale = 0`, all codes 0,
//! and reconstructs every element as `bias`.

mod greedy;
mod gss;
mod histogram;
mod method;
mod range;

pub use greedy::{clip_range_greedy, greedy_search, GREEDY_DEFAULT_BINS, GREEDY_DEFAULT_RATIO};
pub use gss::{clip_range_gss, gss_search, GSS_DEFAULT_TOL};
pub use histogram::{
    bin_l2_norm, build_histogram, clip_range_hist_apprx, clip_range_hist_brute, hist_apprx_search,
    hist_brute_search, window_norm, HistSearch, Histogram, HIST_DEFAULT_BINS,
};
pub use method::{quantize_table_uniform, ClipMethod, SearchStats};
pub use range::{
    clip_range_aciq, clip_range_asym, clip_range_sym, clip_range_table, AciqPrior,
    ACIQ_LAPLACE_4BIT,
};

use alloc::vec::Vec;
use half::f16;

use crate::error::{Error, Result};
use crate::tensor::ClipRange;

/// Storage width of per-row scale/bias or codebook values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxPrecision {
    Fp32,
    Fp16,
}

impl AuxPrecision {
    pub fn bytes(self) -> usize {
        match self {
            AuxPrecision::Fp32 => 4,
            AuxPrecision::Fp16 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AuxPrecision::Fp32 => "fp32",
            AuxPrecision::Fp16 => "fp16",
        }
    }

    /// Rounds `v` to this precision (round-to-nearest-even for fp16).
    pub fn round(self, v: f32) -> Result<f32> {
        match self {
            AuxPrecision::Fp32 => Ok(v),
            AuxPrecision::Fp16 => {
                let h = f16::from_f32(v);
                if h.is_finite() {
                    Ok(h.to_f32())
                } else {
                    Err(Error::AuxOverflow(v))
                }
            }
        }
    }
}

pub(crate) fn check_nbits(nbits: u32) -> Result<()> {
    match nbits {
        4 | 8 => Ok(()),
        _ => Err(Error::InvalidArgument("nbits must be 4 or 8")),
    }
}

/// Scalar encoder/decoder for one clipping range.
#[derive(Debug, Clone, Copy)]
pub struct Codec {
    scale: f32,
    bias: f32,
    lo: f32,
    hi: f32,
    levels: f32,
}

impl Codec {
    /// fp32 scale and bias; `nbits` must be in 1..=8.
    pub fn new(range: ClipRange, nbits: u32) -> Self {
        let levels = ((1u32 << nbits) - 1) as f32;
        Self {
            scale: (range.xmax - range.xmin) / levels,
            bias: range.xmin,
            lo: range.xmin,
            hi: range.xmax,
            levels,
        }
    }

    /// Scale and bias rounded to `aux` before any code is computed, so
    /// encoding sees exactly the parameters decoding will.
    pub fn with_precision(range: ClipRange, nbits: u32, aux: AuxPrecision) -> Result<Self> {
        let mut codec = Self::new(range, nbits);
        codec.scale = aux.round(codec.scale)?;
        codec.bias = aux.round(codec.bias)?;
        Ok(codec)
    }

    /// Rebuilds a decoder from stored parameters.
    pub fn from_parts(scale: f32, bias: f32, nbits: u32) -> Self {
        let levels = ((1u32 << nbits) - 1) as f32;
        Self {
            scale,
            bias,
            lo: bias,
            hi: bias + scale * levels,
            levels,
        }
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn bias(&self) -> f32 {
        self.bias
    }

    #[inline]
    pub fn encode(&self, x: f32) -> u8 {
        if self.scale == 0.0 {
            return 0;
        }
        let c = x.max(self.lo).min(self.hi);
        libm::roundf((c - self.bias) / self.scale)
            .max(0.0)
            .min(self.levels) as u8
    }

    #[inline]
    pub fn decode(&self, code: u8) -> f32 {
        self.scale * code as f32 + self.bias
    }
}

/// One quantized row: unpacked codes plus its affine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformRowQuant {
    pub codes: Vec<u8>,
    pub scale: f32,
    pub bias: f32,
    pub nbits: u32,
}

impl UniformRowQuant {
    pub fn codec(&self) -> Codec {
        Codec::from_parts(self.scale, self.bias, self.nbits)
    }
}

/// Quantizes `x` against `range` with fp32 scale and bias.
pub fn quantize_uniform(x: &[f32], range: ClipRange, nbits: u32) -> Result<UniformRowQuant> {
    quantize_uniform_with(x, range, nbits, AuxPrecision::Fp32)
}

pub fn quantize_uniform_with(
    x: &[f32],
    range: ClipRange,
    nbits: u32,
    aux: AuxPrecision,
) -> Result<UniformRowQuant> {
    check_nbits(nbits)?;
    let codec = Codec::with_precision(range, nbits, aux)?;
    Ok(UniformRowQuant {
        codes: x.iter().map(|&v| codec.encode(v)).collect(),
        scale: codec.scale,
        bias: codec.bias,
        nbits,
    })
}

pub fn dequantize_uniform(q: &UniformRowQuant) -> Vec<f32> {
    let codec = q.codec();
    q.codes.iter().map(|&c| codec.decode(c)).collect()
}

/// A whole table quantized row by row with a shared bit width.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformQuantTable {
    pub rows: Vec<UniformRowQuant>,
    pub dim: usize,
    pub nbits: u32,
    pub aux: AuxPrecision,
    pub method: ClipMethod,
}

impl UniformQuantTable {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dequantize_row(&self, i: usize) -> Result<Vec<f32>> {
        self.rows
            .get(i)
            .map(dequantize_uniform)
            .ok_or(Error::OutOfRange {
                index: i,
                len: self.rows.len(),
            })
    }

    pub fn dequantize(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.rows.len() * self.dim);
        for r in &self.rows {
            let codec = r.codec();
            out.extend(r.codes.iter().map(|&c| codec.decode(c)));
        }
        out
    }
}
