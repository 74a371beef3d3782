//! Post-training row-wise quantization of embedding tables.
//!
//! The crate is `no_std` and needs only `alloc`. It covers:
//!
//! - [`tensor`]: dense tables, clipping ranges, seeded sampling and the
//!   squared-error objective.
//! - [`uniform`]: the affine 4/8-bit codec and the clipping-range searches
//!   (SYM, ASYM, TABLE, GSS, ACIQ, GREEDY, HIST-APPRX, HIST-BRUTE).
//! - [`codebook`]: 16-entry k-means codebooks per row, or per block of
//!   clustered rows.
//! - [`metrics`]: normalized l2 loss and storage accounting.
//! - [`pooling`]: the packed nibble row layout and a pooled-sum lookup kernel.
//! - [`scheme`]: one entry point that quantizes a table by any method.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod codebook;
pub mod error;
pub mod metrics;
pub mod pooling;
pub mod scheme;
pub mod tensor;
pub mod uniform;

pub use error::{Error, Result};
pub use tensor::{ClipRange, EmbeddingTable};
pub use scheme::{quantize_table, Method, QuantizedTable};
pub use uniform::AuxPrecision;
