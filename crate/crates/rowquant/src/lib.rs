//! File formats, parameter sweeps, a lookup benchmark and the `rowquant`
//! command line, built on [`rowquant_core`].

pub mod bench;
pub mod cli;
pub mod embq;
pub mod embt;
pub mod error;
pub mod methods;
pub mod sweep;
mod wire;

pub use error::{Error, Result};
