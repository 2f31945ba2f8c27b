//! Monte Carlo simulator for multi-tag monostatic backscatter links: channel
//! estimation at a multi-antenna reader, and max-min fair precoder/detector
//! design.

pub mod channel;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod numerics;
pub mod optimize;
pub mod trx;

pub use error::{Error, Result};
