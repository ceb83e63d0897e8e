//! Numerical core of the frequency-principle laboratory.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod freq;
pub mod mscale;
pub mod nn;
pub mod ntk;
pub mod pde;
pub mod record;

pub use error::{Error, Result};
pub use record::{EpochRecord, RunRecord, Snapshot};
