//! Variance-adaptive confidence sequences for the running average of
//! conditional means of bounded scalar and matrix streams, together with
//! baseline sequences and asymptotic width diagnostics.

pub mod error;
pub mod kernel;

pub mod asymptotics;
pub mod baselines;
pub mod eb;
pub mod harness;
pub mod matrix;
pub mod stitched;
pub mod streams;

pub use error::{CsError, Result};
