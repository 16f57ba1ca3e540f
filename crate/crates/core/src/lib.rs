//! Secret-key generation analysis for sparse wideband reciprocal channels
//! with a correlated eavesdropper.
//!
//! * [`model`]: the δ-sparse pattern model and the joint law of the
//!   degree-of-freedom counts.
//! * [`mutual_info`] and [`oracle`]: per-bin Gaussian mutual information,
//!   its vector sums, and a covariance log-determinant cross-check.
//! * [`ergodic`]: ergodic key rates, on-off sounding, wideband limits.
//! * [`outage`]: secrecy-outage probabilities, KL tail bounds, exponents.
//! * [`leakage`]: exhaustive evaluation of random-binning key agreement on
//!   small discrete sources.
//! * [`cli`]: figure-style parameter sweeps written as CSV or JSON.

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ergodic;
pub mod error;
pub mod exec;
pub mod info;
pub mod leakage;
pub mod model;
pub mod mutual_info;
pub mod optimize;
pub mod oracle;
pub mod outage;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{ChannelConfig, DofCounts};
