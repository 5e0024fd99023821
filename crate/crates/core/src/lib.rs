//! Closed-form outage analysis for RIS-assisted UAV downlink NOMA.
//!
//! The crate covers the three BS→UAV link types (direct, RIS-only and
//! composite) under Nakagami-m / double Nakagami-m fading, the NOMA
//! order-statistics outage model, a Monte Carlo engine that checks every
//! closed form, and the RUOM fairness-efficiency optimizer.
//!
//! Everything here is pure computation. The crate builds without `std`
//! (it needs `alloc`); the default `std` feature only adds rayon-backed
//! parallel evaluation, which produces results identical to the serial path.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how we reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channels;
pub mod environment;
pub mod error;
pub mod noma;
pub mod quad;
pub mod ruom;
pub mod sim;
pub mod special;
pub mod system;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
