//! Latency analysis of early detection under finite blocklength.
//!
//! * [`numerics`]: Gaussian tail functions, adaptive quadrature, Hadamard
//!   matrices, reproducible random streams.
//! * [`fbl`]: capacity, dispersion, normal-approximation rates, minimum
//!   blocklength, and the time-resolved BLER profile with its stopping-time
//!   moments.
//! * [`detect`]: Monte Carlo simulation of the posterior-threshold sequential
//!   receiver on Hadamard codebooks.
//! * [`multihop`]: decode-and-forward latency formulas and bounds.
//! * [`experiments`]: configuration, figure datasets and table output used by
//!   the `edlat` binary.

pub mod detect;
pub mod error;
pub mod experiments;
pub mod fbl;
pub mod multihop;
pub mod numerics;

pub use error::{ConfigError, Error, Result};
