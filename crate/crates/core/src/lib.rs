//! Range and angle-of-arrival estimation for an OFDM opportunistic radar
//! with a uniform linear array.
//!
//! The receiver knows the pilot symbols but not the data payload. The joint
//! estimator ([`estimators::estimate_jpudl`]) uses both: the pilots through a
//! 2-D range/angle matched filter and the data through a constellation-free
//! spatial projection, evaluated on an FFT grid and refined with Powell's
//! method. Three baselines and a Monte-Carlo harness sit alongside it.

pub mod constellation;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod simulator;

pub use error::{Error, Result};
