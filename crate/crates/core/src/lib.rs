//! Wirelessly powered over-the-air computation.
//!
//! A multi-antenna access point first charges `K` sensors with energy
//! beams, then the sensors transmit simultaneously and the access point
//! recovers a function of their data from the superimposed signal. This
//! crate designs the energy beams, the split of the charging power across
//! sensors, the sensor precoders and the aggregation beamformer, and
//! provides a Monte-Carlo harness for comparing designs.

pub mod aircomp;
pub mod baselines;
pub mod channels;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod sdr;
pub mod wpt;

pub use error::{Error, Result};
