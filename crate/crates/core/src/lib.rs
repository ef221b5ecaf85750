//! Pre-scheduled random arrivals (PSRA) and the single-server,
//! deterministic-service queues they feed.
//!
//! Customer `i` is scheduled at `i / λ` and actually shows up at
//! `i / λ + ξ_i`, with i.i.d. delays `ξ_i`; each customer may also be
//! cancelled independently. The crate provides
//!
//! * [`dists`]: the delay laws (Gaussian and compact uniform),
//! * [`psra`]: exact window probabilities, the arrival rate, the
//!   Poisson-binomial slot-count law, moments, lag-1 covariance and the
//!   total-variation distance to Poisson,
//! * [`qanalytic`]: M/D/1 and discrete GI/D/1 solvers and the
//!   independence-approximation mean queue,
//! * [`fermi`]: the occupancy law of the compact-support model, the
//!   busy-period approximation and the slow `α` birth-death chain,
//! * [`sim`]: a slotted Monte-Carlo simulator used as ground truth.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dists;
mod error;
pub mod fermi;
pub mod numeric;
pub mod psra;
pub mod qanalytic;
pub mod sim;

pub use dists::DelayDistribution;
pub use error::{Error, Result};
pub use fermi::{AlphaChain, MinAlpha, OccupancyDist, OccupancyModel};
pub use psra::{PsraProcess, SlotCountDistribution};
pub use qanalytic::QueueStationaryDist;
pub use sim::{SimConfig, SimResult};
