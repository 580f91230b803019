//! Adaptive energy-aware data aggregation trees for wireless sensor networks.
//!
//! The crate is a deterministic simulator of a sensor field that aggregates
//! its readings at a single parent node:
//!
//! * [`election`] picks the parent with the most available energy each cycle,
//! * [`capacity`] gates how many packets the parent accepts per cycle,
//! * [`routing`] walks greedily towards the parent through high-energy
//!   neighbours and remembers the paths it took,
//! * [`aggregation`] ties these together into refresh cycles and transfers,
//! * [`energy`] holds the energy formulas and the auditable battery drains,
//! * [`simulator`] runs seeded scenarios and computes delay, delivery ratio,
//!   energy consumption and network lifetime.
//!
//! The guide under `book/` walks through each of these with runnable code.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod capacity;
pub mod election;
pub mod energy;
mod error;
pub mod model;
pub mod routing;
pub mod simulator;

pub use error::{Error, Result};
