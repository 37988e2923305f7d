//! Achievable-rate inner bounds for uplink base-station cooperation over
//! rate-limited backhaul with imperfect channel knowledge.

pub mod allocation;
pub mod baselines;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod montecarlo;
pub mod perf;
mod model;
pub mod schemes;

pub use error::{Error, Result};
