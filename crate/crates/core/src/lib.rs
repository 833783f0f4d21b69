//! Universal gradient methods for online and finite-sum composite convex
//! optimization with Hölder-continuous gradients.

pub mod bregman;
mod error;
pub mod geometry;
pub mod harness;
pub mod online;
pub mod oracles;
pub mod problems;
pub mod sug;
pub mod trace;
pub mod udgm;
pub mod upgm;

pub use error::{Error, Result};
