//! Core tent-map dynamics on [-1, 1], the mapping-cylinder disk carrying
//! the family of near-homeomorphisms H_t, finite-depth inverse-limit
//! machinery with the annulus parameterization of the attractor
//! complement, and statistical harnesses that test weak continuity and
//! physicality of the induced measures against independent oracles.

pub mod acim;
pub mod cli;
pub mod disk;
pub mod error;
pub mod inverse_limit;
mod plot;
pub mod stability;
pub mod tent_map;

pub use error::{Error, Result};
