//! Multi-access coded caching with linear subpacketization.
//!
//! Cyclic placement, reduction of the delivery phase to a table of
//! structured index-coding problems, coloring-based linear index codes over
//! GF(2^w), closed-form rate calculators and brute-force oracles.

pub mod coloring;
pub mod delivery;
pub mod error;
pub mod icp;
pub mod linalg_ff;
pub mod macc;
pub mod oracle;
pub mod rates;

pub use error::{Error, Result};
