//! Hierarchical (local + global) LQR synthesis for grouped heterogeneous
//! linear multi-agent systems, model-based and learned from trajectory data
//! with off-policy adaptive dynamic programming.
//!
//! All controllers use the convention `u = −K x`.

pub mod adp;
pub mod error;
pub mod hierarchy;
pub mod mats;
pub mod model;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
pub use mats::{Mat, Vector};
