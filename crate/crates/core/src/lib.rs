//! Learning a linear cost vector from observed optimal actions.
//!
//! The crate tracks knowledge sets of cost directions on the sphere,
//! implements the greedy circumcenter policy together with the
//! `EllipsoidalCones` and `ProjectedCones` online algorithms, and ships the
//! adversarial environments and the simulation harness used to check them.

pub mod adversary;
pub mod cones;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod policies;
pub mod tol;

pub use error::{Error, Result};
