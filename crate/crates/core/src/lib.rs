//! Nested online controllers for locally controllable nonlinear dynamics.
//!
//! An inner online-convex-optimization engine picks a target state each
//! round; an action solver then steers the system there. The crate ships the
//! controllers, the disturbance adversaries used to probe them, four
//! Stackelberg environments, and a harness that audits regret.

pub mod applications;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod dynamics;
pub mod linalg;
pub mod oco;
pub mod controllers;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{ConvexBody, Shape, MEMBERSHIP_TOL};
