//! Conditioned diffusions with an entrance boundary: drifts, exact
//! transition densities and moments, Girsanov weights and a stepper that
//! never leaves the state space.
//!
//! `no_std` with `alloc`; the `serde` feature adds (de)serialization.

#![no_std]
extern crate alloc;

pub mod density;
pub mod error;
pub mod girsanov;
mod meander;
pub mod numerics;
pub mod process;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use process::{BoundaryInfo, BoundarySide, Family, ProcessSpec};
