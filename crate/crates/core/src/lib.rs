//! Random walks among time-dependent conductances.
//!
//! This crate is the allocation-only core: lattice geometries with
//! piecewise-constant conductance schedules, the counterexample
//! environments, trajectory samplers for the discrete-time walk, the
//! constant speed walk (CSRW) and the variable speed walk (VSRW), exact
//! heat-kernel propagation on finite boxes, and the finite-chain,
//! Gaussian-bound, Poincaré and recurrence analyses built on top of them.
//!
//! Everything here is `no_std` + `alloc`. File formats, the command line
//! and parallel batch execution live in the `tdrw` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod environments;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod rng;
pub mod walkers;

pub use error::{Error, Result};
pub use graph::{Ball, Breakpoints, ConductanceSchedule, Edge, Environment, Geometry, Star, Vertex};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
