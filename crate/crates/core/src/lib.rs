//! Simulation laboratory for energy-conserving coupled map lattices.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: periodic geometry, field containers, discrete operators and
//!   the binary snapshot format.
//! * [`chaos`]: the fast chaotic layer (circle doubling map, cat map, weak
//!   nearest-neighbour coupling) and measurement of space-time mixing.
//! * [`energy`]: the slow conserved energy field transported through
//!   θ-dependent bond conductances.
//! * [`rwre`]: the linearised energy dynamics viewed as a random walk in a
//!   random environment.
//! * [`rg`]: numerical renormalization group for kernels, environments and
//!   energies.
//! * [`analysis`]: diffusion diagnostics and report generation.

pub mod analysis;
pub mod chaos;
pub mod energy;
mod error;
pub mod fourier;
pub mod lattice;
pub mod rg;
pub mod rng;
pub mod rwre;
pub mod stats;

pub use error::{Error, Result, SnapshotError};
