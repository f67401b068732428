//! Fast chaotic variables θ: per-site hyperbolic maps with weak
//! nearest-neighbour coupling, and measurements of their mixing.
//!
//! The θ-layer never reads the energy field.

mod dynamics;
mod locality;
mod mixing;
mod theta;

pub use dynamics::{check_run_length, theta_step, ChaoticMapSpec, CouplingSpec};
pub use locality::{coupling_derivative, verify_locality_bounds, LocalityReport};
pub use mixing::{spacetime_correlation, spacetime_correlations, CorrelationSpec, Observable};
pub use theta::{Manifold, ThetaField};
