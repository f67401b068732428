//! Slow conserved energy field transported through θ-dependent bond
//! conductances.
//!
//! One step reads the current θ to build conductances
//!
//! ```text
//! c(x, μ) = κ₀ (1 + ε_c cos 2π(θ₁(x) − θ₁(x+e_μ))) (1 + δ s(E(x) + E(x+e_μ))),   s(u) = u/(1+u)
//! ```
//!
//! then moves energy along gradients, `J(x, μ) = c(x, μ)(E(x+e_μ) − E(x))`,
//! and finally advances θ.

mod conductance;
mod hessian;
mod step;

pub use conductance::{bond_conductance, ConductanceModel};
pub use hessian::{finite_difference_hessian, hessian_bound, update_hessian, HessianEntry};
pub use step::{bond_currents, cml_step, energy_step, CmlModel, CmlState};

pub(crate) use step::{apply_divergence_form, check_outflow, nonlinear_step_raw};
