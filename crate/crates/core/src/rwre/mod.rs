//! The linearised energy dynamics as a random walk in a random environment.
//!
//! Kernels act on energies by `E'(x) = Σ_y p_xy E(y)`; columns sum to one,
//! which is what conserves mass.

mod annealed;
mod environment;
mod evolve;
mod kernel;
mod noise;

pub use annealed::{annealed_kernel, AnnealedKernel, AnnealedSpec};
pub use environment::{transition_matrix, CscMatrix, EnvironmentKernel};
pub use evolve::{evolve_linear, evolve_linear_trajectory, shuffled_blocks, ShuffledEnvironment, ThetaEnvironment};
pub use kernel::TransitionKernel;
pub use noise::{coarse_noise_proxy, extract_noise_1d, noise_decomposition, noise_residual, reconstruct_kernel, FluctuationMatrix};
