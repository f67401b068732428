//! Diffusion diagnostics on recorded energy trajectories.

mod msd;
mod profile;
mod quenched;
mod report;

pub use msd::{centroid, estimate_kappa_msd, mean_square_displacement, KappaEstimate};
pub use profile::{gaussian_profile, gaussian_profile_distance, profile_amplitude};
pub use quenched::{paired_sign_flip_test, quenched_vs_annealed, EnvironmentRun, QuenchedReport, QuenchedSpec};
pub use report::{emit_report, flow_rows, DiffusionReport, FlowRow, SUMMARY_VERSION};
