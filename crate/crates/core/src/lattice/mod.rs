//! Periodic lattice geometry, field containers and discrete operators.

mod field;
mod geometry;
mod ops;
pub mod snapshot;

pub use field::{BondField, BondRole, EnergyField, ScalarField, SiteObservable};
pub use geometry::{Coord, Geometry, MAX_DIM};
pub use ops::{compensated_sum, discrete_divergence, total_mass, weighted_sup_norm, weighted_sup_norm_about};
pub(crate) use geometry::signed_frequency;
pub(crate) use field::ensure_same;
pub use snapshot::{FieldPayload, NamedField, Snapshot};
