use std::ops::Deref;

use super::Geometry;
use crate::error::{param, Error, Result};

/// One real value per lattice site.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    geometry: Geometry,
    values: Vec<f64>,
}

/// Carrier for divergences, residuals and other per-site diagnostics.
pub type SiteObservable = ScalarField;

impl ScalarField {
    pub fn new(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.sites() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for {} sites",
                values.len(),
                geometry.sites()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Self::constant(geometry, 0.0)
    }

    pub fn constant(geometry: Geometry, value: f64) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.sites()],
        }
    }

    /// Field with a single nonzero `value` at `site`.
    pub fn delta(geometry: Geometry, site: usize, value: f64) -> Self {
        let mut f = Self::zeros(geometry);
        f.values[site] = value;
        f
    }

    pub fn from_fn(geometry: Geometry, f: impl FnMut(usize) -> f64) -> Self {
        Self {
            geometry,
            values: (0..geometry.sites()).map(f).collect(),
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise `self - other`.
    pub fn difference(&self, other: &ScalarField) -> Result<Self> {
        ensure_same(self.geometry, other.geometry)?;
        Ok(Self {
            geometry: self.geometry,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// The field translated by the lattice vector of site `by`:
    /// `out(x + by) = self(x)`.
    pub fn translated(&self, by: usize) -> Self {
        let g = self.geometry;
        let mut values = vec![0.0; g.sites()];
        for (x, v) in self.values.iter().enumerate() {
            values[g.translate(x, by)] = *v;
        }
        Self {
            geometry: g,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Non-negative energy field, the slow conserved variable.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyField(ScalarField);

impl EnergyField {
    /// Validates finiteness and non-negativity.
    pub fn new(field: ScalarField) -> Result<Self> {
        if let Some((site, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeEnergy { site, value });
        }
        Ok(Self(field))
    }

    pub fn from_values(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        Self::new(ScalarField::new(geometry, values)?)
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Self(ScalarField::zeros(geometry))
    }

    pub fn delta(geometry: Geometry, site: usize, mass: f64) -> Result<Self> {
        Self::new(ScalarField::delta(geometry, site, mass))
    }

    /// Skips validation; callers guarantee non-negativity by construction.
    pub(crate) fn from_raw(geometry: Geometry, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geometry.sites());
        Self(ScalarField { geometry, values })
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.values().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for EnergyField {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.0
    }
}

/// What the values of a [`BondField`] represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondRole {
    Conductance,
    Current,
    Noise,
}

/// One real value per directed bond `(x, x + e_mu)`.
///
/// Values are stored site-major with the axis fastest: bond `(x, mu)` lives at
/// `x * dim + mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondField {
    geometry: Geometry,
    role: BondRole,
    values: Vec<f64>,
}

impl BondField {
    pub fn new(geometry: Geometry, role: BondRole, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.bonds() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for {} bonds",
                values.len(),
                geometry.bonds()
            )));
        }
        if role == BondRole::Conductance {
            let cap = 1.0 / (2 * geometry.dim()) as f64;
            if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= cap)) {
                return Err(param(
                    "conductance",
                    format!("value {v} outside [0, 1/(2d)] = [0, {cap}]"),
                ));
            }
        }
        Ok(Self {
            geometry,
            role,
            values,
        })
    }

    pub fn constant(geometry: Geometry, role: BondRole, value: f64) -> Result<Self> {
        Self::new(geometry, role, vec![value; geometry.bonds()])
    }

    pub fn zeros(geometry: Geometry, role: BondRole) -> Self {
        Self {
            geometry,
            role,
            values: vec![0.0; geometry.bonds()],
        }
    }

    pub(crate) fn from_raw(geometry: Geometry, role: BondRole, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geometry.bonds());
        Self {
            geometry,
            role,
            values,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn role(&self) -> BondRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, site: usize, axis: usize) -> f64 {
        self.values[site * self.geometry.dim() + axis]
    }

    #[inline]
    pub fn set(&mut self, site: usize, axis: usize, value: f64) {
        let d = self.geometry.dim();
        self.values[site * d + axis] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn ensure_same(a: Geometry, b: Geometry) -> Result<()> {
    if a != b {
        return Err(Error::GeometryMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_rejects_negative_and_nan() {
        let g = Geometry::new(1, 4).unwrap();
        assert!(EnergyField::from_values(g, vec![0.0, 1.0, -1e-3, 0.0]).is_err());
        assert!(EnergyField::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(EnergyField::from_values(g, vec![0.0, 1.0, 2.0, 0.0]).is_ok());
    }

    #[test]
    fn conductance_bounds() {
        let g = Geometry::new(2, 4).unwrap();
        assert!(BondField::constant(g, BondRole::Conductance, 0.25).is_ok());
        assert!(BondField::constant(g, BondRole::Conductance, 0.26).is_err());
        assert!(BondField::constant(g, BondRole::Current, -3.0).is_ok());
    }

    #[test]
    fn translation_moves_mass() {
        let g = Geometry::new(2, 4).unwrap();
        let f = ScalarField::delta(g, 0, 1.0);
        let moved = f.translated(g.index(&[1, 2, 0]));
        assert_eq!(moved.values()[g.index(&[1, 2, 0])], 1.0);
    }
}
