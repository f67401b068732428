use rand::Rng;

use crate::error::{param, Error, Result};
use crate::lattice::{FieldPayload, Geometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Manifold {
    Circle,
    Torus2,
}

impl Manifold {
    pub fn components(self) -> usize {
        match self {
            Manifold::Circle => 1,
            Manifold::Torus2 => 2,
        }
    }

    pub fn from_components(m: usize) -> Result<Self> {
        match m {
            1 => Ok(Manifold::Circle),
            2 => Ok(Manifold::Torus2),
            _ => Err(param("manifold", format!("no manifold with {m} components"))),
        }
    }
}

/// Reduce to `[0, 1)`. `rem_euclid` can return exactly 1.0 for tiny negative
/// inputs, which is folded back to 0.
#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Shortest distance between two points of the circle `R / Z`.
#[inline]
pub(crate) fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Per-site point on the circle or the 2-torus, coordinates in `[0, 1)`.
///
/// Coordinates are stored site-major: site `x` owns `coords[m*x .. m*x + m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaField {
    geometry: Geometry,
    manifold: Manifold,
    coords: Vec<f64>,
}

impl ThetaField {
    pub fn new(geometry: Geometry, manifold: Manifold, coords: Vec<f64>) -> Result<Self> {
        let want = geometry.sites() * manifold.components();
        if coords.len() != want {
            return Err(Error::GeometryMismatch(format!(
                "{} theta coordinates, expected {want}",
                coords.len()
            )));
        }
        if let Some(v) = coords.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(param("theta", format!("coordinate {v} outside [0, 1)")));
        }
        Ok(Self { geometry, manifold, coords })
    }

    pub(crate) fn from_raw(geometry: Geometry, manifold: Manifold, coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| (0.0..1.0).contains(v)));
        Self { geometry, manifold, coords }
    }

    /// The same point at every site.
    pub fn constant(geometry: Geometry, manifold: Manifold, point: &[f64]) -> Result<Self> {
        if point.len() != manifold.components() {
            return Err(param("theta", "point dimension does not match the manifold"));
        }
        let coords = point.iter().copied().cycle().take(geometry.sites() * point.len()).collect();
        Self::new(geometry, manifold, coords)
    }

    /// I.i.d. uniform (Lebesgue) coordinates.
    pub fn uniform(geometry: Geometry, manifold: Manifold, rng: &mut impl Rng) -> Self {
        let n = geometry.sites() * manifold.components();
        let coords = (0..n).map(|_| rng.random::<f64>()).collect();
        Self { geometry, manifold, coords }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, site: usize) -> &[f64] {
        let m = self.manifold.components();
        &self.coords[m * site..m * site + m]
    }

    /// First coordinate θ₁ at `site`.
    #[inline]
    pub fn first(&self, site: usize) -> f64 {
        self.coords[self.manifold.components() * site]
    }

    /// All first coordinates.
    pub fn first_components(&self) -> Vec<f64> {
        self.coords.iter().step_by(self.manifold.components()).copied().collect()
    }

    /// `out(x + by) = self(x)`.
    pub fn translated(&self, by: usize) -> Self {
        let m = self.manifold.components();
        let mut coords = vec![0.0; self.coords.len()];
        for x in 0..self.geometry.sites() {
            let y = self.geometry.translate(x, by);
            coords[m * y..m * y + m].copy_from_slice(self.point(x));
        }
        Self { coords, ..*self }
    }

    pub fn to_payload(&self) -> FieldPayload {
        FieldPayload::Theta {
            components: self.manifold.components() as u8,
            coords: self.coords.clone(),
        }
    }

    pub fn from_payload(geometry: Geometry, payload: &FieldPayload) -> Result<Self> {
        match payload {
            FieldPayload::Theta { components, coords } => {
                Self::new(geometry, Manifold::from_components(*components as usize)?, coords.clone())
            }
            _ => Err(param("theta", "snapshot field is not a theta field")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_never_returns_one() {
        assert_eq!(wrap_unit(-1e-20), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
        assert_eq!(wrap_unit(2.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert_eq!(circle_distance(0.3, 0.3), 0.0);
    }

    #[test]
    fn validation() {
        let g = Geometry::new(1, 4).unwrap();
        assert!(ThetaField::new(g, Manifold::Circle, vec![0.0, 0.5, 1.0, 0.2]).is_err());
        assert!(ThetaField::new(g, Manifold::Torus2, vec![0.0; 4]).is_err());
        let t = ThetaField::constant(g, Manifold::Torus2, &[0.1, 0.2]).unwrap();
        assert_eq!(t.point(3), &[0.1, 0.2]);
        assert_eq!(t.first_components(), vec![0.1; 4]);
    }
}
