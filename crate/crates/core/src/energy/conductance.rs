use std::f64::consts::TAU;

use crate::chaos::ThetaField;
use crate::error::{param, Error, Result};
use crate::lattice::{ensure_same, BondField, BondRole, EnergyField};

/// Parameters of the bond conductance law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConductanceModel {
    kappa0: f64,
    eps_c: f64,
    delta: f64,
    dim: usize,
}

impl ConductanceModel {
    /// Enforces `κ₀ > 0`, `0 ≤ ε_c < 1`, `δ ≥ 0` and
    /// `κ₀(1 + ε_c)(1 + δ) ≤ 1/(2d)`, which keeps every diagonal transition
    /// weight non-negative.
    pub fn new(kappa0: f64, eps_c: f64, delta: f64, dim: usize) -> Result<Self> {
        if !(kappa0 > 0.0 && kappa0.is_finite()) {
            return Err(param("kappa0", format!("must be positive, got {kappa0}")));
        }
        if !(0.0..1.0).contains(&eps_c) {
            return Err(param("eps_c", format!("{eps_c} outside [0, 1)")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(param("delta", format!("must be non-negative, got {delta}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Geometry(format!("dimension {dim} outside 1..=3")));
        }
        let cap = 1.0 / (2 * dim) as f64;
        let top = kappa0 * (1.0 + eps_c) * (1.0 + delta);
        if top > cap {
            return Err(param(
                "kappa0",
                format!("κ₀(1+ε_c)(1+δ) = {top} exceeds 1/(2d) = {cap}"),
            ));
        }
        Ok(Self { kappa0, eps_c, delta, dim })
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn eps_c(&self) -> f64 {
        self.eps_c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn saturation(u: f64) -> f64 {
        u / (1.0 + u)
    }

    pub fn saturation_d1(u: f64) -> f64 {
        1.0 / ((1.0 + u) * (1.0 + u))
    }

    pub fn saturation_d2(u: f64) -> f64 {
        -2.0 / ((1.0 + u) * (1.0 + u) * (1.0 + u))
    }

    /// θ-dependent factor `κ₀(1 + ε_c χ)`.
    #[inline]
    pub fn linear_part(&self, theta_x: f64, theta_y: f64) -> f64 {
        if self.eps_c == 0.0 {
            self.kappa0
        } else {
            self.kappa0 * (1.0 + self.eps_c * (TAU * (theta_x - theta_y)).cos())
        }
    }

    #[inline]
    pub fn conductance(&self, theta_x: f64, theta_y: f64, e_x: f64, e_y: f64) -> f64 {
        let a = self.linear_part(theta_x, theta_y);
        if self.delta == 0.0 {
            a
        } else {
            a * (1.0 + self.delta * Self::saturation(e_x + e_y))
        }
    }

    /// Conductances of the dynamics linearised at `E = 0`, where the
    /// saturation term vanishes. For `δ = 0` this is the exact environment.
    pub fn environment(&self, theta: &ThetaField) -> Result<BondField> {
        self.check_dim(theta)?;
        let g = theta.geometry();
        let mut values = Vec::with_capacity(g.bonds());
        for x in 0..g.sites() {
            let tx = theta.first(x);
            for mu in 0..g.dim() {
                values.push(self.linear_part(tx, theta.first(g.neighbor(x, mu, true))));
            }
        }
        Ok(BondField::from_raw(g, BondRole::Conductance, values))
    }

    fn check_dim(&self, theta: &ThetaField) -> Result<()> {
        if theta.geometry().dim() != self.dim {
            return Err(Error::GeometryMismatch(format!(
                "model built for d = {}, lattice has d = {}",
                self.dim,
                theta.geometry().dim()
            )));
        }
        Ok(())
    }
}

/// Conductance of every bond for the current `(θ, E)`.
pub fn bond_conductance(theta: &ThetaField, energy: &EnergyField, model: &ConductanceModel) -> Result<BondField> {
    model.check_dim(theta)?;
    ensure_same(theta.geometry(), energy.geometry())?;
    if model.delta == 0.0 {
        return model.environment(theta);
    }
    let g = theta.geometry();
    let e = energy.values();
    let mut values = Vec::with_capacity(g.bonds());
    for x in 0..g.sites() {
        let tx = theta.first(x);
        for mu in 0..g.dim() {
            let y = g.neighbor(x, mu, true);
            values.push(model.conductance(tx, theta.first(y), e[x], e[y]));
        }
    }
    Ok(BondField::from_raw(g, BondRole::Conductance, values))
}
