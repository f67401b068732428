use std::io::Write;

use num_complex::Complex64;

use crate::error::{param, Result};
use crate::fourier;
use crate::lattice::{compensated_sum, ensure_same, Geometry, ScalarField, MAX_DIM};

/// Translation-invariant kernel: `T(z)` is the probability of displacement
/// `z`, stored at the site index of `z` (minimal image).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    field: ScalarField,
}

const MASS_TOL: f64 = 1e-9;

impl TransitionKernel {
    /// Checks `T ≥ 0` and `Σ T = 1` up to rounding.
    pub fn new(field: ScalarField) -> Result<Self> {
        let total = compensated_sum(field.values().iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(param("kernel", format!("total mass {total} is not 1")));
        }
        if let Some(v) = field.values().iter().find(|v| **v < -MASS_TOL) {
            return Err(param("kernel", format!("negative weight {v}")));
        }
        Ok(Self { field })
    }

    /// Kernels produced by FFT arithmetic or band-limited decimation, which
    /// may carry small negative tails.
    pub(crate) fn from_raw(field: ScalarField) -> Self {
        Self { field }
    }

    /// Lazy walk: stay with `1 − 2dκ₀`, move to each neighbour with `κ₀`.
    pub fn lazy_walk(g: Geometry, kappa0: f64) -> Result<Self> {
        let d = g.dim() as f64;
        if !(0.0..=1.0 / (2.0 * d)).contains(&kappa0) {
            return Err(param("kappa0", format!("{kappa0} outside [0, 1/(2d)]")));
        }
        let mut values = vec![0.0; g.sites()];
        values[0] = 1.0 - 2.0 * d * kappa0;
        for axis in 0..g.dim() {
            values[g.neighbor(0, axis, true)] += kappa0;
            values[g.neighbor(0, axis, false)] += kappa0;
        }
        Ok(Self { field: ScalarField::new(g, values)? })
    }

    pub fn identity(g: Geometry) -> Self {
        Self { field: ScalarField::delta(g, 0, 1.0) }
    }

    pub fn geometry(&self) -> Geometry {
        self.field.geometry()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.values().iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Weight of displacement `delta`.
    pub fn at(&self, delta: &[isize]) -> f64 {
        self.values()[self.geometry().offset(0, delta)]
    }

    /// `T̂(k) = Σ_z T(z) e^{-ik·z}` at any momentum.
    pub fn symbol(&self, k: &[f64; MAX_DIM]) -> Complex64 {
        fourier::evaluate_at(&self.field, k)
    }

    /// `T̂` on all lattice momenta, in FFT order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        fourier::forward(&self.field)
    }

    /// `n`-fold composition with itself.
    pub fn power(&self, n: u32) -> Self {
        Self::from_raw(fourier::convolution_power(&self.field, n))
    }

    /// `(T E)(x) = Σ_y T(x − y) E(y)`.
    pub fn apply(&self, e: &ScalarField) -> Result<ScalarField> {
        ensure_same(self.geometry(), e.geometry())?;
        fourier::convolve(&self.field, e)
    }

    /// `Σ_z |z|² T(z)` with minimal-image displacements.
    pub fn second_moment(&self) -> f64 {
        let g = self.geometry();
        compensated_sum(self.values().iter().enumerate().map(|(z, v)| {
            let d = g.displacement(z);
            v * d.iter().map(|c| c * c).sum::<f64>()
        }))
    }

    /// Diffusion constant `Σ_z |z|² T(z) / (2d)`; equals `κ₀` for the lazy walk.
    pub fn kappa(&self) -> f64 {
        self.second_moment() / (2.0 * self.geometry().dim() as f64)
    }

    /// CSV with one row per displacement: `z1[,z2[,z3]],probability`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let g = self.geometry();
        let header: Vec<String> = (1..=g.dim()).map(|a| format!("z{a}")).collect();
        writeln!(w, "{},probability", header.join(","))?;
        for (z, v) in self.values().iter().enumerate() {
            let d = g.displacement(z);
            let coords: Vec<String> = d[..g.dim()].iter().map(|c| format!("{}", *c as i64)).collect();
            writeln!(w, "{},{v:e}", coords.join(","))?;
        }
        Ok(())
    }
}
