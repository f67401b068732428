//! Numerical renormalization group.
//!
//! One RG step composes `L²` time steps and coarse-grains space by `L`,
//! keeping total mass: `(S_L E)(x) = L^d E(Lx)`. Three decimations are
//! available:
//!
//! * point sampling, the literal `L^d E(Lx)`;
//! * block sums over `L^d` sites, which preserve mass and column sums exactly;
//! * spectral truncation, which keeps the momenta `|k_i| < π/L` and realises
//!   `T̂'(k) = T̂(k/L)^{L²}` without aliasing.

mod census;
mod environment;
mod kernel_flow;
mod linear;
mod noise;
mod nonlinear;
mod scaling;

pub use census::{bad_region_census, Census};
pub use environment::{renormalize_environment, renormalized_column, EnvironmentHierarchy, RenormalizedEnvironment};
pub use kernel_flow::{
    estimate_c, kernel_fixed_point_distance, kernel_flow, point_sample_symbol, renormalize_kernel, RgKernelFlow,
};
pub use linear::{linear_response_column, linearized_noise_entry, linearized_noise_map, LinearizedNoiseMap};
pub use noise::{noise_variance_ratio, sample_fluctuations, NoiseFlow, NoiseSpec};
pub use nonlinear::{nonlinearity_probe, NonlinearityProbe};
pub use scaling::{renormalized_energy, scale_field};

use crate::error::{param, Result};
use crate::lattice::Geometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decimation {
    PointSample,
    BlockSum,
    Spectral,
}

impl std::str::FromStr for Decimation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point-sample" => Ok(Decimation::PointSample),
            "block-sum" => Ok(Decimation::BlockSum),
            "spectral" => Ok(Decimation::Spectral),
            other => Err(param("decimation", format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Decimation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decimation::PointSample => "point-sample",
            Decimation::BlockSum => "block-sum",
            Decimation::Spectral => "spectral",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RgConfig {
    /// Block scale `L`.
    pub factor: usize,
    pub n_max: usize,
    pub decimation: Decimation,
    /// Tail normalisation exponent `b`; `None` means `d/2`.
    pub b_exp: Option<f64>,
}

impl RgConfig {
    pub fn new(factor: usize, n_max: usize, decimation: Decimation) -> Self {
        Self { factor, n_max, decimation, b_exp: None }
    }

    pub fn b_exp(&self, dim: usize) -> f64 {
        self.b_exp.unwrap_or(dim as f64 / 2.0)
    }

    /// `L^{2 n_max}` fine steps per realization.
    pub fn fine_steps(&self) -> usize {
        self.factor.pow(2 * self.n_max as u32)
    }

    /// Geometries `g_0 = g, g_1, ..., g_{n_max}`.
    pub fn geometries(&self, g: Geometry) -> Result<Vec<Geometry>> {
        self.validate(g)?;
        let mut out = vec![g];
        for _ in 0..self.n_max {
            let next = out.last().expect("non-empty").coarsen(self.factor)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn validate(&self, g: Geometry) -> Result<()> {
        if self.factor < 2 {
            return Err(param("L", format!("block scale {} must be at least 2", self.factor)));
        }
        if let Some(b) = self.b_exp {
            if !(b > 0.0) {
                return Err(param("b_exp", format!("must be positive, got {b}")));
            }
        }
        let mut side = g.side();
        for _ in 0..self.n_max {
            if side % self.factor != 0 || side / self.factor < 4 {
                return Err(crate::Error::Divisibility { side: g.side(), factor: self.factor.pow(self.n_max as u32) });
            }
            side /= self.factor;
        }
        Ok(())
    }
}
