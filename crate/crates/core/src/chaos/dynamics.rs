use std::f64::consts::{E, PI, TAU};

use rayon::prelude::*;

use super::theta::{wrap_unit, Manifold, ThetaField};
use crate::error::{param, Error, Result};

/// The uncoupled local map `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChaoticMapSpec {
    /// `θ ↦ 2θ mod 1` on the circle.
    Doubling,
    /// Arnold's cat map `(θ₁, θ₂) ↦ (2θ₁ + θ₂, θ₁ + θ₂) mod 1` on the 2-torus.
    CatMap,
}

impl ChaoticMapSpec {
    pub fn manifold(self) -> Manifold {
        match self {
            ChaoticMapSpec::Doubling => Manifold::Circle,
            ChaoticMapSpec::CatMap => Manifold::Torus2,
        }
    }

    /// Writes `g(point)` without reducing mod 1.
    #[inline]
    fn apply_unreduced(self, point: &[f64], out: &mut [f64]) {
        match self {
            ChaoticMapSpec::Doubling => out[0] = 2.0 * point[0],
            ChaoticMapSpec::CatMap => {
                out[0] = 2.0 * point[0] + point[1];
                out[1] = point[0] + point[1];
            }
        }
    }

    /// One uncoupled step of a single site.
    pub fn apply(self, point: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; point.len()];
        self.apply_unreduced(point, &mut out);
        out.iter_mut().for_each(|v| *v = wrap_unit(*v));
        out
    }

    /// Inverse of the cat map, `(θ₁, θ₂) ↦ (θ₁ − θ₂, 2θ₂ − θ₁) mod 1`.
    /// The doubling map is 2-to-1 and has none.
    pub fn invert(self, point: &[f64]) -> Option<Vec<f64>> {
        match self {
            ChaoticMapSpec::Doubling => None,
            ChaoticMapSpec::CatMap => Some(vec![
                wrap_unit(point[0] - point[1]),
                wrap_unit(2.0 * point[1] - point[0]),
            ]),
        }
    }
}

/// Nearest-neighbour coupling
/// `h(x, θ) = (ε'/2d) Σ_{|y-x|=1} sin(2π(θ₁(y) − θ₁(x)))` on the first coordinate.
///
/// The user-facing strength `eps` is the constant in the locality bounds
/// `|∂h| ≤ ε e^{-|x-y|}` and the matching Hölder bound; the internal amplitude
/// `ε' = ε d e^{-2} / (2π²)` is the largest for which both hold with decay
/// rate 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpec {
    eps: f64,
    range: u8,
}

impl CouplingSpec {
    pub fn new(eps: f64, range: u8) -> Result<Self> {
        if !(0.0..0.25).contains(&eps) {
            return Err(param("eps", format!("coupling {eps} outside [0, 1/4)")));
        }
        if range > 1 {
            return Err(param("range", format!("interaction range {range} is not 0 or 1")));
        }
        Ok(Self { eps, range })
    }

    pub fn nearest_neighbor(eps: f64) -> Result<Self> {
        Self::new(eps, 1)
    }

    pub fn uncoupled() -> Self {
        Self { eps: 0.0, range: 0 }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn range(&self) -> u8 {
        self.range
    }

    pub fn is_active(&self) -> bool {
        self.range == 1 && self.eps > 0.0
    }

    /// Prefactor `ε'/(2d)` in front of the sine sum.
    pub fn prefactor(&self, dim: usize) -> f64 {
        if self.range == 0 {
            return 0.0;
        }
        let internal = self.eps * dim as f64 / (E * E * 2.0 * PI * PI);
        internal / (2 * dim) as f64
    }
}

const DEGENERATE_DOUBLING_STEPS: u64 = 50;

/// Warns when a run would iterate the uncoupled doubling map long enough
/// for binary rounding to collapse every orbit onto 0. Returns whether it
/// warned.
pub fn check_run_length(map: ChaoticMapSpec, coupling: &CouplingSpec, steps: u64) -> bool {
    let degenerate = map == ChaoticMapSpec::Doubling && !coupling.is_active() && steps > DEGENERATE_DOUBLING_STEPS;
    if degenerate {
        log::warn!(
            "uncoupled doubling map over {steps} steps: floating-point orbits reach 0 within 53 steps"
        );
    }
    degenerate
}

const PARALLEL_SITES: usize = 1 << 14;

/// Synchronous update `θ'(x) = g(θ(x)) + h(x, θ) mod 1`.
pub fn theta_step(theta: &ThetaField, map: ChaoticMapSpec, coupling: &CouplingSpec) -> Result<ThetaField> {
    if theta.manifold() != map.manifold() {
        return Err(Error::Unsupported(format!(
            "{map:?} acts on {:?}, field lives on {:?}",
            map.manifold(),
            theta.manifold()
        )));
    }
    let g = theta.geometry();
    let m = theta.manifold().components();
    let pre = coupling.prefactor(g.dim());
    let mut out = vec![0.0; theta.coords().len()];
    let site = |x: usize, slot: &mut [f64]| {
        map.apply_unreduced(theta.point(x), slot);
        if pre != 0.0 {
            let own = theta.first(x);
            let mut s = 0.0;
            for axis in 0..g.dim() {
                for forward in [true, false] {
                    s += (TAU * (theta.first(g.neighbor(x, axis, forward)) - own)).sin();
                }
            }
            slot[0] += pre * s;
        }
        slot.iter_mut().for_each(|v| *v = wrap_unit(*v));
    };
    if g.sites() >= PARALLEL_SITES {
        out.par_chunks_mut(m).enumerate().for_each(|(x, slot)| site(x, slot));
    } else {
        out.chunks_mut(m).enumerate().for_each(|(x, slot)| site(x, slot));
    }
    Ok(ThetaField::from_raw(g, theta.manifold(), out))
}
