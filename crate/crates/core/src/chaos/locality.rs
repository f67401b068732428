use std::f64::consts::TAU;

use rand::Rng;

use super::dynamics::CouplingSpec;
use super::theta::{circle_distance, wrap_unit};
use crate::lattice::Geometry;
use crate::rng::stream;

/// Largest observed ratios of the two locality bounds, each of which must be
/// at most 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalityReport {
    pub max_deriv_ratio: f64,
    pub max_holder_ratio: f64,
    pub samples: usize,
}

/// Exact `∂h(x, θ)/∂θ₁(y)` for the nearest-neighbour sine coupling, given
/// the first coordinates `theta1`.
pub fn coupling_derivative(g: Geometry, coupling: &CouplingSpec, theta1: &[f64], x: usize, y: usize) -> f64 {
    let pre = coupling.prefactor(g.dim());
    if pre == 0.0 {
        return 0.0;
    }
    let mut d = 0.0;
    for axis in 0..g.dim() {
        for forward in [true, false] {
            let n = g.neighbor(x, axis, forward);
            let c = pre * TAU * (TAU * (theta1[n] - theta1[x])).cos();
            if n == y {
                d += c;
            }
            if x == y {
                d -= c;
            }
        }
    }
    d
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Samples random configurations and checks
///
/// ```text
/// |∂_y h(x,θ)|                     ≤ ε e^{-|x-y|}
/// |∂_y h(x,θ) − ∂_y h(x,θ')|       ≤ ε Σ_z e^{-(|x-y| + |x-z|)} |θ(z) − θ'(z)|
/// ```
///
/// with `|θ − θ'|` the circle distance. Each sample perturbs one site by a
/// log-uniform amount in `[1e-6, 1e-1]`, which probes the Lipschitz
/// constant where the bound is tightest.
pub fn verify_locality_bounds(g: Geometry, coupling: &CouplingSpec, samples: usize, seed: u64) -> LocalityReport {
    let eps = coupling.eps();
    let mut rng = stream(seed, 0);
    let n = g.sites();
    let mut report = LocalityReport {
        max_deriv_ratio: 0.0,
        max_holder_ratio: 0.0,
        samples,
    };
    for _ in 0..samples.max(1) {
        let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x = rng.random_range(0..n);
        let z = rng.random_range(0..n);
        let size = 10f64.powf(rng.random_range(-6.0..-1.0)) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mut perturbed = theta.clone();
        perturbed[z] = wrap_unit(theta[z] + size);
        let dz = circle_distance(theta[z], perturbed[z]);
        for y in 0..n {
            let dxy = g.distance(x, y);
            let a = coupling_derivative(g, coupling, &theta, x, y);
            let b = coupling_derivative(g, coupling, &perturbed, x, y);
            report.max_deriv_ratio = report.max_deriv_ratio.max(ratio(a.abs(), eps * (-dxy).exp()));
            let rhs = eps * (-(dxy + g.distance(x, z))).exp() * dz;
            report.max_holder_ratio = report.max_holder_ratio.max(ratio((a - b).abs(), rhs));
        }
    }
    report
}
