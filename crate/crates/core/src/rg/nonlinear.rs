use super::environment::{prolong, restrict};
use super::Decimation;
use crate::chaos::{theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::energy::{nonlinear_step_raw, ConductanceModel};
use crate::error::Result;
use crate::lattice::Geometry;

#[derive(Clone, Debug)]
pub struct NonlinearityProbe {
    /// Second-derivative magnitude of `Φ_n` at `E = 0`, for `n = 0..=n_max`.
    pub magnitudes: Vec<f64>,
}

/// Second derivatives of the block-summed renormalized maps
/// `Φ_n = R^n ∘ Φ(L^{2n} − 1) ∘ ⋯ ∘ Φ(0) ∘ U^n` at `E = 0`.
///
/// The magnitude at level `n` is `max_x` over the pure second derivative
/// along `e_0` and the mixed derivative along `(e_0, e_1)`, both by central
/// differences of step `h` with one Richardson extrapolation.
pub fn nonlinearity_probe(
    theta0: &ThetaField,
    model: &ConductanceModel,
    map: ChaoticMapSpec,
    coupling: &CouplingSpec,
    factor: usize,
    n_max: usize,
    h: f64,
) -> Result<NonlinearityProbe> {
    let fine = theta0.geometry();
    let steps = factor.pow(2 * n_max as u32);
    let mut thetas = vec![theta0.clone()];
    for _ in 1..steps {
        let next = theta_step(thetas.last().expect("non-empty"), map, coupling)?;
        thetas.push(next);
    }
    let mut geometries: Vec<Geometry> = vec![fine];
    for _ in 0..n_max {
        let next = geometries.last().expect("non-empty").coarsen(factor)?;
        geometries.push(next);
    }
    let phi = |level: usize, v: &[f64]| -> Vec<f64> {
        let mut u = v.to_vec();
        for n in (1..=level).rev() {
            u = prolong(geometries[n - 1], geometries[n], factor, Decimation::BlockSum, &u);
        }
        for theta in &thetas[..factor.pow(2 * level as u32)] {
            u = nonlinear_step_raw(&u, theta, model);
        }
        for n in 1..=level {
            u = restrict(geometries[n - 1], geometries[n], factor, Decimation::BlockSum, &u);
        }
        u
    };
    let magnitudes = (0..=n_max)
        .map(|level| {
            let g = geometries[level];
            let (a, b) = (0, g.neighbor(0, 0, true));
            let at = |pairs: &[(usize, f64)]| {
                let mut v = vec![0.0; g.sites()];
                for &(s, w) in pairs {
                    v[s] += w;
                }
                phi(level, &v)
            };
            let pure = |h: f64| -> Vec<f64> {
                let (p, m) = (at(&[(a, h)]), at(&[(a, -h)]));
                p.iter().zip(&m).map(|(p, m)| (p + m) / (h * h)).collect()
            };
            let mixed = |h: f64| -> Vec<f64> {
                let pp = at(&[(a, h), (b, h)]);
                let pm = at(&[(a, h), (b, -h)]);
                let mp = at(&[(a, -h), (b, h)]);
                let mm = at(&[(a, -h), (b, -h)]);
                (0..g.sites()).map(|x| (pp[x] - pm[x] - mp[x] + mm[x]) / (4.0 * h * h)).collect()
            };
            let richardson = |f: &dyn Fn(f64) -> Vec<f64>| -> f64 {
                let (coarse, fine) = (f(h), f(h / 2.0));
                coarse.iter().zip(&fine).map(|(c, f)| ((4.0 * f - c) / 3.0).abs()).fold(0.0, f64::max)
            };
            richardson(&pure).max(richardson(&mixed))
        })
        .collect();
    Ok(NonlinearityProbe { magnitudes })
}
