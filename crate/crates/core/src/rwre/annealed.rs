use super::kernel::TransitionKernel;
use crate::chaos::{check_run_length, theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::energy::ConductanceModel;
use crate::error::{param, Result};
use crate::lattice::{compensated_sum, Geometry, ScalarField};
use crate::rng::stream;
use crate::stats::{jackknife, Estimate};

#[derive(Clone, Debug)]
pub struct AnnealedSpec {
    pub geometry: Geometry,
    pub model: ConductanceModel,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// Environment-averaged one-step kernel.
#[derive(Clone, Debug)]
pub struct AnnealedKernel {
    /// Monte Carlo estimate, symmetrised over axes and directions.
    pub monte_carlo: TransitionKernel,
    /// `1 − 2dκ₀` at the origin and `κ₀` at each neighbour. Since the
    /// average of `cos 2π(θ₁(x) − θ₁(y))` vanishes under the uniform measure,
    /// this is the exact annealed kernel of the dynamics linearised at `E = 0`.
    pub analytic: TransitionKernel,
    pub stay: Estimate,
    /// Per-axis neighbour weight before symmetrisation.
    pub neighbor: Vec<Estimate>,
    pub symmetric_neighbor: Estimate,
}

const BLOCKS: usize = 20;

/// Averages one-step kernels over `n_samples` consecutive θ fields of a
/// trajectory started uniformly and run for `burn_in` steps. Translation
/// invariance lets every sample also average over sites; standard errors
/// are jackknifed over contiguous time blocks.
pub fn annealed_kernel(spec: &AnnealedSpec) -> Result<AnnealedKernel> {
    if spec.n_samples == 0 {
        return Err(param("n_samples", "must be at least 1"));
    }
    let g = spec.geometry;
    let d = g.dim();
    check_run_length(spec.map, &spec.coupling, (spec.burn_in + spec.n_samples) as u64);
    let mut theta = ThetaField::uniform(g, spec.map.manifold(), &mut stream(spec.seed, 0));
    for _ in 0..spec.burn_in {
        theta = theta_step(&theta, spec.map, &spec.coupling)?;
    }
    // samples[s][mu] = site average of c(., mu) − κ₀ in sample s. Working with
    // deviations keeps the ε_c = 0 case exact.
    let k0 = spec.model.kappa0();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(spec.n_samples);
    for s in 0..spec.n_samples {
        let c = spec.model.environment(&theta)?;
        let per_axis = (0..d)
            .map(|mu| compensated_sum((0..g.sites()).map(|x| c.get(x, mu) - k0)) / g.sites() as f64)
            .collect();
        samples.push(per_axis);
        if s + 1 < spec.n_samples {
            theta = theta_step(&theta, spec.map, &spec.coupling)?;
        }
    }
    let blocks = BLOCKS.min(spec.n_samples);
    let block_of = |s: usize| s * blocks / spec.n_samples;
    let average = |f: &dyn Fn(&[f64]) -> f64, skip: Option<usize>| -> f64 {
        let (mut sum, mut n) = (0.0, 0.0);
        for (s, v) in samples.iter().enumerate() {
            if Some(block_of(s)) != skip {
                sum += f(v);
                n += 1.0;
            }
        }
        sum / n
    };
    let neighbor: Vec<Estimate> = (0..d)
        .map(|mu| shifted(k0, jackknife(blocks, |skip| average(&|v: &[f64]| v[mu], skip))))
        .collect();
    let mean_dev = |v: &[f64]| v.iter().sum::<f64>() / d as f64;
    let symmetric_neighbor = shifted(k0, jackknife(blocks, |skip| average(&mean_dev, skip)));
    let stay_dev = jackknife(blocks, |skip| average(&|v: &[f64]| -2.0 * v.iter().sum::<f64>(), skip));
    let stay = shifted(1.0 - 2.0 * d as f64 * k0, stay_dev);

    let mut values = vec![0.0; g.sites()];
    values[0] = 1.0 - 2.0 * d as f64 * k0 - 2.0 * d as f64 * (symmetric_neighbor.value - k0);
    for axis in 0..d {
        values[g.neighbor(0, axis, true)] += symmetric_neighbor.value;
        values[g.neighbor(0, axis, false)] += symmetric_neighbor.value;
    }
    Ok(AnnealedKernel {
        monte_carlo: TransitionKernel::new(ScalarField::new(g, values)?)?,
        analytic: TransitionKernel::lazy_walk(g, spec.model.kappa0())?,
        stay,
        neighbor,
        symmetric_neighbor,
    })
}

fn shifted(base: f64, e: Estimate) -> Estimate {
    Estimate { value: base + e.value, std_error: e.std_error }
}
