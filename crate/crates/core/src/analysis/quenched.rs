use rand::Rng;
use rayon::prelude::*;

use super::{estimate_kappa_msd, gaussian_profile_distance, KappaEstimate};
use crate::chaos::{theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::energy::ConductanceModel;
use crate::error::{param, Result};
use crate::lattice::{EnergyField, Geometry, ScalarField};
use crate::rg::{renormalized_energy, Decimation};
use crate::rng::substream;
use crate::rwre::{annealed_kernel, evolve_linear, AnnealedSpec, EnvironmentKernel, ShuffledEnvironment, ThetaEnvironment};
use crate::stats::{mean, variance, Estimate};

#[derive(Clone, Debug)]
pub struct QuenchedSpec {
    pub geometry: Geometry,
    pub model: ConductanceModel,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
    pub n_env: usize,
    pub horizon: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Block length of the time-shuffled control; must divide `horizon`.
    pub shuffle_block: usize,
    /// θ samples for the Monte Carlo annealed kernel.
    pub annealed_samples: usize,
    /// Block scale for the renormalized profiles `E_n(1)`, `n ≥ 1`, up to
    /// `L^{2n} ≤ horizon`.
    pub factor: usize,
    /// Decimation of the profiles. Point sampling converges to the sampled
    /// Gaussian; block sums converge to its box average, which stays at a
    /// finite distance when the width at `t = 1` is below one site.
    pub profile_decimation: Decimation,
    pub a_exp: f64,
}

impl QuenchedSpec {
    pub fn new(
        geometry: Geometry,
        model: ConductanceModel,
        map: ChaoticMapSpec,
        coupling: CouplingSpec,
        n_env: usize,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            geometry,
            model,
            map,
            coupling,
            n_env,
            horizon,
            seed,
            burn_in: 100,
            shuffle_block: 16,
            annealed_samples: 1000,
            factor: 4,
            profile_decimation: Decimation::PointSample,
            a_exp: 1.0,
        }
    }

    fn profile_levels(&self) -> usize {
        let mut n = 0;
        while self.factor.pow(2 * (n as u32 + 1)) <= self.horizon
            && self.geometry.side() % self.factor.pow(n as u32 + 1) == 0
            && self.geometry.side() / self.factor.pow(n as u32 + 1) >= 4
        {
            n += 1;
        }
        n
    }
}

#[derive(Clone, Debug)]
pub struct EnvironmentRun {
    /// Fit over `[horizon/100, horizon]`.
    pub kappa: KappaEstimate,
    /// Fit over `[horizon/400, horizon/4]`.
    pub kappa_early: KappaEstimate,
    /// Same environment with time blocks permuted.
    pub shuffled: KappaEstimate,
    /// `gaussian_profile_distance` of `E_n(1)` for `n = 1, 2, ...`.
    pub profile_distances: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct QuenchedReport {
    pub runs: Vec<EnvironmentRun>,
    /// `κ` of the Monte Carlo annealed kernel.
    pub annealed: Estimate,
    pub spread_early: f64,
    pub spread: f64,
    /// Two-sided p-value of the paired shuffled-vs-quenched test.
    pub shuffle_p_value: f64,
    /// Largest `|κ̂ − κ_ann| / κ_ann` over environments.
    pub max_relative_deviation: f64,
}

impl QuenchedReport {
    /// Every per-environment `κ̂` within `tol` (relative) of the annealed `κ`.
    pub fn within(&self, tol: f64) -> bool {
        self.max_relative_deviation <= tol
    }
}

fn initial_theta(spec: &QuenchedSpec, env: usize) -> Result<ThetaField> {
    let mut rng = substream(spec.seed, &[env as u64]);
    let mut theta = ThetaField::uniform(spec.geometry, spec.map.manifold(), &mut rng);
    for _ in 0..spec.burn_in {
        theta = theta_step(&theta, spec.map, &spec.coupling)?;
    }
    Ok(theta)
}

fn run_records<I>(spec: &QuenchedSpec, env: I, keep: impl Fn(u64) -> bool) -> Result<Vec<(u64, ScalarField)>>
where
    I: IntoIterator<Item = Result<EnvironmentKernel>>,
{
    let e0 = EnergyField::delta(spec.geometry, 0, 1.0)?;
    let mut records = Vec::new();
    evolve_linear(&e0, env, |t, e| {
        if keep(t) {
            records.push((t, e.as_field().clone()));
        }
    })?;
    Ok(records)
}

fn fit_window(h: u64) -> (u64, u64) {
    ((h / 100).max(1), h)
}

fn one_environment(spec: &QuenchedSpec, env: usize, kappa_ann: f64) -> Result<EnvironmentRun> {
    let theta = initial_theta(spec, env)?;
    let h = spec.horizon as u64;
    let levels = spec.profile_levels();
    let stride = (h / 400).max(1);
    let profile_times: Vec<u64> = (1..=levels).map(|n| (spec.factor as u64).pow(2 * n as u32)).collect();
    let keep = |t: u64| t % stride == 0 || profile_times.contains(&t);
    let quenched = ThetaEnvironment::new(theta.clone(), spec.model, spec.map, spec.coupling).take(spec.horizon);
    let records = run_records(spec, quenched, keep)?;
    let kappa = estimate_kappa_msd(&records, fit_window(h))?;
    let kappa_early = estimate_kappa_msd(&records, fit_window(h / 4))?;
    let profile_distances = (1..=levels)
        .map(|n| {
            let e_n = renormalized_energy(&records, n, spec.factor, spec.profile_decimation, 1)?;
            gaussian_profile_distance(&e_n[1].1, 1.0, kappa_ann, 1.0, spec.a_exp)
        })
        .collect::<Result<_>>()?;
    let shuffled_env = ShuffledEnvironment::new(
        theta,
        spec.model,
        spec.map,
        spec.coupling,
        spec.horizon,
        spec.shuffle_block,
        crate::rng::stream_seed(spec.seed, env as u64),
    )?;
    let shuffled_records = run_records(spec, shuffled_env, |t| t % stride == 0)?;
    let shuffled = estimate_kappa_msd(&shuffled_records, fit_window(h))?;
    Ok(EnvironmentRun { kappa, kappa_early, shuffled, profile_distances })
}

/// Quenched diffusion in `n_env` independent θ-environments from a δ-mass
/// start, compared with the annealed kernel and with a time-shuffled
/// control of each environment.
pub fn quenched_vs_annealed(spec: &QuenchedSpec) -> Result<QuenchedReport> {
    if spec.n_env < 10 {
        return Err(param("n_env", format!("{} is below the minimum of 10", spec.n_env)));
    }
    if spec.horizon < 400 {
        return Err(param("horizon", format!("{} is below the minimum of 400", spec.horizon)));
    }
    let annealed = annealed_kernel(&AnnealedSpec {
        geometry: spec.geometry,
        model: spec.model,
        map: spec.map,
        coupling: spec.coupling,
        n_samples: spec.annealed_samples,
        burn_in: spec.burn_in,
        seed: crate::rng::stream_seed(spec.seed, u64::MAX),
    })?
    .symmetric_neighbor;
    let runs: Vec<EnvironmentRun> = (0..spec.n_env)
        .into_par_iter()
        .map(|e| one_environment(spec, e, annealed.value))
        .collect::<Result<_>>()?;
    let spread_of = |f: fn(&EnvironmentRun) -> f64| variance(&runs.iter().map(f).collect::<Vec<_>>()).sqrt();
    let diffs: Vec<f64> = runs.iter().map(|r| r.shuffled.kappa - r.kappa.kappa).collect();
    let max_relative_deviation =
        runs.iter().map(|r| ((r.kappa.kappa - annealed.value) / annealed.value).abs()).fold(0.0, f64::max);
    Ok(QuenchedReport {
        spread_early: spread_of(|r| r.kappa_early.kappa),
        spread: spread_of(|r| r.kappa.kappa),
        shuffle_p_value: paired_sign_flip_test(&diffs, spec.seed),
        max_relative_deviation,
        annealed,
        runs,
    })
}

/// Two-sided sign-flip permutation test of `mean(diffs) = 0`. Exact for up
/// to 16 pairs, otherwise 10⁴ random flips.
pub fn paired_sign_flip_test(diffs: &[f64], seed: u64) -> f64 {
    let n = diffs.len();
    if n == 0 {
        return 1.0;
    }
    let observed = mean(diffs).abs();
    // relative slack so that ties from rounding count as extreme
    let tol = 1e-12 * diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let stat = |signs: &dyn Fn(usize) -> bool| {
        (diffs.iter().enumerate().map(|(i, d)| if signs(i) { -d } else { *d }).sum::<f64>() / n as f64).abs()
    };
    if n <= 16 {
        let total = 1usize << n;
        let extreme = (0..total).filter(|mask| stat(&|i| mask >> i & 1 == 1) >= observed - tol).count();
        extreme as f64 / total as f64
    } else {
        let mut rng = substream(seed, &[0x5eed]);
        let draws = 10_000;
        let extreme = (0..draws)
            .filter(|_| {
                let flips: Vec<bool> = (0..n).map(|_| rng.random()).collect();
                stat(&|i| flips[i]) >= observed - tol
            })
            .count();
        (extreme + 1) as f64 / (draws + 1) as f64
    }
}
