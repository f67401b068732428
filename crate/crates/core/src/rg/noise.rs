use rayon::prelude::*;

use super::environment::EnvironmentHierarchy;
use super::linear::linear_response_column;
use super::{renormalize_kernel, RgConfig};
use crate::chaos::{theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::energy::ConductanceModel;
use crate::error::{param, Result};
use crate::lattice::{compensated_sum, Geometry};
use crate::rng::substream;
use crate::rwre::{EnvironmentKernel, FluctuationMatrix, ThetaEnvironment, TransitionKernel};
use crate::stats::{jackknife, mean_estimate, Estimate};

/// Ensemble of θ-driven environments for noise statistics.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub geometry: Geometry,
    pub model: ConductanceModel,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
    pub rg: RgConfig,
    pub realizations: usize,
    /// θ steps discarded before the recorded window.
    pub burn_in: u64,
    pub seed: u64,
    /// `(kernel, column)` pairs sampled per level and realization.
    pub max_columns: usize,
}

impl NoiseSpec {
    pub fn new(
        geometry: Geometry,
        model: ConductanceModel,
        map: ChaoticMapSpec,
        coupling: CouplingSpec,
        rg: RgConfig,
        seed: u64,
    ) -> Self {
        Self { geometry, model, map, coupling, rg, realizations: 100, burn_in: 100, seed, max_columns: 64 }
    }

    /// The reference kernel `T`: the lazy walk with the mean conductance.
    pub fn reference(&self) -> Result<TransitionKernel> {
        TransitionKernel::lazy_walk(self.geometry, self.model.kappa0())
    }

    /// `L^{2 n_max}` consecutive one-step kernels of realization `r`.
    pub fn realization(&self, r: usize) -> Result<Vec<EnvironmentKernel>> {
        let mut rng = substream(self.seed, &[r as u64]);
        let mut theta = ThetaField::uniform(self.geometry, self.map.manifold(), &mut rng);
        for _ in 0..self.burn_in {
            theta = theta_step(&theta, self.map, &self.coupling)?;
        }
        ThetaEnvironment::new(theta, self.model, self.map, self.coupling)
            .take(self.rg.fine_steps())
            .collect()
    }

    fn reference_flow(&self) -> Result<Vec<TransitionKernel>> {
        let mut out = vec![self.reference()?];
        for _ in 0..self.rg.n_max {
            let next = renormalize_kernel(out.last().expect("non-empty"), self.rg.factor, self.rg.decimation)?;
            out.push(next);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct NoiseFlow {
    /// `Var(δp_n)` for `n = 0..=n_max`: the mean over realizations, kernels
    /// and sampled columns `y` of `Σ_x δp_n(x, y)²`.
    pub variances: Vec<Estimate>,
    /// `Var(δp_{n+1}) / Var(δp_n)`; `None` when the denominator vanishes.
    pub ratios: Vec<Option<Estimate>>,
    /// `‖δp_1 − δp_1^lin‖² / ‖δp_1‖²` on the sampled columns: the weight of
    /// the nonlinear part of the first RG step.
    pub nonlinear_fraction: Option<Estimate>,
    pub realizations: usize,
}

/// Evenly strided `(kernel, column)` pairs.
fn sampled_pairs(blocks: usize, columns: usize, budget: usize) -> Vec<(usize, usize)> {
    let total = blocks * columns;
    let count = total.min(budget.max(1));
    (0..count).map(|k| k * total / count).map(|i| (i / columns, i % columns)).collect()
}

fn column_square(col: &[f64]) -> f64 {
    compensated_sum(col.iter().map(|v| v * v))
}

struct RealizationStats {
    per_level: Vec<f64>,
    nonlinear: (f64, f64),
}

fn realization_stats(spec: &NoiseSpec, flow: &[TransitionKernel], r: usize) -> Result<RealizationStats> {
    let env = spec.realization(r)?;
    let rg = spec.rg;
    let hier = EnvironmentHierarchy::new(&env, rg.factor, rg.n_max, rg.decimation)?;
    let mut per_level = Vec::with_capacity(rg.n_max + 1);
    for (level, t_n) in flow.iter().enumerate() {
        let pairs = sampled_pairs(hier.blocks(level), hier.geometry(level).sites(), spec.max_columns);
        let total = compensated_sum(
            pairs.iter().map(|&(b, y)| column_square(&hier.fluctuation_column(level, b, y, t_n))),
        );
        per_level.push(total / pairs.len() as f64);
    }
    let mut nonlinear = (0.0, 0.0);
    if rg.n_max >= 1 {
        let steps = rg.factor * rg.factor;
        let homogeneous = EnvironmentKernel::homogeneous(spec.geometry, spec.model.kappa0(), 0)?;
        let pairs = sampled_pairs(hier.blocks(1), hier.geometry(1).sites(), spec.max_columns.min(16));
        for (b, y) in pairs {
            let exact = hier.fluctuation_column(1, b, y, &flow[1]);
            let lin = linear_response_column(&env[b * steps..(b + 1) * steps], &homogeneous, rg.factor, rg.decimation, y)?;
            nonlinear.0 += compensated_sum(exact.iter().zip(&lin).map(|(e, l)| (e - l) * (e - l)));
            nonlinear.1 += column_square(&exact);
        }
    }
    Ok(RealizationStats { per_level, nonlinear })
}

/// Mean column squares below this are rounding residue of `p_n − T_n`.
const ROUNDOFF_FLOOR: f64 = 1e-24;

fn ratio_estimate(num: &[f64], den: &[f64]) -> Option<Estimate> {
    let blocks = num.len().min(20);
    let pooled = |skip: Option<usize>| {
        let pick = |xs: &[f64]| -> f64 {
            compensated_sum(xs.iter().enumerate().filter(|(i, _)| Some(i % blocks) != skip).map(|(_, v)| *v))
        };
        pick(num) / pick(den)
    };
    if compensated_sum(den.iter().copied()) <= ROUNDOFF_FLOOR * den.len() as f64 {
        return None;
    }
    Some(jackknife(blocks, pooled))
}

/// Noise variance per RG level and the contraction ratios between levels.
///
/// Every realization draws a fresh θ trajectory and renormalizes the same
/// `L^{2 n_max}` kernels through all levels; level `n` is compared against
/// the renormalized reference `T_n`.
pub fn noise_variance_ratio(spec: &NoiseSpec) -> Result<NoiseFlow> {
    if spec.realizations < 30 {
        return Err(param("n_realizations", format!("{} is below the minimum of 30", spec.realizations)));
    }
    spec.rg.validate(spec.geometry)?;
    let flow = spec.reference_flow()?;
    let stats: Vec<RealizationStats> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| realization_stats(spec, &flow, r))
        .collect::<Result<_>>()?;
    let levels = spec.rg.n_max + 1;
    let series: Vec<Vec<f64>> = (0..levels).map(|n| stats.iter().map(|s| s.per_level[n]).collect()).collect();
    let variances = series.iter().map(|s| mean_estimate(s)).collect();
    let ratios = series.windows(2).map(|w| ratio_estimate(&w[1], &w[0])).collect();
    let (num, den): (Vec<f64>, Vec<f64>) = stats.iter().map(|s| s.nonlinear).unzip();
    let nonlinear_fraction = if spec.rg.n_max >= 1 { ratio_estimate(&num, &den) } else { None };
    Ok(NoiseFlow { variances, ratios, nonlinear_fraction, realizations: spec.realizations })
}

/// Full `δp_level` of the first level-`level` kernel of every realization.
pub fn sample_fluctuations(spec: &NoiseSpec, level: usize) -> Result<Vec<FluctuationMatrix>> {
    if level > spec.rg.n_max {
        return Err(param("level", format!("{level} exceeds n_max = {}", spec.rg.n_max)));
    }
    spec.rg.validate(spec.geometry)?;
    let t_n = spec.reference_flow()?.swap_remove(level);
    (0..spec.realizations)
        .into_par_iter()
        .map(|r| {
            let env = spec.realization(r)?;
            EnvironmentHierarchy::new(&env, spec.rg.factor, spec.rg.n_max, spec.rg.decimation)?.fluctuation(level, 0, &t_n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rg::Decimation;

    fn spec(eps_c: f64, dim: usize, side: usize, n_max: usize) -> NoiseSpec {
        let model = ConductanceModel::new(0.1 / dim as f64, eps_c, 0.0, dim).unwrap();
        let mut s = NoiseSpec::new(
            Geometry::new(dim, side).unwrap(),
            model,
            ChaoticMapSpec::CatMap,
            CouplingSpec::nearest_neighbor(0.05).unwrap(),
            RgConfig::new(2, n_max, Decimation::BlockSum),
            7,
        );
        s.realizations = 30;
        s.burn_in = 5;
        s
    }

    #[test]
    fn sampled_pairs_cover_or_stride() {
        assert_eq!(sampled_pairs(1, 4, 64).len(), 4);
        let p = sampled_pairs(16, 256, 64);
        assert_eq!(p.len(), 64);
        assert_eq!(p[1], (0, 64));
        assert_eq!(p[4], (1, 0));
    }

    #[test]
    fn noiseless_model_reports_undefined_ratio() {
        let flow = noise_variance_ratio(&spec(0.0, 1, 32, 2)).unwrap();
        assert!(flow.variances.iter().all(|v| v.value < 1e-28));
        assert!(flow.ratios.iter().all(Option::is_none));
        assert!(flow.nonlinear_fraction.is_none());
    }

    #[test]
    fn needs_enough_realizations() {
        let mut s = spec(0.5, 1, 32, 1);
        s.realizations = 10;
        assert!(noise_variance_ratio(&s).is_err());
    }

    #[test]
    fn noisy_model_has_positive_variances_and_is_deterministic() {
        let s = spec(0.5, 1, 32, 2);
        let a = noise_variance_ratio(&s).unwrap();
        let b = noise_variance_ratio(&s).unwrap();
        assert!(a.variances.iter().all(|v| v.value > 0.0));
        assert_eq!(a.variances[2].value.to_bits(), b.variances[2].value.to_bits());
        assert!(a.ratios.iter().all(|r| r.unwrap().value < 1.0));
        let frac = a.nonlinear_fraction.unwrap().value;
        assert!(frac >= 0.0 && frac < 1.0, "{frac}");
    }

    #[test]
    fn sampled_fluctuations_have_zero_column_sums() {
        let mut s = spec(0.5, 2, 16, 1);
        s.realizations = 3;
        let out = sample_fluctuations(&s, 1).unwrap();
        assert_eq!(out.len(), 3);
        for m in &out {
            assert!(m.column_sums().iter().all(|v| v.abs() < 1e-12));
        }
    }
}
