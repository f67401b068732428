use std::collections::VecDeque;
use std::f64::consts::TAU;

use rayon::prelude::*;

use super::dynamics::{check_run_length, theta_step, ChaoticMapSpec, CouplingSpec};
use super::theta::ThetaField;
use crate::error::{param, Error, Result};
use crate::lattice::Geometry;
use crate::rng::substream;
use crate::stats::{jackknife, Estimate};

/// Single-site observable of the first coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    Cos,
    Sin,
    Const(f64),
}

impl Observable {
    #[inline]
    pub fn eval(self, theta1: f64) -> f64 {
        match self {
            Observable::Cos => (TAU * theta1).cos(),
            Observable::Sin => (TAU * theta1).sin(),
            Observable::Const(c) => c,
        }
    }
}

/// Setup for estimating `E[F(θ(t+dt, x+dx)) G(θ(t, x))] − E[F] E[G]`.
///
/// Expectations are time averages along trajectories started from i.i.d.
/// uniform fields, after `burn_in` steps, and additionally averaged over all
/// sites `x`. With `trajectories > 1` the estimate pools independent runs.
#[derive(Clone, Debug)]
pub struct CorrelationSpec {
    pub geometry: Geometry,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
    pub f: Observable,
    pub g: Observable,
    pub burn_in: usize,
    pub n_samples: usize,
    pub trajectories: usize,
    pub seed: u64,
}

impl CorrelationSpec {
    pub fn new(geometry: Geometry, map: ChaoticMapSpec, coupling: CouplingSpec, seed: u64) -> Self {
        Self {
            geometry,
            map,
            coupling,
            f: Observable::Cos,
            g: Observable::Cos,
            burn_in: 1000,
            n_samples: 1000,
            trajectories: 1,
            seed,
        }
    }
}

const BLOCKS_PER_TRAJECTORY: usize = 20;

/// Per time block running sums for one trajectory.
#[derive(Clone, Default)]
struct BlockSums {
    fg: Vec<f64>,
    f: f64,
    g: f64,
    count: f64,
}

fn run_trajectory(spec: &CorrelationSpec, lags: &[(usize, [isize; 3])], index: u64) -> Result<Vec<BlockSums>> {
    let g = spec.geometry;
    let mut rng = substream(spec.seed, &[index]);
    let mut theta = ThetaField::uniform(g, spec.map.manifold(), &mut rng);
    for _ in 0..spec.burn_in {
        theta = theta_step(&theta, spec.map, &spec.coupling)?;
    }
    let max_dt = lags.iter().map(|l| l.0).max().unwrap_or(0);
    let shifted: Vec<Vec<usize>> = lags
        .iter()
        .map(|(_, dx)| (0..g.sites()).map(|x| g.offset(x, dx)).collect())
        .collect();
    let n_blocks = BLOCKS_PER_TRAJECTORY.min(spec.n_samples);
    let mut blocks = vec![
        BlockSums {
            fg: vec![0.0; lags.len()],
            ..Default::default()
        };
        n_blocks
    ];
    // Past G values, newest last; one entry per time step of the window.
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(max_dt + 1);
    let sites = g.sites() as f64;
    for step in 0..spec.n_samples + max_dt {
        let theta1 = theta.first_components();
        history.push_back(theta1.iter().map(|t| spec.g.eval(*t)).collect());
        if history.len() > max_dt + 1 {
            history.pop_front();
        }
        let fvals: Vec<f64> = theta1.iter().map(|t| spec.f.eval(*t)).collect();
        // This step is the "later" time for every lag ending here.
        for (li, (dt, _)) in lags.iter().enumerate() {
            if step < *dt || step - dt >= spec.n_samples {
                continue;
            }
            let origin = step - dt;
            let gvals = &history[history.len() - 1 - dt];
            let s: f64 = (0..g.sites()).map(|x| fvals[shifted[li][x]] * gvals[x]).sum();
            blocks[origin * n_blocks / spec.n_samples].fg[li] += s / sites;
        }
        if step < spec.n_samples {
            let b = &mut blocks[step * n_blocks / spec.n_samples];
            b.f += fvals.iter().sum::<f64>() / sites;
            b.g += history.back().expect("pushed above").iter().sum::<f64>() / sites;
            b.count += 1.0;
        }
        if step + 1 < spec.n_samples + max_dt {
            theta = theta_step(&theta, spec.map, &spec.coupling)?;
        }
    }
    Ok(blocks)
}

/// Estimates the connected correlation for several `(dt, dx)` lags from the
/// same trajectories, with delete-one-block jackknife errors over time
/// blocks of every trajectory.
///
/// Mean values `E[F]`, `E[G]` come from the same `n_samples` time window as
/// the products.
pub fn spacetime_correlations(spec: &CorrelationSpec, lags: &[(usize, [isize; 3])]) -> Result<Vec<Estimate>> {
    if spec.n_samples < 10 {
        return Err(Error::InsufficientData(format!(
            "{} time samples, need at least 10",
            spec.n_samples
        )));
    }
    if spec.trajectories == 0 {
        return Err(param("trajectories", "must be at least 1"));
    }
    let max_dt = lags.iter().map(|l| l.0).max().unwrap_or(0);
    check_run_length(spec.map, &spec.coupling, (spec.burn_in + spec.n_samples + max_dt) as u64);

    let per_traj: Vec<Vec<BlockSums>> = (0..spec.trajectories as u64)
        .into_par_iter()
        .map(|i| run_trajectory(spec, lags, i))
        .collect::<Result<_>>()?;
    let blocks: Vec<BlockSums> = per_traj.into_iter().flatten().collect();

    let combine = |li: usize, skip: Option<usize>| -> f64 {
        let (mut fg, mut f, mut g, mut n) = (0.0, 0.0, 0.0, 0.0);
        for (i, b) in blocks.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            fg += b.fg[li];
            f += b.f;
            g += b.g;
            n += b.count;
        }
        fg / n - (f / n) * (g / n)
    };
    Ok((0..lags.len())
        .map(|li| jackknife(blocks.len(), |skip| combine(li, skip)))
        .collect())
}

/// Single-lag convenience wrapper around [`spacetime_correlations`].
pub fn spacetime_correlation(spec: &CorrelationSpec, dt: usize, dx: [isize; 3]) -> Result<Estimate> {
    Ok(spacetime_correlations(spec, &[(dt, dx)])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(eps: f64) -> CorrelationSpec {
        let g = Geometry::new(1, 64).unwrap();
        let mut s = CorrelationSpec::new(g, ChaoticMapSpec::CatMap, CouplingSpec::nearest_neighbor(eps).unwrap(), 11);
        s.burn_in = 100;
        s.n_samples = 400;
        s
    }

    #[test]
    fn equal_time_variance_is_half() {
        let e = spacetime_correlation(&spec(0.0), 0, [0; 3]).unwrap();
        assert!(e.within(0.5, 3.0), "{e:?}");
        assert!(e.std_error < 0.01);
    }

    #[test]
    fn constant_observable_is_uncorrelated() {
        let mut s = spec(0.05);
        s.f = Observable::Const(3.0);
        let e = spacetime_correlation(&s, 2, [1, 0, 0]).unwrap();
        assert!(e.value.abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn lag_twenty_is_below_noise() {
        let e = spacetime_correlation(&spec(0.0), 20, [0; 3]).unwrap();
        assert!(e.value.abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let mut s = spec(0.0);
        s.n_samples = 9;
        assert!(spacetime_correlation(&s, 0, [0; 3]).is_err());
    }

    #[test]
    fn ensemble_mode_agrees() {
        let mut s = spec(0.02);
        s.trajectories = 4;
        s.n_samples = 100;
        let e = spacetime_correlation(&s, 0, [0; 3]).unwrap();
        assert!(e.within(0.5, 3.0), "{e:?}");
        let again = spacetime_correlation(&s, 0, [0; 3]).unwrap();
        assert_eq!(e, again);
    }
}
