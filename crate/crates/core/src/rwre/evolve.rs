use rand::seq::SliceRandom;

use super::environment::EnvironmentKernel;
use crate::chaos::{theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::energy::ConductanceModel;
use crate::error::{param, Result};
use crate::lattice::{ensure_same, EnergyField};
use crate::rng::stream;

/// Runs `E(t + 1) = p(t) E(t)` over the kernels of `env`, calling
/// `observer(t, &E(t))` for `t = 0` and after every step. Returns the final
/// field.
pub fn evolve_linear<I>(e0: &EnergyField, env: I, mut observer: impl FnMut(u64, &EnergyField)) -> Result<EnergyField>
where
    I: IntoIterator<Item = Result<EnvironmentKernel>>,
{
    let mut e = e0.clone();
    observer(0, &e);
    for (t, kernel) in env.into_iter().enumerate() {
        let kernel = kernel?;
        ensure_same(kernel.geometry(), e.geometry())?;
        e = kernel.apply(&e)?;
        observer(t as u64 + 1, &e);
    }
    Ok(e)
}

/// Collects every `E(t)`; for long runs prefer [`evolve_linear`] with an
/// observer.
pub fn evolve_linear_trajectory<I>(e0: &EnergyField, env: I) -> Result<Vec<EnergyField>>
where
    I: IntoIterator<Item = Result<EnvironmentKernel>>,
{
    let mut out = Vec::new();
    evolve_linear(e0, env, |_, e| out.push(e.clone()))?;
    Ok(out)
}

/// Kernels generated lazily from a θ trajectory: item `t` is built from
/// θ(t), linearised at `E = 0`.
#[derive(Clone, Debug)]
pub struct ThetaEnvironment {
    theta: ThetaField,
    model: ConductanceModel,
    map: ChaoticMapSpec,
    coupling: CouplingSpec,
    t: u64,
}

impl ThetaEnvironment {
    pub fn new(theta: ThetaField, model: ConductanceModel, map: ChaoticMapSpec, coupling: CouplingSpec) -> Self {
        Self { theta, model, map, coupling, t: 0 }
    }

    pub fn theta(&self) -> &ThetaField {
        &self.theta
    }
}

impl Iterator for ThetaEnvironment {
    type Item = Result<EnvironmentKernel>;

    fn next(&mut self) -> Option<Self::Item> {
        let kernel = self
            .model
            .environment(&self.theta)
            .and_then(|c| EnvironmentKernel::from_conductances(c, self.t));
        match theta_step(&self.theta, self.map, &self.coupling) {
            Ok(next) => self.theta = next,
            Err(e) => return Some(Err(e)),
        }
        self.t += 1;
        Some(kernel)
    }
}

/// A uniformly random permutation of `0..n`.
pub fn shuffled_blocks(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, 0));
    order
}

/// The first `horizon` kernels of a [`ThetaEnvironment`], replayed with
/// contiguous blocks of `block` steps in random order.
///
/// θ is checkpointed at block starts, so memory is `horizon / block` fields.
/// Blocks keep the short-time correlations of the environment while
/// destroying any long-time ordering.
#[derive(Clone, Debug)]
pub struct ShuffledEnvironment {
    checkpoints: Vec<ThetaField>,
    order: Vec<usize>,
    model: ConductanceModel,
    map: ChaoticMapSpec,
    coupling: CouplingSpec,
    block: usize,
    horizon: usize,
    position: usize,
    current: Option<ThetaEnvironment>,
}

impl ShuffledEnvironment {
    pub fn new(
        theta: ThetaField,
        model: ConductanceModel,
        map: ChaoticMapSpec,
        coupling: CouplingSpec,
        horizon: usize,
        block: usize,
        seed: u64,
    ) -> Result<Self> {
        if block == 0 || horizon % block != 0 {
            return Err(param("block", format!("block {block} must divide horizon {horizon}")));
        }
        let n_blocks = horizon / block;
        let mut checkpoints = Vec::with_capacity(n_blocks);
        let mut th = theta;
        for b in 0..n_blocks {
            checkpoints.push(th.clone());
            if b + 1 < n_blocks {
                for _ in 0..block {
                    th = theta_step(&th, map, &coupling)?;
                }
            }
        }
        Ok(Self {
            checkpoints,
            order: shuffled_blocks(n_blocks, seed),
            model,
            map,
            coupling,
            block,
            horizon,
            position: 0,
            current: None,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

impl Iterator for ShuffledEnvironment {
    type Item = Result<EnvironmentKernel>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.position == self.horizon {
            return None;
        }
        if self.position % self.block == 0 {
            let b = self.order[self.position / self.block];
            self.current = Some(ThetaEnvironment::new(
                self.checkpoints[b].clone(),
                self.model,
                self.map,
                self.coupling,
            ));
        }
        let t = self.position as u64;
        self.position += 1;
        let kernel = self.current.as_mut().expect("set at block start").next()?;
        Some(kernel.map(|k| k.with_time(t)))
    }
}
