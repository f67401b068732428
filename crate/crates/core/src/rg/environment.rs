use super::{renormalize_kernel, Decimation};
use crate::error::{param, Error, Result};
use crate::lattice::{Geometry, MAX_DIM};
use crate::rwre::{CscMatrix, EnvironmentKernel, FluctuationMatrix, TransitionKernel};

/// Coarse vector to fine vector: the right inverse of [`restrict`].
pub(crate) fn prolong(fine: Geometry, coarse: Geometry, factor: usize, mode: Decimation, v: &[f64]) -> Vec<f64> {
    let d = fine.dim();
    let mut out = vec![0.0; fine.sites()];
    match mode {
        Decimation::BlockSum => {
            let amp = (factor as f64).powi(-(d as i32));
            for (x, slot) in out.iter_mut().enumerate() {
                *slot = amp * v[block_of(fine, coarse, factor, x)];
            }
        }
        _ => {
            for (y, val) in v.iter().enumerate() {
                out[fine.index(&scaled_coords(coarse, factor, y))] = *val;
            }
        }
    }
    out
}

/// Fine vector to coarse vector: block sums, or `L^d w(LX)`.
pub(crate) fn restrict(fine: Geometry, coarse: Geometry, factor: usize, mode: Decimation, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; coarse.sites()];
    match mode {
        Decimation::BlockSum => {
            for (x, val) in w.iter().enumerate() {
                out[block_of(fine, coarse, factor, x)] += val;
            }
        }
        _ => {
            let amp = (factor as f64).powi(fine.dim() as i32);
            for (y, slot) in out.iter_mut().enumerate() {
                *slot = amp * w[fine.index(&scaled_coords(coarse, factor, y))];
            }
        }
    }
    out
}

fn block_of(fine: Geometry, coarse: Geometry, factor: usize, x: usize) -> usize {
    let mut c = fine.coords(x);
    for slot in c.iter_mut().take(fine.dim()) {
        *slot /= factor;
    }
    coarse.index(&c)
}

fn scaled_coords(coarse: Geometry, factor: usize, y: usize) -> [usize; MAX_DIM] {
    let mut c = coarse.coords(y);
    for slot in c.iter_mut().take(coarse.dim()) {
        *slot *= factor;
    }
    c
}

/// Renormalized environment kernels applied without forming matrices.
///
/// The level-`n` kernel with index `i` is
/// `p_n(i) = R ∘ p_{n−1}(i L² + L² − 1) ⋯ p_{n−1}(i L²) ∘ U`
/// where `R` restricts and `U` prolongs between consecutive levels.
pub struct EnvironmentHierarchy<'a> {
    kernels: &'a [EnvironmentKernel],
    geometries: Vec<Geometry>,
    factor: usize,
    mode: Decimation,
}

impl<'a> EnvironmentHierarchy<'a> {
    /// `kernels` must hold exactly `L^{2 levels}` time steps.
    pub fn new(kernels: &'a [EnvironmentKernel], factor: usize, levels: usize, mode: Decimation) -> Result<Self> {
        if mode == Decimation::Spectral {
            return Err(Error::Unsupported("spectral decimation is defined for translation-invariant kernels only".into()));
        }
        let first = kernels.first().ok_or_else(|| param("environment", "empty trajectory"))?;
        let steps = factor.pow(2 * levels as u32);
        if kernels.len() != steps {
            return Err(param("environment", format!("{} kernels, expected L^(2n) = {steps}", kernels.len())));
        }
        let mut geometries = vec![first.geometry()];
        for _ in 0..levels {
            let next = geometries.last().expect("non-empty").coarsen(factor)?;
            geometries.push(next);
        }
        if kernels.iter().any(|k| k.geometry() != geometries[0]) {
            return Err(Error::GeometryMismatch("environment kernels on different lattices".into()));
        }
        Ok(Self { kernels, geometries, factor, mode })
    }

    pub fn levels(&self) -> usize {
        self.geometries.len() - 1
    }

    pub fn geometry(&self, level: usize) -> Geometry {
        self.geometries[level]
    }

    /// Number of level-`n` kernels.
    pub fn blocks(&self, level: usize) -> usize {
        self.kernels.len() / self.factor.pow(2 * level as u32)
    }

    pub fn apply(&self, level: usize, index: usize, v: &[f64]) -> Vec<f64> {
        if level == 0 {
            return self.kernels[index].apply_values(v);
        }
        let (fine, coarse) = (self.geometries[level - 1], self.geometries[level]);
        let mut u = prolong(fine, coarse, self.factor, self.mode, v);
        let steps = self.factor * self.factor;
        for s in 0..steps {
            u = self.apply(level - 1, index * steps + s, &u);
        }
        restrict(fine, coarse, self.factor, self.mode, &u)
    }

    /// Column `y` of the level-`n` kernel `index`.
    pub fn column(&self, level: usize, index: usize, y: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.geometries[level].sites()];
        e[y] = 1.0;
        self.apply(level, index, &e)
    }

    /// Column `y` of `δp_n = p_n − T_n`.
    pub fn fluctuation_column(&self, level: usize, index: usize, y: usize, t_n: &TransitionKernel) -> Vec<f64> {
        let g = self.geometries[level];
        let mut col = self.column(level, index, y);
        for (z, v) in t_n.values().iter().enumerate() {
            col[g.translate(y, z)] -= v;
        }
        col
    }

    /// Full `δp_n` of one level-`n` kernel.
    pub fn fluctuation(&self, level: usize, index: usize, t_n: &TransitionKernel) -> Result<FluctuationMatrix> {
        let n = self.geometries[level].sites();
        let values = (0..n).flat_map(|y| self.fluctuation_column(level, index, y, t_n)).collect();
        FluctuationMatrix::new(self.geometries[level], values)
    }
}

#[derive(Clone, Debug)]
pub struct RenormalizedEnvironment {
    pub kernel: EnvironmentKernel,
    pub transition: TransitionKernel,
    pub delta_p: FluctuationMatrix,
}

/// One RG step of an environment of `L²` kernels: `p' = R p(L²−1)⋯p(0) U`
/// and `δp = p' − T'` with `T'` from [`renormalize_kernel`].
pub fn renormalize_environment(
    env: &[EnvironmentKernel],
    t: &TransitionKernel,
    factor: usize,
    mode: Decimation,
) -> Result<RenormalizedEnvironment> {
    let hier = EnvironmentHierarchy::new(env, factor, 1, mode)?;
    let coarse = hier.geometry(1);
    let columns = (0..coarse.sites())
        .map(|y| hier.column(1, 0, y).into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect())
        .collect();
    let matrix = CscMatrix::from_columns(coarse.sites(), columns);
    let transition = renormalize_kernel(t, factor, mode)?;
    let delta_p = FluctuationMatrix::difference(&matrix, &transition)?;
    let time = env[0].time() / (factor * factor) as u64;
    let kernel = EnvironmentKernel::from_sparse(coarse, matrix, time)?;
    Ok(RenormalizedEnvironment { kernel, transition, delta_p })
}

/// Column `y` of a single renormalized kernel, for callers that hold an
/// environment of `L²` kernels and need one column only.
pub fn renormalized_column(env: &[EnvironmentKernel], factor: usize, mode: Decimation, y: usize) -> Result<Vec<f64>> {
    Ok(EnvironmentHierarchy::new(env, factor, 1, mode)?.column(1, 0, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaoticMapSpec, CouplingSpec, Manifold, ThetaField};
    use crate::energy::ConductanceModel;
    use crate::lattice::compensated_sum;
    use crate::rng::stream;
    use crate::rwre::ThetaEnvironment;

    fn random_env(dim: usize, side: usize, steps: usize, seed: u64) -> Vec<EnvironmentKernel> {
        let g = Geometry::new(dim, side).unwrap();
        let theta = ThetaField::uniform(g, Manifold::Torus2, &mut stream(seed, 0));
        let model = ConductanceModel::new(0.1 / dim as f64, 0.5, 0.0, dim).unwrap();
        ThetaEnvironment::new(theta, model, ChaoticMapSpec::CatMap, CouplingSpec::nearest_neighbor(0.05).unwrap())
            .take(steps)
            .collect::<Result<_>>()
            .unwrap()
    }

    fn dense_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let bkj = b[j * n + k];
                if bkj != 0.0 {
                    for i in 0..n {
                        out[j * n + i] += a[k * n + i] * bkj;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn noiseless_environment_has_no_fluctuation() {
        let g = Geometry::new(1, 32).unwrap();
        let env: Vec<_> = (0..16).map(|t| EnvironmentKernel::homogeneous(g, 0.2, t).unwrap()).collect();
        let t = TransitionKernel::lazy_walk(g, 0.2).unwrap();
        for mode in [Decimation::BlockSum, Decimation::PointSample] {
            let out = renormalize_environment(&env, &t, 4, mode).unwrap();
            assert!(out.delta_p.sup() < 1e-14, "{mode}: {}", out.delta_p.sup());
        }
    }

    #[test]
    fn frozen_environment_matches_dense_power() {
        // 64 fine sites, L = 2: p' = L^d p^{L²} sampled at (LX, LY)
        let env = random_env(1, 64, 1, 3);
        let frozen: Vec<_> = (0..4).map(|t| env[0].clone().with_time(t)).collect();
        let g = env[0].geometry();
        let n = g.sites();
        let p = env[0].to_sparse().to_dense();
        let mut power = CscMatrix::identity(n).to_dense();
        for _ in 0..4 {
            power = dense_mul(n, &p, &power);
        }
        let t = TransitionKernel::lazy_walk(g, 0.1).unwrap();
        let out = renormalize_environment(&frozen, &t, 2, Decimation::PointSample).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let want = 2.0 * power[(2 * y) * n + 2 * x];
                assert!((out.kernel.entry(x, y) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_sum_keeps_columns_stochastic() {
        let env = random_env(2, 16, 16, 9);
        let t = TransitionKernel::lazy_walk(env[0].geometry(), 0.05).unwrap();
        let out = renormalize_environment(&env, &t, 4, Decimation::BlockSum).unwrap();
        assert!(out.kernel.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(out.delta_p.column_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(renormalize_environment(&env[..15], &t, 4, Decimation::BlockSum).is_err());
        assert!(renormalize_environment(&env, &t, 4, Decimation::Spectral).is_err());
    }

    #[test]
    fn hierarchy_levels_compose() {
        let env = random_env(1, 64, 16, 1);
        let h2 = EnvironmentHierarchy::new(&env, 2, 2, Decimation::BlockSum).unwrap();
        assert_eq!(h2.blocks(1), 4);
        let v: Vec<f64> = (0..16).map(|i| (i as f64).sin().abs()).collect();
        // level-2 step equals R U R (p..p) U U with the level-1 kernels composed
        let mut first_level: Vec<EnvironmentKernel> = Vec::new();
        for i in 0..4 {
            let r = renormalize_environment(&env[4 * i..4 * i + 4], &TransitionKernel::lazy_walk(env[0].geometry(), 0.1).unwrap(), 2, Decimation::BlockSum).unwrap();
            first_level.push(r.kernel);
        }
        let direct = renormalize_environment(&first_level, &TransitionKernel::lazy_walk(first_level[0].geometry(), 0.1).unwrap(), 2, Decimation::BlockSum).unwrap();
        let out = h2.apply(2, 0, &v);
        let want = direct.kernel.apply_values(&v);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
        let before = compensated_sum(v.iter().copied());
        assert!((compensated_sum(out.iter().copied()) - before).abs() < 1e-12);
    }
}
