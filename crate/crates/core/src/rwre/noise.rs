use std::collections::BTreeMap;

use super::environment::{CscMatrix, EnvironmentKernel};
use super::kernel::TransitionKernel;
use crate::error::{param, Error, Result};
use crate::lattice::{compensated_sum, ensure_same, BondField, BondRole, Geometry};

/// Dense site-pair field `δp(x, y)`, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationMatrix {
    geometry: Geometry,
    values: Vec<f64>,
}

impl FluctuationMatrix {
    pub fn zeros(g: Geometry) -> Self {
        Self { geometry: g, values: vec![0.0; g.sites() * g.sites()] }
    }

    pub fn new(g: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.sites() * g.sites() {
            return Err(Error::GeometryMismatch(format!(
                "{} entries for a {}-site lattice",
                values.len(),
                g.sites()
            )));
        }
        Ok(Self { geometry: g, values })
    }

    /// `p − T` with `T` read as the matrix `T(x − y)`.
    pub fn difference(p: &CscMatrix, t: &TransitionKernel) -> Result<Self> {
        let g = t.geometry();
        if p.dim() != g.sites() {
            return Err(Error::GeometryMismatch("kernel and matrix sizes differ".into()));
        }
        let n = g.sites();
        let mut values = vec![0.0; n * n];
        for y in 0..n {
            let col = &mut values[y * n..(y + 1) * n];
            for (z, tz) in t.values().iter().enumerate() {
                if *tz != 0.0 {
                    col[g.translate(y, z)] -= tz;
                }
            }
            for (x, v) in p.column(y) {
                col[x] += v;
            }
        }
        Ok(Self { geometry: g, values })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.geometry.sites() + x]
    }

    pub fn column(&self, y: usize) -> &[f64] {
        let n = self.geometry.sites();
        &self.values[y * n..(y + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.geometry.sites())
            .map(|y| compensated_sum(self.column(y).iter().copied()))
            .collect()
    }

    /// `max_x |δp(x, y)|`.
    pub fn column_sup(&self, y: usize) -> f64 {
        self.column(y).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mean over columns of `Σ_x δp(x, y)²`.
    pub fn mean_column_square(&self) -> f64 {
        let n = self.geometry.sites();
        compensated_sum((0..n).map(|y| self.column(y).iter().map(|v| v * v).sum::<f64>())) / n as f64
    }
}

/// Bond fluctuation `c(x, μ) = p_{x,x+e_μ} − T(−e_μ)` of a one-step kernel.
///
/// With this field `p = T + ∇·(c ∇)` holds exactly for symmetric `T`; see
/// [`noise_residual`].
pub fn noise_decomposition(p: &EnvironmentKernel, t: &TransitionKernel) -> Result<BondField> {
    ensure_same(p.geometry(), t.geometry())?;
    let c = p.conductances().ok_or_else(|| {
        Error::Unsupported("kernel is not bond-supported; use coarse_noise_proxy instead".into())
    })?;
    let g = p.geometry();
    let mut back = [0isize; 3];
    let mut values = Vec::with_capacity(g.bonds());
    let t_back: Vec<f64> = (0..g.dim())
        .map(|mu| {
            back = [0; 3];
            back[mu] = -1;
            t.at(&back)
        })
        .collect();
    for x in 0..g.sites() {
        for (mu, tb) in t_back.iter().enumerate() {
            values.push(c.get(x, mu) - tb);
        }
    }
    BondField::new(g, BondRole::Noise, values)
}

/// One-step kernel with conductances `T(−e_μ) + c(x, μ)`.
pub fn reconstruct_kernel(t: &TransitionKernel, noise: &BondField) -> Result<EnvironmentKernel> {
    ensure_same(t.geometry(), noise.geometry())?;
    let g = t.geometry();
    let mut values = Vec::with_capacity(g.bonds());
    for x in 0..g.sites() {
        for mu in 0..g.dim() {
            let mut back = [0isize; 3];
            back[mu] = -1;
            values.push(t.at(&back) + noise.get(x, mu));
        }
    }
    EnvironmentKernel::from_conductances(BondField::new(g, BondRole::Conductance, values)?, 0)
}

/// `max_{x,y} |p_xy − T(x − y) − (∇·c∇)_xy|`.
pub fn noise_residual(p: &EnvironmentKernel, t: &TransitionKernel, noise: &BondField) -> Result<f64> {
    ensure_same(p.geometry(), t.geometry())?;
    ensure_same(p.geometry(), noise.geometry())?;
    let g = p.geometry();
    let m = p.to_sparse();
    let t_support: Vec<(usize, f64)> = t.values().iter().copied().enumerate().filter(|e| e.1 != 0.0).collect();
    let mut worst: f64 = 0.0;
    for y in 0..g.sites() {
        let mut col: BTreeMap<usize, f64> = BTreeMap::new();
        for (x, v) in m.column(y) {
            *col.entry(x).or_default() += v;
        }
        for (z, tz) in &t_support {
            *col.entry(g.translate(y, *z)).or_default() -= tz;
        }
        for mu in 0..g.dim() {
            let fwd = g.neighbor(y, mu, true);
            let bwd = g.neighbor(y, mu, false);
            let (cf, cb) = (noise.get(y, mu), noise.get(bwd, mu));
            *col.entry(fwd).or_default() -= cf;
            *col.entry(bwd).or_default() -= cb;
            *col.entry(y).or_default() += cf + cb;
        }
        worst = col.values().fold(worst, |w, v| w.max(v.abs()));
    }
    Ok(worst)
}

/// Raw fluctuation `δp = p − T`, the stand-in for the noise of kernels that
/// are not bond-supported.
pub fn coarse_noise_proxy(p: &EnvironmentKernel, t: &TransitionKernel) -> Result<FluctuationMatrix> {
    ensure_same(p.geometry(), t.geometry())?;
    FluctuationMatrix::difference(&p.to_sparse(), t)
}

/// In one dimension a column with zero sum is a discrete derivative:
/// `δp(x, y) = F(x, y) − F(x − 1, y)`, where `F(x, y)` is the current across
/// bond `(x, x + 1)` carried by unit mass started at `y`. Returns `F`, summed
/// from the site opposite to `y`.
///
/// For a one-step kernel, `F(y − 1, y) = c(y − 1)` and `F(y, y) = −c(y)`.
pub fn extract_noise_1d(delta_p: &FluctuationMatrix) -> Result<FluctuationMatrix> {
    let g = delta_p.geometry();
    if g.dim() != 1 {
        return Err(Error::Unsupported("cumulative-sum extraction needs d = 1".into()));
    }
    let n = g.sites();
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        let col = delta_p.column(y);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let total = compensated_sum(col.iter().copied());
        if total.abs() > 1e-9 * scale.max(1.0) {
            return Err(param("delta_p", format!("column {y} sums to {total}, not 0")));
        }
        let start = (y + n / 2) % n;
        let mut acc = 0.0;
        for i in 0..n {
            let x = (start + i) % n;
            acc += col[x];
            out[y * n + x] = acc;
        }
    }
    FluctuationMatrix::new(g, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{Manifold, ThetaField};
    use crate::energy::ConductanceModel;
    use crate::rng::stream;
    use crate::rwre::transition_matrix;

    fn random_env(g: Geometry, seed: u64) -> EnvironmentKernel {
        let model = ConductanceModel::new(0.1, 0.5, 0.0, g.dim()).unwrap();
        let theta = ThetaField::uniform(g, Manifold::Torus2, &mut stream(seed, 0));
        transition_matrix(&model.environment(&theta).unwrap()).unwrap()
    }

    #[test]
    fn homogeneous_kernel_has_no_noise() {
        let g = Geometry::new(2, 4).unwrap();
        let p = EnvironmentKernel::homogeneous(g, 0.1, 0).unwrap();
        let t = TransitionKernel::lazy_walk(g, 0.1).unwrap();
        assert!(noise_decomposition(&p, &t).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_bond_perturbation_is_local() {
        let g = Geometry::new(2, 4).unwrap();
        let mut c = BondField::constant(g, BondRole::Conductance, 0.1).unwrap();
        c.set(6, 1, 0.1 + 0.03);
        let p = transition_matrix(&c).unwrap();
        let noise = noise_decomposition(&p, &TransitionKernel::lazy_walk(g, 0.1).unwrap()).unwrap();
        let nonzero: Vec<usize> = noise.values().iter().enumerate().filter(|e| *e.1 != 0.0).map(|e| e.0).collect();
        assert_eq!(nonzero, vec![6 * 2 + 1]);
        assert!((noise.get(6, 1) - 0.03).abs() < 1e-16);
    }

    #[test]
    fn decomposition_roundtrip_is_exact() {
        for dim in 1..=3 {
            let g = Geometry::new(dim, 4).unwrap();
            let p = random_env(g, 10 + dim as u64);
            let t = TransitionKernel::lazy_walk(g, 0.1).unwrap();
            let c = noise_decomposition(&p, &t).unwrap();
            assert!(noise_residual(&p, &t, &c).unwrap() <= 1e-14);
            let back = reconstruct_kernel(&t, &c).unwrap();
            let (a, b) = (p.to_sparse().to_dense(), back.to_sparse().to_dense());
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-14));
        }
    }

    #[test]
    fn composed_kernels_need_the_proxy() {
        let g = Geometry::new(1, 8).unwrap();
        let p = random_env(g, 1).compose(&random_env(g, 2)).unwrap();
        let t = TransitionKernel::lazy_walk(g, 0.1).unwrap();
        let err = noise_decomposition(&p, &t).unwrap_err();
        assert!(err.to_string().contains("coarse_noise_proxy"));
        let proxy = coarse_noise_proxy(&p, &t.power(2)).unwrap();
        assert!(proxy.column_sums().iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn one_dimensional_extraction_recovers_bond_noise() {
        let g = Geometry::new(1, 8).unwrap();
        let p = random_env(g, 3);
        let t = TransitionKernel::lazy_walk(g, 0.1).unwrap();
        let c = noise_decomposition(&p, &t).unwrap();
        let flux = extract_noise_1d(&coarse_noise_proxy(&p, &t).unwrap()).unwrap();
        for y in 0..8 {
            assert!((flux.get(y, y) + c.get(y, 0)).abs() < 1e-15);
            assert!((flux.get((y + 7) % 8, y) - c.get((y + 7) % 8, 0)).abs() < 1e-15);
        }
    }
}
