use num_complex::Complex64;

use super::environment::{prolong, restrict};
use super::Decimation;
use crate::error::{param, Error, Result};
use crate::fourier;
use crate::lattice::{BondField, BondRole, Geometry};
use crate::rwre::{EnvironmentKernel, FluctuationMatrix, TransitionKernel};

/// The linear part of one RG step acting on bond noise, per axis `μ`:
///
/// `ℒc^μ(X, Y) = L^{d−1} Σ_{t<L²} Σ_u T^{L²−1−t}(LX − u) c^μ(u, t) T^t(u − LY)`.
///
/// Noise at time `t` is transported by `t` steps of `T` before it acts and by
/// the remaining `L² − 1 − t` steps afterwards.
pub struct LinearizedNoiseMap {
    fine: Geometry,
    coarse: Geometry,
    factor: usize,
    powers: Vec<TransitionKernel>,
    spectra: Vec<Vec<Complex64>>,
}

impl LinearizedNoiseMap {
    pub fn new(t: &TransitionKernel, factor: usize) -> Result<Self> {
        let fine = t.geometry();
        let coarse = fine.coarsen(factor)?;
        let steps = factor * factor;
        let base = t.spectrum();
        let spectra: Vec<Vec<Complex64>> =
            (0..steps).map(|s| base.iter().map(|z| z.powu(s as u32)).collect()).collect();
        let powers = spectra.iter().map(|s| TransitionKernel::from_raw(fourier::inverse_real(fine, s.clone()))).collect();
        Ok(Self { fine, coarse, factor, powers, spectra })
    }

    pub fn coarse_geometry(&self) -> Geometry {
        self.coarse
    }

    fn check(&self, noise: &[BondField]) -> Result<()> {
        let steps = self.factor * self.factor;
        if noise.len() != steps {
            return Err(param("noise", format!("{} time steps, expected L² = {steps}", noise.len())));
        }
        if noise.iter().any(|c| c.geometry() != self.fine) {
            return Err(Error::GeometryMismatch("noise and kernel lattices differ".into()));
        }
        Ok(())
    }

    fn fine_site(&self, coarse_site: usize) -> usize {
        let mut c = self.coarse.coords(coarse_site);
        for slot in c.iter_mut().take(self.coarse.dim()) {
            *slot *= self.factor;
        }
        self.fine.index(&c)
    }

    fn amp(&self) -> f64 {
        (self.factor as f64).powi(self.fine.dim() as i32 - 1)
    }

    /// Single entry `ℒc^μ(X, Y)`, by direct summation.
    pub fn entry(&self, noise: &[BondField], mu: usize, x: usize, y: usize) -> Result<f64> {
        self.check(noise)?;
        let g = self.fine;
        let (lx, ly) = (self.fine_site(x), self.fine_site(y));
        let last = self.powers.len() - 1;
        let mut total = 0.0;
        for (t, c) in noise.iter().enumerate() {
            let (after, before) = (&self.powers[last - t], &self.powers[t]);
            for u in 0..g.sites() {
                total += after.values()[g.difference(lx, u)] * c.get(u, mu) * before.values()[g.difference(u, ly)];
            }
        }
        Ok(self.amp() * total)
    }

    /// All entries, one coarse matrix per axis.
    pub fn apply(&self, noise: &[BondField]) -> Result<Vec<FluctuationMatrix>> {
        self.check(noise)?;
        let g = self.fine;
        let n = self.coarse.sites();
        let last = self.powers.len() - 1;
        let amp = self.amp();
        (0..g.dim())
            .map(|mu| {
                let mut values = vec![0.0; n * n];
                for y in 0..n {
                    let ly = self.fine_site(y);
                    let mut acc = vec![Complex64::default(); g.sites()];
                    for (t, c) in noise.iter().enumerate() {
                        let before = &self.powers[t];
                        let w: Vec<Complex64> = (0..g.sites())
                            .map(|u| Complex64::new(c.get(u, mu) * before.values()[g.difference(u, ly)], 0.0))
                            .collect();
                        let spec = fourier::forward_complex(g, w);
                        for ((a, s), p) in acc.iter_mut().zip(&spec).zip(&self.spectra[last - t]) {
                            *a += s * p;
                        }
                    }
                    let out = fourier::inverse_real(g, acc);
                    for x in 0..n {
                        values[y * n + x] = amp * out.values()[self.fine_site(x)];
                    }
                }
                FluctuationMatrix::new(self.coarse, values)
            })
            .collect()
    }
}

/// Convenience wrapper over [`LinearizedNoiseMap::apply`].
pub fn linearized_noise_map(noise: &[BondField], t: &TransitionKernel, factor: usize) -> Result<Vec<FluctuationMatrix>> {
    for c in noise {
        if c.role() != BondRole::Noise {
            return Err(param("noise", "expected bond noise fields"));
        }
    }
    LinearizedNoiseMap::new(t, factor)?.apply(noise)
}

/// Single entry of [`linearized_noise_map`].
pub fn linearized_noise_entry(noise: &[BondField], t: &TransitionKernel, factor: usize, mu: usize, x: usize, y: usize) -> Result<f64> {
    if mu >= t.geometry().dim() {
        return Err(param("mu", format!("axis {mu} out of range")));
    }
    LinearizedNoiseMap::new(t, factor)?.entry(noise, mu, x, y)
}

/// Column `y` of the first-order response of one RG step to the kernel
/// fluctuations `N_t = p(t) − T`:
/// `R (Σ_t T^{L²−1−t} N_t T^t) U e_y`.
///
/// The difference between the exact renormalized column and this one is the
/// part of `δp'` that is quadratic and higher in the noise.
pub fn linear_response_column(
    env: &[EnvironmentKernel],
    t: &EnvironmentKernel,
    factor: usize,
    mode: Decimation,
    y: usize,
) -> Result<Vec<f64>> {
    if mode == Decimation::Spectral {
        return Err(Error::Unsupported("spectral decimation of environments".into()));
    }
    let fine = t.geometry();
    let coarse = fine.coarsen(factor)?;
    if env.len() != factor * factor {
        return Err(param("environment", format!("{} kernels, expected L²", env.len())));
    }
    let mut e = vec![0.0; coarse.sites()];
    e[y] = 1.0;
    let mut f = prolong(fine, coarse, factor, mode, &e);
    let mut acc = vec![0.0; fine.sites()];
    for p in env {
        let pf = p.apply_values(&f);
        let tf = t.apply_values(&f);
        let mut next = t.apply_values(&acc);
        for ((a, x), z) in next.iter_mut().zip(&pf).zip(&tf) {
            *a += x - z;
        }
        acc = next;
        f = tf;
    }
    Ok(restrict(fine, coarse, factor, mode, &acc))
}
