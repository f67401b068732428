use num_complex::Complex64;

use super::{scale_field, Decimation};
use crate::error::{param, Result};
use crate::fourier;
use crate::lattice::{ScalarField, MAX_DIM};
use crate::rwre::TransitionKernel;

/// One RG step for a translation-invariant kernel: `L²` self-convolutions
/// followed by decimation.
///
/// Block-sum mode is the kernel seen by block-summed fields,
/// `T'(Z) = Σ_{a,b ∈ [0,L)^d} L^{-d} T^{L²}(LZ + a − b)`, so it is stochastic
/// and matches [`super::EnvironmentHierarchy`] applied to a homogeneous
/// environment.
pub fn renormalize_kernel(t: &TransitionKernel, factor: usize, mode: Decimation) -> Result<TransitionKernel> {
    let g = t.geometry();
    g.coarsen(factor)?;
    let steps = (factor * factor) as u32;
    let powered: Vec<Complex64> = t.spectrum().into_iter().map(|z| z.powu(steps)).collect();
    let out = match mode {
        Decimation::Spectral => {
            let (coarse, spec) = fourier::truncate_spectrum(g, &powered, factor)?;
            fourier::inverse_real(coarse, spec)
        }
        Decimation::PointSample => scale_field(&fourier::inverse_real(g, powered), factor, mode)?,
        Decimation::BlockSum => {
            let p = fourier::inverse_real(g, powered);
            let d = g.dim();
            let amp = (factor as f64).powi(-(d as i32));
            let mut q = vec![0.0; g.sites()];
            for b in 0..factor.pow(d as u32) {
                let mut shift = [0usize; MAX_DIM];
                let mut rest = b;
                for slot in shift.iter_mut().take(d) {
                    *slot = rest % factor;
                    rest /= factor;
                }
                let by = g.index(&shift);
                for (z, v) in p.values().iter().enumerate() {
                    q[g.translate(z, by)] += amp * v;
                }
            }
            scale_field(&ScalarField::new(g, q)?, factor, mode)?
        }
    };
    Ok(TransitionKernel::from_raw(out))
}

/// `c = −ln T̂(k₁) / |k₁|²` at the smallest nonzero momentum along the
/// first axis.
pub fn estimate_c(t: &TransitionKernel) -> f64 {
    let k1 = 2.0 * std::f64::consts::PI / t.geometry().side() as f64;
    let mut k = [0.0; MAX_DIM];
    k[0] = k1;
    -t.symbol(&k).re.ln() / (k1 * k1)
}

/// `sup_{|k| ≤ π/2} |T̂(k) − e^{−c|k|²}|` over the lattice momenta of `t`.
pub fn kernel_fixed_point_distance(t: &TransitionKernel, c: f64) -> f64 {
    let g = t.geometry();
    let window = std::f64::consts::FRAC_PI_2;
    t.spectrum()
        .iter()
        .enumerate()
        .filter_map(|(m, z)| {
            let k = g.momentum(m);
            let k2: f64 = k.iter().map(|v| v * v).sum();
            (k2.sqrt() <= window).then(|| (z - Complex64::new((-c * k2).exp(), 0.0)).norm())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct RgKernelFlow {
    /// `T_0, ..., T_{n_max}`.
    pub kernels: Vec<TransitionKernel>,
    /// `c_n` estimates from [`estimate_c`].
    pub c: Vec<f64>,
    /// Fixed-point distances against the reference `c` of the run.
    pub distances: Vec<f64>,
}

/// Iterates [`renormalize_kernel`] `n_max` times. Distances are measured
/// against `e^{−c_ref k²}`.
pub fn kernel_flow(t0: &TransitionKernel, factor: usize, n_max: usize, mode: Decimation, c_ref: f64) -> Result<RgKernelFlow> {
    if !(c_ref > 0.0) {
        return Err(param("c", format!("fixed-point parameter must be positive, got {c_ref}")));
    }
    let mut kernels = vec![t0.clone()];
    for _ in 0..n_max {
        let next = renormalize_kernel(kernels.last().expect("non-empty"), factor, mode)?;
        kernels.push(next);
    }
    let c = kernels.iter().map(estimate_c).collect();
    let distances = kernels.iter().map(|k| kernel_fixed_point_distance(k, c_ref)).collect();
    Ok(RgKernelFlow { kernels, c, distances })
}

/// Point-sampled symbol including the aliased copies,
/// `Σ_{j ∈ Z_L^d} T̂((k + 2πj)/L)^{L²}`, evaluated from the fine kernel.
pub fn point_sample_symbol(t: &TransitionKernel, factor: usize, k: &[f64; MAX_DIM]) -> Complex64 {
    let d = t.geometry().dim();
    let steps = (factor * factor) as u32;
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..factor.pow(d as u32))
        .map(|j| {
            let mut q = [0.0; MAX_DIM];
            let mut rest = j;
            for a in 0..d {
                q[a] = (k[a] + two_pi * (rest % factor) as f64) / factor as f64;
                rest /= factor;
            }
            t.symbol(&q).powu(steps)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;

    fn lazy(dim: usize, side: usize, kappa: f64) -> TransitionKernel {
        TransitionKernel::lazy_walk(Geometry::new(dim, side).unwrap(), kappa).unwrap()
    }

    /// Lazy-walk symbol written out by hand.
    fn lazy_symbol(kappa: f64, k: &[f64]) -> f64 {
        1.0 - 2.0 * kappa * k.iter().map(|v| 1.0 - v.cos()).sum::<f64>()
    }

    #[test]
    fn spectral_mode_matches_rescaled_symbol() {
        for (dim, side) in [(1, 256), (2, 32)] {
            let t = lazy(dim, side, 0.2 / dim as f64);
            let out = renormalize_kernel(&t, 4, Decimation::Spectral).unwrap();
            let spec = out.spectrum();
            let g = out.geometry();
            for (m, z) in spec.iter().enumerate() {
                let k = g.momentum(m);
                let scaled: Vec<f64> = k[..dim].iter().map(|v| v / 4.0).collect();
                let want = lazy_symbol(0.2 / dim as f64, &scaled).powi(16);
                assert!((z.re - want).abs() < 1e-10 && z.im.abs() < 1e-10, "m={m}");
            }
        }
    }

    #[test]
    fn point_sample_matches_aliased_symbol() {
        let t = lazy(1, 128, 0.2);
        let out = renormalize_kernel(&t, 4, Decimation::PointSample).unwrap();
        let g = out.geometry();
        for (m, z) in out.spectrum().iter().enumerate() {
            let k = g.momentum(m);
            let want: f64 = (0..4)
                .map(|j| lazy_symbol(0.2, &[(k[0] + 2.0 * std::f64::consts::PI * j as f64) / 4.0]).powi(16))
                .sum();
            assert!((z.re - want).abs() < 1e-10);
            assert!((point_sample_symbol(&t, 4, &k) - z).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_is_fixed_and_block_sum_is_stochastic() {
        let g = Geometry::new(2, 16).unwrap();
        for mode in [Decimation::PointSample, Decimation::BlockSum, Decimation::Spectral] {
            let out = renormalize_kernel(&TransitionKernel::identity(g), 4, mode).unwrap();
            let want = if mode == Decimation::PointSample { 16.0 } else { 1.0 };
            assert!((out.values()[0] - want).abs() < 1e-12, "{mode}");
        }
        let mut t = lazy(2, 64, 0.1);
        for _ in 0..2 {
            t = renormalize_kernel(&t, 4, Decimation::BlockSum).unwrap();
            assert!((t.total() - 1.0).abs() < 1e-12);
            assert!(t.min() > -1e-15);
        }
    }

    #[test]
    fn spectral_semigroup() {
        let t = lazy(1, 256, 0.2);
        let twice = renormalize_kernel(&renormalize_kernel(&t, 2, Decimation::Spectral).unwrap(), 2, Decimation::Spectral).unwrap();
        let once = renormalize_kernel(&t, 4, Decimation::Spectral).unwrap();
        let diff = twice.field().difference(once.field()).unwrap().max_abs();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn sampled_gaussian_is_near_fixed_point() {
        let g = Geometry::new(1, 64).unwrap();
        let c = 0.5;
        let raw = ScalarField::from_fn(g, |z| {
            let x = g.displacement(z)[0];
            (-x * x / (4.0 * c)).exp()
        });
        let total: f64 = raw.values().iter().sum();
        let t = TransitionKernel::new(raw.scaled(1.0 / total)).unwrap();
        assert!(kernel_fixed_point_distance(&t, c) < 1e-3);
        let k1 = 2.0 * std::f64::consts::PI / 64.0;
        let bound = ((-k1 * k1 * c).exp() - (-2.0 * k1 * k1 * c).exp()).abs();
        assert!(kernel_fixed_point_distance(&t, 2.0 * c) >= bound - 1e-3);
        assert!((estimate_c(&t) - c).abs() < 1e-3);
    }

    #[test]
    fn lazy_walk_flow_approaches_fixed_point() {
        let t = lazy(1, 1024, 0.2);
        let flow = kernel_flow(&t, 4, 3, Decimation::Spectral, 0.2).unwrap();
        for w in flow.distances[1..].windows(2) {
            assert!(w[1] < w[0], "{:?}", flow.distances);
        }
        assert!(flow.c.iter().all(|c| (c - 0.2).abs() < 1e-2), "{:?}", flow.c);
        assert!(kernel_flow(&t, 4, 1, Decimation::Spectral, 0.0).is_err());
    }
}
