use std::f64::consts::PI;

use super::centroid;
use crate::error::{param, Result};
use crate::lattice::{weighted_sup_norm_about, ScalarField, MAX_DIM};

/// `C = M / (4πκ)^{d/2}`, the amplitude that gives the Gaussian mass `M`.
pub fn profile_amplitude(mass: f64, kappa: f64, dim: usize) -> f64 {
    mass / (4.0 * PI * kappa).powf(dim as f64 / 2.0)
}

/// `C t^{−d/2} e^{−|x−x̄|²/(4κt)}` sampled on the lattice of `like`.
pub fn gaussian_profile(like: &ScalarField, center: &[f64; MAX_DIM], t: f64, kappa: f64, mass: f64) -> ScalarField {
    let g = like.geometry();
    let d = g.dim();
    let amp = profile_amplitude(mass, kappa, d) * t.powf(-(d as f64) / 2.0);
    ScalarField::from_fn(g, |x| {
        let c = g.coords(x);
        let r2: f64 = (0..d).map(|a| g.min_image(c[a] as f64 - center[a]).powi(2)).sum();
        amp * (-r2 / (4.0 * kappa * t)).exp()
    })
}

/// Weighted sup distance between `e` and the centroid-centred Gaussian of
/// mass `mass`, diffusion constant `kappa` at time `t`.
pub fn gaussian_profile_distance(e: &ScalarField, t: f64, kappa: f64, mass: f64, a_exp: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(param("t", format!("profile time must be at least 1, got {t}")));
    }
    if !(kappa > 0.0) {
        return Err(param("kappa", format!("must be positive, got {kappa}")));
    }
    let center = centroid(e);
    let target = gaussian_profile(e, &center, t, kappa, mass);
    weighted_sup_norm_about(&e.difference(&target)?, a_exp, &center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::centroid;
    use crate::lattice::{weighted_sup_norm, Geometry};
    use crate::rg::{scale_field, Decimation};

    #[test]
    fn exact_gaussian_has_zero_distance() {
        let g = Geometry::new(2, 32).unwrap();
        let like = ScalarField::zeros(g);
        let e = gaussian_profile(&like, &[0.0; 3], 3.0, 0.1, 2.0);
        assert!(gaussian_profile_distance(&e, 3.0, 0.1, 2.0, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn zero_mass_reduces_to_the_norm() {
        let g = Geometry::new(1, 32).unwrap();
        let e = ScalarField::delta(g, 0, 0.5);
        let d = gaussian_profile_distance(&e, 1.0, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(d, weighted_sup_norm(&e, 1.0, 0).unwrap());
        assert!(gaussian_profile_distance(&e, 0.5, 0.2, 1.0, 1.0).is_err());
        assert!(gaussian_profile_distance(&e, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn amplitude_normalises_mass() {
        let g = Geometry::new(2, 64).unwrap();
        let e = gaussian_profile(&ScalarField::zeros(g), &[32.0, 32.0, 0.0], 10.0, 0.1, 3.0);
        let total: f64 = e.values().iter().sum();
        assert!((total - 3.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn distance_is_scale_consistent() {
        // Gaussian data at time L² τ rescaled by S_L is the Gaussian at time τ:
        // exactly for point sampling, up to the block-averaging error
        // (1 − L^{-2}) / 12 in the variance for block sums
        let (kappa, tau, mass) = (0.2, 64.0, 1.0);
        let g = Geometry::new(1, 4096).unwrap();
        let fine = gaussian_profile(&ScalarField::zeros(g), &[0.0; 3], 16.0 * tau, kappa, mass);
        let point = scale_field(&fine, 4, Decimation::PointSample).unwrap();
        let d = gaussian_profile_distance(&point, tau, kappa, mass, 1.0).unwrap();
        assert!(d < 1e-12 * point.max_abs(), "{d}");
        let block = scale_field(&fine, 4, Decimation::BlockSum).unwrap();
        let norm = weighted_sup_norm_about(&block, 1.0, &centroid(&block)).unwrap();
        let d = gaussian_profile_distance(&block, tau, kappa, mass, 1.0).unwrap();
        assert!(d / norm < 0.02, "{}", d / norm);
    }
}
