use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::lattice::{compensated_sum, ScalarField, MAX_DIM};
use crate::stats::linear_fit;

/// Circular-mean centre of mass on the torus.
pub fn centroid(e: &ScalarField) -> [f64; MAX_DIM] {
    let g = e.geometry();
    let side = g.side() as f64;
    let mut out = [0.0; MAX_DIM];
    for (axis, slot) in out.iter_mut().enumerate().take(g.dim()) {
        let (mut s, mut c) = (0.0, 0.0);
        for (x, v) in e.values().iter().enumerate() {
            if *v != 0.0 {
                let phase = 2.0 * PI * g.coords(x)[axis] as f64 / side;
                s += v * phase.sin();
                c += v * phase.cos();
            }
        }
        *slot = (s.atan2(c) / (2.0 * PI) * side).rem_euclid(side);
    }
    out
}

/// `Σ_x |x − x̄|² E(x) / Σ_x E(x)` with minimal-image displacements from the
/// centroid `x̄`.
pub fn mean_square_displacement(e: &ScalarField) -> Result<f64> {
    let mass = compensated_sum(e.values().iter().copied());
    if !(mass > 0.0) {
        return Err(param("energy", "mean square displacement needs positive mass"));
    }
    let g = e.geometry();
    let center = centroid(e);
    let moment = compensated_sum(e.values().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(x, v)| {
        let c = g.coords(x);
        v * (0..g.dim()).map(|a| g.min_image(c[a] as f64 - center[a]).powi(2)).sum::<f64>()
    }));
    Ok(moment / mass)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub r_squared: f64,
    /// Number of records inside the window.
    pub points: usize,
}

/// `κ = slope / (2d)` of the least-squares line through `MSD(t)` for the
/// records with `t` in `[t0, t1]`.
///
/// Fails when any MSD in the window reaches `(side/4)²`, where the torus
/// starts to bias the estimate.
pub fn estimate_kappa_msd(records: &[(u64, ScalarField)], window: (u64, u64)) -> Result<KappaEstimate> {
    let (t0, t1) = window;
    let inside: Vec<&(u64, ScalarField)> = records.iter().filter(|(t, _)| (t0..=t1).contains(t)).collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientData(format!("{} records in window [{t0}, {t1}]", inside.len())));
    }
    let g = inside[0].1.geometry();
    let guard = (g.side() as f64 / 4.0).powi(2);
    let mut xs = Vec::with_capacity(inside.len());
    let mut ys = Vec::with_capacity(inside.len());
    for (t, e) in inside {
        let m = mean_square_displacement(e)?;
        if m >= guard {
            return Err(param(
                "t_window",
                format!("MSD {m:.3} at t = {t} exceeds the wrap guard (side/4)² = {guard}"),
            ));
        }
        xs.push(*t as f64);
        ys.push(m);
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(KappaEstimate { kappa: fit.slope / (2.0 * g.dim() as f64), r_squared: fit.r_squared, points: xs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;
    use crate::rwre::TransitionKernel;

    fn lazy_records(dim: usize, side: usize, kappa: f64, steps: u64) -> Vec<(u64, ScalarField)> {
        let g = Geometry::new(dim, side).unwrap();
        let t = TransitionKernel::lazy_walk(g, kappa).unwrap();
        let mut e = ScalarField::delta(g, 0, 1.0);
        let mut out = vec![(0, e.clone())];
        for s in 1..=steps {
            e = t.apply(&e).unwrap();
            out.push((s, e.clone()));
        }
        out
    }

    #[test]
    fn lazy_walk_kappa_is_exact() {
        let recs = lazy_records(1, 256, 0.2, 200);
        let k = estimate_kappa_msd(&recs, (10, 200)).unwrap();
        assert!((k.kappa - 0.2).abs() < 1e-6, "{k:?}");
        assert!((1.0 - k.r_squared).abs() < 1e-12);
        let recs = lazy_records(2, 64, 0.1, 60);
        let k = estimate_kappa_msd(&recs, (5, 60)).unwrap();
        assert!((k.kappa - 0.1).abs() < 1e-6);
        assert!(k.r_squared > 0.9999);
    }

    #[test]
    fn frozen_profile_has_zero_slope() {
        let g = Geometry::new(1, 64).unwrap();
        let e = ScalarField::from_fn(g, |x| if x < 3 { 1.0 } else { 0.0 });
        let recs: Vec<_> = (0..10).map(|t| (t, e.clone())).collect();
        assert!(estimate_kappa_msd(&recs, (0, 9)).unwrap().kappa.abs() < 1e-12);
    }

    #[test]
    fn wrap_guard_and_empty_window() {
        let recs = lazy_records(1, 16, 0.25, 200);
        assert!(estimate_kappa_msd(&recs, (10, 200)).is_err());
        assert!(estimate_kappa_msd(&recs, (500, 600)).is_err());
        let g = Geometry::new(1, 16).unwrap();
        assert!(mean_square_displacement(&ScalarField::zeros(g)).is_err());
    }

    #[test]
    fn centroid_wraps() {
        let g = Geometry::new(1, 16).unwrap();
        let mut e = ScalarField::zeros(g);
        e.values_mut()[15] = 1.0;
        e.values_mut()[1] = 1.0;
        let c = centroid(&e)[0];
        assert!(c.abs() < 1e-12 || (c - 16.0).abs() < 1e-12, "{c}");
        assert!((mean_square_displacement(&e).unwrap() - 1.0).abs() < 1e-12);
    }
}
