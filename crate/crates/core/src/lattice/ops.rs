use super::{BondField, EnergyField, ScalarField, SiteObservable, MAX_DIM};
use crate::error::{param, Result};

/// Divergence of a bond field:
/// `D(x) = sum_mu (J(x + e_mu, mu) - J(x, mu))`.
///
/// On the torus the sum telescopes, so `sum_x D(x)` vanishes up to rounding.
pub fn discrete_divergence(current: &BondField) -> SiteObservable {
    let g = current.geometry();
    ScalarField::from_fn(g, |x| {
        (0..g.dim())
            .map(|mu| current.get(g.neighbor(x, mu, true), mu) - current.get(x, mu))
            .sum()
    })
}

/// `sup_x |E(x)| (1 + |x - origin|)^(d + a_exp)` with minimal-image distances.
pub fn weighted_sup_norm(field: &ScalarField, a_exp: f64, origin: usize) -> Result<f64> {
    let g = field.geometry();
    let c = g.coords(origin);
    let mut center = [0.0; MAX_DIM];
    for axis in 0..g.dim() {
        center[axis] = c[axis] as f64;
    }
    weighted_sup_norm_about(field, a_exp, &center)
}

/// As [`weighted_sup_norm`] but about a real-valued centre, e.g. a centroid.
pub fn weighted_sup_norm_about(field: &ScalarField, a_exp: f64, center: &[f64; MAX_DIM]) -> Result<f64> {
    if !(a_exp > 0.0) {
        return Err(param("a_exp", format!("must be positive, got {a_exp}")));
    }
    let g = field.geometry();
    let power = g.dim() as f64 + a_exp;
    Ok(field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(x, v)| v.abs() * (1.0 + distance_to(g, x, center)).powf(power))
        .fold(0.0, f64::max))
}

fn distance_to(g: super::Geometry, site: usize, center: &[f64; MAX_DIM]) -> f64 {
    let c = g.coords(site);
    (0..g.dim())
        .map(|axis| g.min_image(c[axis] as f64 - center[axis]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Total energy `sum_x E(x)` with compensated summation.
pub fn total_mass(energy: &EnergyField) -> f64 {
    compensated_sum(energy.values().iter().copied())
}

/// Neumaier's variant of Kahan summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BondRole, Geometry};
    use proptest::prelude::*;

    fn ring(n: usize) -> Geometry {
        Geometry::new(1, n).unwrap()
    }

    #[test]
    fn divergence_examples() {
        let g = ring(4);
        let zero = BondField::zeros(g, BondRole::Current);
        assert!(discrete_divergence(&zero).values().iter().all(|v| *v == 0.0));

        let g2 = Geometry::new(2, 4).unwrap();
        let mut per_axis = BondField::zeros(g2, BondRole::Current);
        for x in 0..g2.sites() {
            per_axis.set(x, 0, 0.7);
            per_axis.set(x, 1, -1.3);
        }
        assert!(discrete_divergence(&per_axis).values().iter().all(|v| *v == 0.0));

        let j = BondField::new(g, BondRole::Current, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(discrete_divergence(&j).values(), &[-1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn norm_examples() {
        let g = ring(8);
        assert_eq!(weighted_sup_norm(&ScalarField::zeros(g), 1.0, 0).unwrap(), 0.0);
        assert_eq!(weighted_sup_norm(&ScalarField::delta(g, 0, 2.0), 1.0, 0).unwrap(), 2.0);
        assert_eq!(weighted_sup_norm(&ScalarField::delta(g, 3, 1.0), 1.0, 0).unwrap(), 16.0);
        // minimal image: site 5 is at distance 3 as well
        assert_eq!(weighted_sup_norm(&ScalarField::delta(g, 5, 1.0), 1.0, 0).unwrap(), 16.0);
        assert!(weighted_sup_norm(&ScalarField::zeros(g), 0.0, 0).is_err());
    }

    #[test]
    fn mass_examples() {
        let g = ring(4);
        assert_eq!(total_mass(&EnergyField::zeros(g)), 0.0);
        let ones = EnergyField::from_values(Geometry::new(2, 4).unwrap(), vec![1.0; 16]).unwrap();
        assert_eq!(total_mass(&ones), 16.0);
        let e = EnergyField::from_values(g, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((total_mass(&e) - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let values = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        assert!((compensated_sum(values) - (1.0 + 1e-12)).abs() < 1e-20);
    }

    proptest! {
        #[test]
        fn divergence_telescopes(dim in 1usize..=3, vals in prop::collection::vec(-1e3f64..1e3, 64 * 3)) {
            let g = Geometry::new(dim, 4).unwrap();
            let j = BondField::new(g, BondRole::Current, vals[..g.bonds()].to_vec()).unwrap();
            let total: f64 = discrete_divergence(&j).values().iter().sum();
            let bound = 8.0 * f64::EPSILON * g.sites() as f64 * j.max_abs();
            prop_assert!(total.abs() <= bound, "{} > {}", total, bound);
        }

        #[test]
        fn norm_is_homogeneous(vals in prop::collection::vec(-10f64..10.0, 16), lambda in -5f64..5.0) {
            let g = Geometry::new(2, 4).unwrap();
            let f = ScalarField::new(g, vals).unwrap();
            let a = weighted_sup_norm(&f.scaled(lambda), 1.0, 5).unwrap();
            let b = lambda.abs() * weighted_sup_norm(&f, 1.0, 5).unwrap();
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.max(f64::MIN_POSITIVE));
        }
    }
}
