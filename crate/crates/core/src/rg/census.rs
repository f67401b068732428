use super::RgConfig;
use crate::error::{Error, Result};
use crate::rwre::FluctuationMatrix;
use crate::stats::{fit_exponential_decay, DecayFit, DecayPoint};

#[derive(Clone, Debug)]
pub struct Census {
    /// `(N, P(N_n > N), standard error)` for `N = 0..=max N_n`.
    pub tail: Vec<(u32, f64, f64)>,
    /// Exponential fit of the tail; `None` when fewer than three tail
    /// probabilities are resolved.
    pub fit: Option<DecayFit>,
    pub samples: usize,
}

impl Census {
    /// Fitted `K` in `P(N_n > N) ≈ e^{−KN}`.
    pub fn k(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.rate)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.tail.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Bad-region census at RG level `level`.
///
/// The local noise size at `y` is `|c_n(y)| = max_x |δp_n(x, y)|`, and
/// `N_n(y) = max(0, ⌈log_L |c_n(y)| + b n⌉)`. Sites with `|c_n| = 0` count
/// as `N_n = 0`.
pub fn bad_region_census(delta_p: &[FluctuationMatrix], level: usize, config: &RgConfig) -> Result<Census> {
    if delta_p.len() < 100 {
        return Err(Error::InsufficientData(format!("{} realizations, the census needs at least 100", delta_p.len())));
    }
    let dim = delta_p[0].geometry().dim();
    let b = config.b_exp(dim);
    let ln_l = (config.factor as f64).ln();
    let mut counts: Vec<u32> = Vec::new();
    for m in delta_p {
        for y in 0..m.geometry().sites() {
            let sup = m.column_sup(y);
            let n = if sup > 0.0 { (sup.ln() / ln_l + b * level as f64).ceil().max(0.0) as u32 } else { 0 };
            counts.push(n);
        }
    }
    let samples = counts.len();
    let max_n = counts.iter().copied().max().unwrap_or(0);
    let tail: Vec<(u32, f64, f64)> = (0..=max_n)
        .map(|n| {
            let p = counts.iter().filter(|&&c| c > n).count() as f64 / samples as f64;
            (n, p, (p * (1.0 - p) / samples as f64).sqrt())
        })
        .collect();
    let points: Vec<DecayPoint> = tail
        .iter()
        .filter(|(_, p, _)| *p > 0.0)
        .map(|&(n, p, se)| DecayPoint { lag: n as f64, value: p, std_error: se })
        .collect();
    let fit = if points.len() >= 3 { fit_exponential_decay(&points).ok() } else { None };
    Ok(Census { tail, fit, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;
    use crate::rg::Decimation;
    use crate::rng::stream;
    use rand::Rng;

    fn config() -> RgConfig {
        RgConfig::new(4, 1, Decimation::BlockSum)
    }

    #[test]
    fn noiseless_census_is_all_zero() {
        let g = Geometry::new(1, 8).unwrap();
        let zeros = vec![FluctuationMatrix::zeros(g); 100];
        let c = bad_region_census(&zeros, 1, &config()).unwrap();
        assert_eq!(c.tail, vec![(0, 0.0, 0.0)]);
        assert!(c.k().is_none());
        assert!(bad_region_census(&zeros[..50], 1, &config()).is_err());
    }

    #[test]
    fn geometric_tail_is_recovered() {
        // sup |δp| = L^{m − b} with P(m > N) = 2^{−N−1}, so N_n = m and K = ln 2
        let g = Geometry::new(1, 8).unwrap();
        let mut rng = stream(4, 0);
        let mats: Vec<FluctuationMatrix> = (0..400)
            .map(|_| {
                let mut v = vec![0.0; 64];
                for y in 0..8 {
                    let mut m = 0;
                    while rng.random::<bool>() {
                        m += 1;
                    }
                    v[y * 8] = 4f64.powf(m as f64 - 0.5 - 0.25);
                }
                FluctuationMatrix::new(g, v).unwrap()
            })
            .collect();
        let c = bad_region_census(&mats, 1, &config()).unwrap();
        assert!(c.is_non_increasing());
        let k = c.k().unwrap();
        assert!((k - std::f64::consts::LN_2).abs() < 0.15, "{k}");
    }
}
