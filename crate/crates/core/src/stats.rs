//! Small statistics toolkit: regression, jackknife, exponential decay fits.

use crate::error::{Error, Result};
use crate::lattice::compensated_sum;

/// A point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|value - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Mean with the standard error of independent samples.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    Estimate {
        value: mean(xs),
        std_error: (variance(xs) / xs.len() as f64).sqrt(),
    }
}

/// Delete-one jackknife over `n_blocks` blocks.
///
/// `estimator(None)` evaluates on the full sample, `estimator(Some(i))` with
/// block `i` left out.
pub fn jackknife(n_blocks: usize, estimator: impl Fn(Option<usize>) -> f64) -> Estimate {
    let value = estimator(None);
    if n_blocks < 2 {
        return Estimate { value, std_error: f64::NAN };
    }
    let loo: Vec<f64> = (0..n_blocks).map(|i| estimator(Some(i))).collect();
    let m = mean(&loo);
    let n = n_blocks as f64;
    let spread = compensated_sum(loo.iter().map(|v| (v - m) * (v - m)));
    Estimate {
        value,
        std_error: ((n - 1.0) / n * spread).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
///
/// A perfect fit reports `r_squared = 1`, including the degenerate case of
/// constant `y`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs at least two paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = compensated_sum(ys.iter().map(|y| (y - my) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = compensated_sum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2)),
    );
    let r_squared = if syy == 0.0 || ss_res <= f64::EPSILON * f64::EPSILON * syy {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit { slope, intercept, r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayPoint {
    pub lag: f64,
    pub value: f64,
    /// Zero for exact data.
    pub std_error: f64,
}

impl DecayPoint {
    pub fn exact(lag: f64, value: f64) -> Self {
        Self { lag, value, std_error: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Fits `|value| ~ prefactor * exp(-rate * lag)` by least squares on the log.
///
/// Points with `|value| < 2 * std_error` or `value == 0` carry no usable
/// signal and are dropped; at least three must remain.
pub fn fit_exponential_decay(series: &[DecayPoint]) -> Result<DecayFit> {
    let usable: Vec<&DecayPoint> = series
        .iter()
        .filter(|p| p.value != 0.0 && p.value.is_finite() && p.value.abs() >= 2.0 * p.std_error)
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "insufficient decay data: {} of {} points above the noise floor, need 3",
            usable.len(),
            series.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.lag).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.value.abs().ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        rate: -fit.slope,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        points_used: usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_exponential() {
        let pts: Vec<_> = (0..3).map(|i| DecayPoint::exact(i as f64, (-(i as f64)).exp())).collect();
        let fit = fit_exponential_decay(&pts).unwrap();
        assert_relative_eq!(fit.rate, 1.0, epsilon = 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn flat_series_has_zero_rate() {
        let pts: Vec<_> = (0..5).map(|i| DecayPoint::exact(i as f64, 0.3)).collect();
        let fit = fit_exponential_decay(&pts).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn prefactor_recovered() {
        let pts: Vec<_> = (0..4)
            .map(|i| DecayPoint::exact(i as f64, 2.0 * (-0.5 * i as f64).exp()))
            .collect();
        let fit = fit_exponential_decay(&pts).unwrap();
        assert_relative_eq!(fit.rate, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_points_are_dropped() {
        let mut pts: Vec<_> = (0..3).map(|i| DecayPoint::exact(i as f64, (-(i as f64)).exp())).collect();
        pts.push(DecayPoint { lag: 3.0, value: 0.01, std_error: 0.02 });
        assert_eq!(fit_exponential_decay(&pts).unwrap().points_used, 3);
        pts.truncate(2);
        let err = fit_exponential_decay(&pts).unwrap_err();
        assert!(err.to_string().contains("insufficient decay data"));
    }

    #[test]
    fn jackknife_of_mean_matches_textbook() {
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let jk = jackknife(xs.len(), |skip| {
            let kept: Vec<f64> = xs
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, v)| *v)
                .collect();
            mean(&kept)
        });
        let plain = mean_estimate(&xs);
        assert_relative_eq!(jk.value, plain.value);
        assert_relative_eq!(jk.std_error, plain.std_error, epsilon = 1e-12);
    }

    #[test]
    fn linear_fit_quality() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let fit = linear_fit(&xs, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert_relative_eq!(fit.slope, 2.0);
        assert_eq!(fit.r_squared, 1.0);
        let noisy = linear_fit(&xs, &[1.0, 3.5, 4.5, 7.0]).unwrap();
        assert!(noisy.r_squared < 1.0 && noisy.r_squared > 0.9);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
