use super::Decimation;
use crate::error::{Error, Result};
use crate::fourier;
use crate::lattice::{ScalarField, MAX_DIM};

/// `S_L E` on the coarse lattice of side `side / L`.
///
/// * point sample: `L^d E(LX)`
/// * block sum: `Σ_{b ∈ [0,L)^d} E(LX + b)`, i.e. `L^d` times the block mean
/// * spectral: band-limited restriction, `Ê'(k) = Ê(k/L)`
pub fn scale_field(e: &ScalarField, factor: usize, mode: Decimation) -> Result<ScalarField> {
    let g = e.geometry();
    let coarse = g.coarsen(factor)?;
    let d = g.dim();
    match mode {
        Decimation::PointSample => {
            let amp = (factor as f64).powi(d as i32);
            Ok(ScalarField::from_fn(coarse, |xc| {
                let c = coarse.coords(xc);
                let mut fine = [0; MAX_DIM];
                for a in 0..d {
                    fine[a] = c[a] * factor;
                }
                amp * e.values()[g.index(&fine)]
            }))
        }
        Decimation::BlockSum => {
            let mut out = vec![0.0; coarse.sites()];
            for (x, v) in e.values().iter().enumerate() {
                let c = g.coords(x);
                let mut cc = [0; MAX_DIM];
                for a in 0..d {
                    cc[a] = c[a] / factor;
                }
                out[coarse.index(&cc)] += v;
            }
            ScalarField::new(coarse, out)
        }
        Decimation::Spectral => fourier::spectral_decimate(e, factor),
    }
}

/// `E_n(t) = S_{L^n} E(L^{2n} t)` for `t = 0..=t_max`, from records
/// `(time, field)` in any order.
pub fn renormalized_energy(
    records: &[(u64, ScalarField)],
    n: usize,
    factor: usize,
    mode: Decimation,
    t_max: u64,
) -> Result<Vec<(u64, ScalarField)>> {
    let stride = (factor as u64).pow(2 * n as u32);
    (0..=t_max)
        .map(|t| {
            let fine_t = stride * t;
            let (_, field) = records.iter().find(|(s, _)| *s == fine_t).ok_or_else(|| {
                Error::InsufficientData(format!("no snapshot at time {fine_t} for E_{n}({t})"))
            })?;
            let mut f = field.clone();
            for _ in 0..n {
                f = scale_field(&f, factor, mode)?;
            }
            Ok((t, f))
        })
        .collect()
}
