//! Multidimensional FFT helpers on periodic lattices.
//!
//! Forward transforms are unnormalised, `F(k) = sum_x f(x) e^{-i k.x}`, so a
//! probability kernel has `F(0) = 1`. Inverse transforms divide by the number
//! of sites.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::Result;
use crate::lattice::{Geometry, ScalarField, MAX_DIM};

fn transform(g: Geometry, data: &mut [Complex64], direction: FftDirection) {
    let n = g.side();
    let fft = FftPlanner::new().plan_fft(n, direction);
    fft.process(data);
    let mut line = vec![Complex64::default(); n];
    for axis in 1..g.dim() {
        let stride = g.stride(axis);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = start + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

pub fn forward(field: &ScalarField) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = field.values().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    transform(field.geometry(), &mut data, FftDirection::Forward);
    data
}

pub fn forward_complex(g: Geometry, mut data: Vec<Complex64>) -> Vec<Complex64> {
    transform(g, &mut data, FftDirection::Forward);
    data
}

/// Inverse transform, keeping the real part.
pub fn inverse_real(g: Geometry, mut spectrum: Vec<Complex64>) -> ScalarField {
    transform(g, &mut spectrum, FftDirection::Inverse);
    let norm = 1.0 / g.sites() as f64;
    ScalarField::from_fn(g, |x| spectrum[x].re * norm)
}

/// Circular convolution `(a * b)(x) = sum_y a(x - y) b(y)`.
pub fn convolve(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    crate::lattice::ensure_same(a.geometry(), b.geometry())?;
    let (fa, fb) = (forward(a), forward(b));
    Ok(inverse_real(a.geometry(), fa.iter().zip(&fb).map(|(x, y)| x * y).collect()))
}

/// `n`-fold convolution power.
pub fn convolution_power(f: &ScalarField, n: u32) -> ScalarField {
    let spec = forward(f).into_iter().map(|z| z.powu(n)).collect();
    inverse_real(f.geometry(), spec)
}

/// Band-limited decimation of a spectrum: the coarse lattice keeps the
/// fine momenta `2 pi s / side` with `s` in `[-side'/2, side'/2)`, where
/// `side' = side / factor`. A coarse momentum `k'` reads the fine spectrum at
/// `k' / factor`.
pub fn truncate_spectrum(g: Geometry, spectrum: &[Complex64], factor: usize) -> Result<(Geometry, Vec<Complex64>)> {
    let coarse = g.coarsen(factor)?;
    let (n, nc) = (g.side() as isize, coarse.side());
    let out = (0..coarse.sites())
        .map(|m| {
            let c = coarse.coords(m);
            let mut fine = [0usize; MAX_DIM];
            for axis in 0..g.dim() {
                let s = crate::lattice::signed_frequency(c[axis], nc);
                fine[axis] = s.rem_euclid(n) as usize;
            }
            spectrum[g.index(&fine)]
        })
        .collect();
    Ok((coarse, out))
}

/// Real-space view of [`truncate_spectrum`]. Mass is preserved exactly
/// because the zero mode is kept, and a constant `v` maps to `factor^d v`.
pub fn spectral_decimate(field: &ScalarField, factor: usize) -> Result<ScalarField> {
    let (coarse, spec) = truncate_spectrum(field.geometry(), &forward(field), factor)?;
    Ok(inverse_real(coarse, spec))
}

/// `sum_z f(z) e^{-i k.z}` at an arbitrary momentum, with `z` the
/// minimal-image displacement.
pub fn evaluate_at(field: &ScalarField, k: &[f64; MAX_DIM]) -> Complex64 {
    let g = field.geometry();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(z, v)| {
            let d = g.displacement(z);
            let phase: f64 = (0..g.dim()).map(|a| k[a] * d[a]).sum();
            Complex64::from_polar(*v, -phase)
        })
        .sum()
}
