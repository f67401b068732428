//! Second derivatives of the one-step map `Φ(x) = E'(x)` with respect to
//! the energies, at fixed θ.

use std::collections::BTreeMap;

use super::conductance::ConductanceModel;
use crate::chaos::ThetaField;
use crate::error::Result;
use crate::lattice::{ensure_same, EnergyField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianEntry {
    pub y: usize,
    pub z: usize,
    pub value: f64,
}

/// Exact nonzero entries of `∂²Φ(x)/∂E_y∂E_z`.
///
/// Each bond `(p, q = p + e_μ)` contributes through
/// `a δ s(E_p + E_q)(E_q − E_p)` with `a = κ₀(1 + ε_c χ)`, so only `y, z`
/// within distance 1 of `x` appear.
pub fn update_hessian(energy: &EnergyField, theta: &ThetaField, model: &ConductanceModel, x: usize) -> Result<Vec<HessianEntry>> {
    ensure_same(energy.geometry(), theta.geometry())?;
    let g = energy.geometry();
    let e = energy.values();
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    if model.delta() == 0.0 {
        return Ok(Vec::new());
    }
    for mu in 0..g.dim() {
        for (p, sign) in [(x, 1.0), (g.neighbor(x, mu, false), -1.0)] {
            let q = g.neighbor(p, mu, true);
            let a = model.linear_part(theta.first(p), theta.first(q)) * model.delta() * sign;
            let (s_sum, diff) = (e[p] + e[q], e[q] - e[p]);
            let s1 = ConductanceModel::saturation_d1(s_sum);
            let s2d = ConductanceModel::saturation_d2(s_sum) * diff;
            *acc.entry((p, p)).or_default() += a * (s2d - 2.0 * s1);
            *acc.entry((q, q)).or_default() += a * (s2d + 2.0 * s1);
            *acc.entry((p, q)).or_default() += a * s2d;
            *acc.entry((q, p)).or_default() += a * s2d;
        }
    }
    Ok(acc
        .into_iter()
        .map(|((y, z), value)| HessianEntry { y, z, value })
        .collect())
}

/// Uniform bound on every entry: each bond term is at most
/// `2 κ₀(1 + ε_c) δ` in magnitude because `|s''(S)| |D| + 2 s'(S) ≤ 2` for
/// `|D| ≤ S`, and the diagonal entry at `x` collects `2d` bonds.
pub fn hessian_bound(model: &ConductanceModel) -> f64 {
    4.0 * model.dim() as f64 * model.kappa0() * (1.0 + model.eps_c()) * model.delta()
}

fn local_update(e: &[f64], theta: &ThetaField, model: &ConductanceModel, x: usize) -> f64 {
    let g = theta.geometry();
    let mut div = 0.0;
    for mu in 0..g.dim() {
        let f = g.neighbor(x, mu, true);
        let b = g.neighbor(x, mu, false);
        let cf = model.conductance(theta.first(x), theta.first(f), e[x], e[f]);
        let cb = model.conductance(theta.first(b), theta.first(x), e[b], e[x]);
        div += cf * (e[f] - e[x]) - cb * (e[x] - e[b]);
    }
    e[x] + div
}

/// Central mixed difference with one Richardson extrapolation,
/// `(4 D(h/2) − D(h)) / 3`.
pub fn finite_difference_hessian(
    energy: &EnergyField,
    theta: &ThetaField,
    model: &ConductanceModel,
    x: usize,
    y: usize,
    z: usize,
    h: f64,
) -> f64 {
    let base = energy.values().to_vec();
    let eval = |dy: f64, dz: f64| {
        let mut e = base.clone();
        e[y] += dy;
        e[z] += dz;
        local_update(&e, theta, model, x)
    };
    let d = |h: f64| (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}
