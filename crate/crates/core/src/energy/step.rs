use rayon::prelude::*;

use super::conductance::{bond_conductance, ConductanceModel};
use crate::chaos::{theta_step, ChaoticMapSpec, CouplingSpec, ThetaField};
use crate::error::{param, Error, Result};
use crate::lattice::{ensure_same, BondField, BondRole, EnergyField, Geometry, Snapshot};

/// `J(x, μ) = c(x, μ) (E(x + e_μ) − E(x))`.
pub fn bond_currents(energy: &EnergyField, c: &BondField) -> Result<BondField> {
    ensure_same(energy.geometry(), c.geometry())?;
    let g = c.geometry();
    let e = energy.values();
    let mut values = Vec::with_capacity(g.bonds());
    for x in 0..g.sites() {
        for mu in 0..g.dim() {
            values.push(c.get(x, mu) * (e[g.neighbor(x, mu, true)] - e[x]));
        }
    }
    Ok(BondField::from_raw(g, BondRole::Current, values))
}

/// Total weight leaving each site must not exceed 1.
pub(crate) fn check_outflow(c: &BondField) -> Result<()> {
    let g = c.geometry();
    for x in 0..g.sites() {
        let out: f64 = (0..g.dim())
            .map(|mu| c.get(x, mu) + c.get(g.neighbor(x, mu, false), mu))
            .sum();
        if out > 1.0 {
            return Err(Error::Stability { site: x, outflow: out });
        }
    }
    Ok(())
}

const PARALLEL_SITES: usize = 1 << 14;

/// Updates one axis-0 row of the lattice, `out[i]` for site `row * side + i`.
fn update_row(g: Geometry, e: &[f64], c: &[f64], row: usize, out: &mut [f64]) {
    let (d, n) = (g.dim(), g.side());
    let base = row * n;
    // (stride, coordinate) of the row along the axes above the first
    let mut upper = [(0usize, 0usize); 2];
    let mut rest = row;
    for (axis, slot) in upper.iter_mut().enumerate().take(d - 1) {
        *slot = (n.pow(axis as u32 + 1), rest % n);
        rest /= n;
    }
    for (i, slot) in out.iter_mut().enumerate() {
        let x = base + i;
        let mut div = 0.0;
        for mu in 0..d {
            let (fwd, bwd) = if mu == 0 {
                (base + if i + 1 == n { 0 } else { i + 1 }, base + if i == 0 { n - 1 } else { i - 1 })
            } else {
                let (stride, coord) = upper[mu - 1];
                let fwd = if coord + 1 == n { x + stride - n * stride } else { x + stride };
                let bwd = if coord == 0 { x + (n - 1) * stride } else { x - stride };
                (fwd, bwd)
            };
            div += c[x * d + mu] * (e[fwd] - e[x]) - c[bwd * d + mu] * (e[x] - e[bwd]);
        }
        *slot = e[x] + div;
    }
}

/// `E'(x) = E(x) + Σ_μ [J(x, μ) − J(x − e_μ, μ)]` on raw values.
///
/// This is the single arithmetic path for both the energy update and the
/// application of one-step environment kernels, so the two agree bitwise.
pub(crate) fn apply_divergence_form(e: &[f64], c: &BondField) -> Vec<f64> {
    let g = c.geometry();
    let cv = c.values();
    let mut out = vec![0.0; g.sites()];
    if g.sites() >= PARALLEL_SITES {
        out.par_chunks_mut(g.side()).enumerate().for_each(|(row, chunk)| update_row(g, e, cv, row, chunk));
    } else {
        for (row, chunk) in out.chunks_mut(g.side()).enumerate() {
            update_row(g, e, cv, row, chunk);
        }
    }
    out
}

/// Nonlinear energy update on raw values, without the positivity checks of
/// [`energy_step`]; used for derivative probes around `E = 0`.
pub(crate) fn nonlinear_step_raw(e: &[f64], theta: &ThetaField, model: &ConductanceModel) -> Vec<f64> {
    let g = theta.geometry();
    let mut values = Vec::with_capacity(g.bonds());
    for x in 0..g.sites() {
        let tx = theta.first(x);
        for mu in 0..g.dim() {
            let y = g.neighbor(x, mu, true);
            values.push(model.conductance(tx, theta.first(y), e[x], e[y]));
        }
    }
    apply_divergence_form(e, &BondField::from_raw(g, BondRole::Conductance, values))
}

/// One conservative transport step.
///
/// Fails with [`Error::Stability`] when some site would send out more than
/// its energy, and with [`Error::NegativeEnergy`] if rounding still produced
/// a negative value.
pub fn energy_step(energy: &EnergyField, c: &BondField) -> Result<EnergyField> {
    ensure_same(energy.geometry(), c.geometry())?;
    if c.role() != BondRole::Conductance {
        return Err(param("c", "energy_step needs a conductance field"));
    }
    check_outflow(c)?;
    let next = apply_divergence_form(energy.values(), c);
    if let Some((site, v)) = next.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeEnergy { site, value: *v });
    }
    Ok(EnergyField::from_raw(c.geometry(), next))
}

/// Energy, fast variables and time.
#[derive(Clone, Debug, PartialEq)]
pub struct CmlState {
    pub energy: EnergyField,
    pub theta: ThetaField,
    pub t: u64,
}

impl CmlState {
    pub fn new(energy: EnergyField, theta: ThetaField) -> Result<Self> {
        ensure_same(energy.geometry(), theta.geometry())?;
        Ok(Self { energy, theta, t: 0 })
    }

    pub fn to_snapshot(&self) -> Result<Snapshot> {
        let mut s = Snapshot::new(self.energy.geometry());
        s.push_site("E", &self.energy)?;
        s.push("theta", self.theta.to_payload())?;
        Ok(s)
    }

    pub fn from_snapshot(s: &Snapshot, t: u64) -> Result<Self> {
        let energy = EnergyField::new(s.site_field("E")?)?;
        let theta = ThetaField::from_payload(s.geometry(), s.get("theta")?)?;
        Ok(Self { energy, theta, t })
    }
}

/// Everything needed to advance a [`CmlState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmlModel {
    pub conductance: ConductanceModel,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
}

impl CmlModel {
    pub fn step(&self, state: &CmlState) -> Result<CmlState> {
        cml_step(state, &self.conductance, self.map, &self.coupling)
    }
}

/// Full coupled update. The energy moves with conductances built from the
/// pre-update θ(t); θ advances afterwards.
pub fn cml_step(
    state: &CmlState,
    model: &ConductanceModel,
    map: ChaoticMapSpec,
    coupling: &CouplingSpec,
) -> Result<CmlState> {
    let c = bond_conductance(&state.theta, &state.energy, model)?;
    let energy = energy_step(&state.energy, &c)?;
    let theta = theta_step(&state.theta, map, coupling)?;
    Ok(CmlState {
        energy,
        theta,
        t: state.t + 1,
    })
}
