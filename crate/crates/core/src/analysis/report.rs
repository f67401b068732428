use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::KappaEstimate;
use crate::error::Result;
use crate::rg::{NoiseFlow, RgKernelFlow};

/// First line of `summary.txt`; bump when the layout changes.
pub const SUMMARY_VERSION: &str = "cmlab summary v1";

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionReport {
    pub kappa_msd: f64,
    pub r_squared: f64,
    /// Fourier estimate `c_n` of the last kernel of the flow.
    pub kappa_kernel: f64,
    /// `C = M / (4πκ)^{d/2}`.
    pub c_mass: f64,
    /// Profile distances of `E_n(1)`, `n = 1, 2, ...`.
    pub profile_distances: Vec<f64>,
}

/// One row of `flow.csv`, for RG step `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRow {
    pub n: usize,
    pub c_n: f64,
    pub fixed_point_distance: f64,
    pub var_delta_p: Option<f64>,
    /// `Var(δp_n) / Var(δp_{n−1})`.
    pub var_ratio: Option<f64>,
    pub k_fit: Option<f64>,
}

/// Joins a kernel flow with optional noise statistics and census fits
/// (`k_fit[n − 1]` for step `n`).
pub fn flow_rows(kernel: &RgKernelFlow, noise: Option<&NoiseFlow>, k_fit: &[Option<f64>]) -> Vec<FlowRow> {
    (1..kernel.kernels.len())
        .map(|n| FlowRow {
            n,
            c_n: kernel.c[n],
            fixed_point_distance: kernel.distances[n],
            var_delta_p: noise.and_then(|f| f.variances.get(n)).map(|e| e.value),
            var_ratio: noise.and_then(|f| f.ratios.get(n - 1).copied().flatten()).map(|e| e.value),
            k_fit: k_fit.get(n - 1).copied().flatten(),
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `flow.csv`, `diffusion.csv` and `summary.txt` into `out_dir`.
pub fn emit_report(flow: &[FlowRow], diffusion: Option<&DiffusionReport>, kappa: Option<&KappaEstimate>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut csv = String::from("n,c_n,fixed_point_distance,var_delta_p,var_ratio,K_fit\n");
    for r in flow {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.n,
            r.c_n,
            r.fixed_point_distance,
            opt(r.var_delta_p),
            opt(r.var_ratio),
            opt(r.k_fit)
        )
        .expect("writing to a string");
    }
    let mut diff = String::from("n,profile_distance\n");
    if let Some(d) = diffusion {
        for (i, v) in d.profile_distances.iter().enumerate() {
            writeln!(diff, "{},{}", i + 1, v).expect("writing to a string");
        }
    }
    let mut summary = format!("{SUMMARY_VERSION}\n");
    let kappa_msd = diffusion.map(|d| (d.kappa_msd, d.r_squared)).or(kappa.map(|k| (k.kappa, k.r_squared)));
    if let Some((k, r2)) = kappa_msd {
        writeln!(summary, "kappa_msd = {k}\nr_squared = {r2}").expect("writing to a string");
    }
    if let Some(d) = diffusion {
        writeln!(summary, "kappa_kernel = {}\nC_mass = {}", d.kappa_kernel, d.c_mass).expect("writing to a string");
    }
    let list = |f: &dyn Fn(&FlowRow) -> String| flow.iter().map(f).collect::<Vec<_>>().join(", ");
    writeln!(summary, "c_n = [{}]", list(&|r| r.c_n.to_string())).expect("writing to a string");
    writeln!(summary, "var_ratios = [{}]", list(&|r| opt(r.var_ratio))).expect("writing to a string");
    let paths = [("flow.csv", csv), ("diffusion.csv", diff), ("summary.txt", summary)];
    paths
        .into_iter()
        .map(|(name, body)| {
            let path = out_dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}
