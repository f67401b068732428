//! Subcommand implementations. Every command writes its outputs and
//! `config.resolved.toml` into the run's output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cmlab::analysis::{
    emit_report, estimate_kappa_msd, flow_rows, quenched_vs_annealed, DiffusionReport, KappaEstimate, QuenchedReport,
    QuenchedSpec,
};
use cmlab::chaos::{spacetime_correlations, verify_locality_bounds, CorrelationSpec, ThetaField};
use cmlab::energy::{CmlModel, CmlState};
use cmlab::lattice::{total_mass, EnergyField};
use cmlab::rg::{bad_region_census, kernel_flow, noise_variance_ratio, sample_fluctuations, NoiseFlow, NoiseSpec, RgKernelFlow};
use cmlab::rng::stream;
use cmlab::rwre::TransitionKernel;
use cmlab::stats::{fit_exponential_decay, DecayPoint};
use log::info;
use rand::Rng;

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;

pub struct Run<'a> {
    pub config: &'a RunConfig,
    pub resolved: Resolved,
    pub out_dir: &'a Path,
}

impl<'a> Run<'a> {
    pub fn new(config: &'a RunConfig, out_dir: &'a Path, needs_rg: bool) -> Result<Self, CliError> {
        let resolved = config.resolve(needs_rg)?;
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join("config.resolved.toml"), config.to_toml())?;
        Ok(Self { config, resolved, out_dir })
    }

    fn write(&self, name: &str, body: &str) -> Result<(), CliError> {
        fs::write(self.out_dir.join(name), body)?;
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.config.run.seed
    }
}

/// Full coupled evolution. Logs mass conservation every step and writes a
/// snapshot every `snapshot_stride` steps.
pub fn simulate(run: &Run) -> Result<(), CliError> {
    let r = &run.resolved;
    let g = r.geometry;
    let model = CmlModel { conductance: r.model, map: r.map, coupling: r.coupling };
    let theta = ThetaField::uniform(g, r.map.manifold(), &mut stream(run.seed(), 0));
    let energy = match run.config.run.initial.as_str() {
        "delta" => EnergyField::delta(g, 0, 1.0)?,
        _ => {
            let mut rng = stream(run.seed(), 1);
            EnergyField::from_values(g, (0..g.sites()).map(|_| rng.random::<f64>()).collect())?
        }
    };
    let m0 = total_mass(&energy);
    let mut state = CmlState::new(energy, theta)?;
    let snapshots = run.out_dir.join("snapshots");
    fs::create_dir_all(&snapshots)?;
    let mut log = String::from("t,total_mass,relative_deviation,min_energy\n");
    let mut records = Vec::new();
    let mut max_dev: f64 = 0.0;
    let stride = run.config.run.snapshot_stride as u64;
    for t in 0..=run.config.run.horizon as u64 {
        if t > 0 {
            state = model.step(&state)?;
        }
        let m = total_mass(&state.energy);
        let dev = if m0 == 0.0 { m.abs() } else { (m - m0).abs() / m0.abs() };
        max_dev = max_dev.max(dev);
        writeln!(log, "{t},{m:e},{dev:e},{:e}", state.energy.min()).expect("writing to a string");
        if t % stride == 0 || t == run.config.run.horizon as u64 {
            state.to_snapshot()?.save(snapshots.join(format!("t{t:08}.cmls")))?;
            records.push((t, state.energy.as_field().clone()));
        }
    }
    run.write("conservation.csv", &log)?;
    info!("simulate: {} steps, max relative mass deviation {max_dev:e}", run.config.run.horizon);
    let kappa = if run.config.run.initial == "delta" {
        Some(estimate_kappa_msd(&records, run.config.t_window())?)
    } else {
        None
    };
    emit_report(&[], None, kappa.as_ref(), run.out_dir)?;
    Ok(())
}

fn quenched(run: &Run) -> Result<QuenchedReport, CliError> {
    let r = &run.resolved;
    let mut spec = QuenchedSpec::new(
        r.geometry,
        r.model,
        r.map,
        r.coupling,
        run.config.analysis.n_env,
        run.config.run.horizon,
        run.seed(),
    );
    spec.factor = r.rg.factor;
    spec.a_exp = run.config.analysis.a_exp;
    Ok(quenched_vs_annealed(&spec)?)
}

fn diffusion_report(report: &QuenchedReport, c_kernel: f64, dim: usize) -> DiffusionReport {
    let n = report.runs.len() as f64;
    let levels = report.runs.iter().map(|r| r.profile_distances.len()).min().unwrap_or(0);
    let kappa = report.annealed.value;
    DiffusionReport {
        kappa_msd: report.runs.iter().map(|r| r.kappa.kappa).sum::<f64>() / n,
        r_squared: report.runs.iter().map(|r| r.kappa.r_squared).fold(1.0, f64::min),
        kappa_kernel: c_kernel,
        c_mass: 1.0 / (4.0 * std::f64::consts::PI * kappa).powf(dim as f64 / 2.0),
        profile_distances: (0..levels).map(|i| report.runs.iter().map(|r| r.profile_distances[i]).sum::<f64>() / n).collect(),
    }
}

fn write_environments(run: &Run, report: &QuenchedReport) -> Result<(), CliError> {
    let mut csv = String::from("env,kappa,r_squared,kappa_early,kappa_shuffled,profile_distances\n");
    for (i, e) in report.runs.iter().enumerate() {
        let d: Vec<String> = e.profile_distances.iter().map(|v| v.to_string()).collect();
        writeln!(csv, "{i},{},{},{},{},{}", e.kappa.kappa, e.kappa.r_squared, e.kappa_early.kappa, e.shuffled.kappa, d.join(";"))
            .expect("writing to a string");
    }
    run.write("environments.csv", &csv)?;
    let text = format!(
        "kappa_annealed = {}\nkappa_annealed_se = {}\nspread_early = {}\nspread = {}\nshuffle_p_value = {}\nmax_relative_deviation = {}\n",
        report.annealed.value,
        report.annealed.std_error,
        report.spread_early,
        report.spread,
        report.shuffle_p_value,
        report.max_relative_deviation
    );
    run.write("quenched.txt", &text)
}

/// Linearised evolution in `n_env` sampled environments against the
/// annealed kernel.
pub fn rwre(run: &Run) -> Result<(), CliError> {
    let report = quenched(run)?;
    write_environments(run, &report)?;
    let kappa = report.annealed.value;
    emit_report(&[], Some(&diffusion_report(&report, kappa, run.resolved.geometry.dim())), None, run.out_dir)?;
    info!("rwre: annealed kappa {kappa}, max relative deviation {}", report.max_relative_deviation);
    Ok(())
}

fn kernel_run(run: &Run) -> Result<RgKernelFlow, CliError> {
    let r = &run.resolved;
    let t0 = TransitionKernel::lazy_walk(r.geometry, r.model.kappa0())?;
    let flow = kernel_flow(&t0, r.rg.factor, r.rg.n_max, r.kernel_decimation, r.model.kappa0())?;
    let kernels = run.out_dir.join("kernels");
    fs::create_dir_all(&kernels)?;
    for (n, k) in flow.kernels.iter().enumerate() {
        k.write_csv(fs::File::create(kernels.join(format!("T{n}.csv")))?)?;
    }
    Ok(flow)
}

/// RG flow of the lazy-walk kernel `T_0 = T(κ₀)`.
pub fn rg_kernel(run: &Run) -> Result<(), CliError> {
    let flow = kernel_run(run)?;
    emit_report(&flow_rows(&flow, None, &[]), None, None, run.out_dir)?;
    info!("rg-kernel: fixed-point distances {:?}", &flow.distances[1..]);
    Ok(())
}

fn noise_run(run: &Run) -> Result<(NoiseFlow, Vec<Option<f64>>), CliError> {
    let r = &run.resolved;
    let mut spec = NoiseSpec::new(r.geometry, r.model, r.map, r.coupling, r.rg, run.seed());
    spec.realizations = run.config.rg.realizations;
    let flow = noise_variance_ratio(&spec)?;
    let mut csv = String::from("n,var_delta_p,var_se,var_ratio,var_ratio_se\n");
    for (n, v) in flow.variances.iter().enumerate() {
        let ratio = if n == 0 { None } else { flow.ratios[n - 1] };
        let (rv, rs) = ratio.map(|e| (e.value.to_string(), e.std_error.to_string())).unwrap_or_default();
        writeln!(csv, "{n},{},{},{rv},{rs}", v.value, v.std_error).expect("writing to a string");
    }
    run.write("noise.csv", &csv)?;
    let mut k_fit = Vec::new();
    let mut census = String::from("n,N,tail_probability,std_error\n");
    if spec.realizations >= 100 {
        for level in 1..=r.rg.n_max {
            let c = bad_region_census(&sample_fluctuations(&spec, level)?, level, &r.rg)?;
            for (big_n, p, se) in &c.tail {
                writeln!(census, "{level},{big_n},{p},{se}").expect("writing to a string");
            }
            k_fit.push(c.k());
        }
    }
    run.write("census.csv", &census)?;
    Ok((flow, k_fit))
}

/// Noise variance flow and bad-region census of θ-driven environments.
pub fn rg_noise(run: &Run) -> Result<(), CliError> {
    let kernel = kernel_run(run)?;
    let (noise, k_fit) = noise_run(run)?;
    emit_report(&flow_rows(&kernel, Some(&noise), &k_fit), None, None, run.out_dir)?;
    Ok(())
}

/// Space-time correlations of `cos 2πθ₁` and the locality check of the
/// coupling.
pub fn mixing(run: &Run) -> Result<(), CliError> {
    let r = &run.resolved;
    let a = &run.config.analysis;
    let mut spec = CorrelationSpec::new(r.geometry, r.map, r.coupling, run.seed());
    spec.n_samples = a.correlation_samples;
    let mut lags: Vec<(usize, [isize; 3])> = (0..=a.max_lag).map(|dt| (dt, [0; 3])).collect();
    lags.extend((1..=a.max_lag).map(|dx| (0, [dx as isize, 0, 0])));
    let est = spacetime_correlations(&spec, &lags)?;
    let mut csv = String::from("dt,dx,correlation,std_error\n");
    for ((dt, dx), e) in lags.iter().zip(&est) {
        writeln!(csv, "{dt},{},{},{}", dx[0], e.value, e.std_error).expect("writing to a string");
    }
    run.write("correlations.csv", &csv)?;
    let series: Vec<DecayPoint> = lags
        .iter()
        .zip(&est)
        .filter(|(l, _)| l.1[0] == 0)
        .map(|(l, e)| DecayPoint { lag: l.0 as f64, value: e.value, std_error: e.std_error })
        .collect();
    let mut text = String::new();
    match fit_exponential_decay(&series) {
        Ok(f) => writeln!(text, "decay_rate = {}\nprefactor = {}\nfit_r_squared = {}", f.rate, f.prefactor, f.r_squared),
        Err(e) => writeln!(text, "decay_rate = \n# no fit: {e}"),
    }
    .expect("writing to a string");
    let loc = verify_locality_bounds(r.geometry, &r.coupling, 1000, run.seed());
    writeln!(text, "locality_derivative_ratio = {}\nlocality_holder_ratio = {}", loc.max_deriv_ratio, loc.max_holder_ratio)
        .expect("writing to a string");
    run.write("mixing.txt", &text)?;
    if loc.max_deriv_ratio > 1.0 || loc.max_holder_ratio > 1.0 {
        return Err(CliError::Numeric(format!(
            "locality bounds exceeded: ratios {} and {}",
            loc.max_deriv_ratio, loc.max_holder_ratio
        )));
    }
    Ok(())
}

/// Kernel flow, noise flow and quenched diffusion joined into one report.
pub fn report(run: &Run) -> Result<(), CliError> {
    let kernel = kernel_run(run)?;
    let (noise, k_fit) = noise_run(run)?;
    let quenched = quenched(run)?;
    write_environments(run, &quenched)?;
    let c_last = *kernel.c.last().expect("flow is non-empty");
    let diffusion = diffusion_report(&quenched, c_last, run.resolved.geometry.dim());
    emit_report(&flow_rows(&kernel, Some(&noise), &k_fit), Some(&diffusion), None::<&KappaEstimate>, run.out_dir)?;
    Ok(())
}

