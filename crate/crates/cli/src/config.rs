//! Run configuration: TOML sections with defaults, `--set` overrides and
//! validation into core types.

use std::path::{Path, PathBuf};

use cmlab::chaos::{ChaoticMapSpec, CouplingSpec};
use cmlab::energy::ConductanceModel;
use cmlab::lattice::Geometry;
use cmlab::rg::{Decimation, RgConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub model: ModelSection,
    pub chaos: ChaosSection,
    pub rg: RgSection,
    pub run: RunSection,
    pub analysis: AnalysisSection,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub d: usize,
    pub side: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { d: 1, side: 256 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kappa0: f64,
    pub eps_c: f64,
    pub delta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { kappa0: 0.2, eps_c: 0.3, delta: 0.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosSection {
    /// `cat` or `doubling`.
    pub map: String,
    pub eps: f64,
    pub range: u8,
}

impl Default for ChaosSection {
    fn default() -> Self {
        Self { map: "cat".into(), eps: 0.05, range: 1 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RgSection {
    #[serde(rename = "L")]
    pub factor: usize,
    pub n_max: usize,
    /// Decimation for environments and noise: `block-sum` or `point-sample`.
    pub decimation: String,
    /// Decimation for the kernel flow; `spectral` is also allowed.
    pub kernel_decimation: String,
    pub b_exp: Option<f64>,
    pub realizations: usize,
}

impl Default for RgSection {
    fn default() -> Self {
        Self {
            factor: 4,
            n_max: 3,
            decimation: "block-sum".into(),
            kernel_decimation: "spectral".into(),
            b_exp: None,
            realizations: 100,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon: usize,
    pub snapshot_stride: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Initial energy of `simulate`: `uniform` on `[0, 1)` or `delta`.
    pub initial: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { horizon: 1000, snapshot_stride: 100, seed: 0, out_dir: "out".into(), initial: "uniform".into() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub a_exp: f64,
    /// MSD fit window `[t0, t1]`; defaults to `[horizon/100, horizon]`.
    pub t_window: Option<[u64; 2]>,
    pub n_env: usize,
    pub correlation_samples: usize,
    pub max_lag: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { a_exp: 1.0, t_window: None, n_env: 10, correlation_samples: 1000, max_lag: 8 }
    }
}

/// Core objects built from a validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub geometry: Geometry,
    pub model: ConductanceModel,
    pub map: ChaoticMapSpec,
    pub coupling: CouplingSpec,
    pub rg: RgConfig,
    pub kernel_decimation: Decimation,
}

fn field_error(path: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {reason}"))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn t_window(&self) -> (u64, u64) {
        let h = self.run.horizon as u64;
        self.analysis.t_window.map(|[a, b]| (a, b)).unwrap_or(((h / 100).max(1), h))
    }

    /// Checks every section and builds the core objects. Errors name the
    /// offending field. Block divisibility is only enforced with `needs_rg`.
    pub fn resolve(&self, needs_rg: bool) -> Result<Resolved, CliError> {
        let geometry = Geometry::new(self.geometry.d, self.geometry.side).map_err(|e| field_error("geometry", e))?;
        let model = ConductanceModel::new(self.model.kappa0, self.model.eps_c, self.model.delta, self.geometry.d)
            .map_err(|e| field_error("model", e))?;
        let map = match self.chaos.map.as_str() {
            "cat" => ChaoticMapSpec::CatMap,
            "doubling" => ChaoticMapSpec::Doubling,
            other => return Err(field_error("chaos.map", format!("unknown map `{other}`, expected `cat` or `doubling`"))),
        };
        let coupling = CouplingSpec::new(self.chaos.eps, self.chaos.range).map_err(|e| field_error("chaos", e))?;
        let decimation: Decimation = self.rg.decimation.parse().map_err(|e| field_error("rg.decimation", e))?;
        if decimation == Decimation::Spectral {
            return Err(field_error("rg.decimation", "environments need `block-sum` or `point-sample`"));
        }
        let kernel_decimation: Decimation =
            self.rg.kernel_decimation.parse().map_err(|e| field_error("rg.kernel_decimation", e))?;
        let rg = RgConfig { factor: self.rg.factor, n_max: self.rg.n_max, decimation, b_exp: self.rg.b_exp };
        if needs_rg {
            rg.validate(geometry).map_err(|e| field_error("rg", e))?;
        }
        if self.rg.realizations == 0 {
            return Err(field_error("rg.realizations", "must be positive"));
        }
        if self.run.horizon == 0 {
            return Err(field_error("run.horizon", "must be positive"));
        }
        if self.run.snapshot_stride == 0 {
            return Err(field_error("run.snapshot_stride", "must be positive"));
        }
        if !matches!(self.run.initial.as_str(), "uniform" | "delta") {
            return Err(field_error("run.initial", format!("unknown initial condition `{}`", self.run.initial)));
        }
        if !(self.analysis.a_exp > 0.0) {
            return Err(field_error("analysis.a_exp", "must be positive"));
        }
        if let Some([a, b]) = self.analysis.t_window {
            if a >= b || b > self.run.horizon as u64 {
                return Err(field_error("analysis.t_window", format!("[{a}, {b}] must be increasing and end by the horizon")));
            }
        }
        if self.analysis.correlation_samples < 10 {
            return Err(field_error("analysis.correlation_samples", "must be at least 10"));
        }
        Ok(Resolved { geometry, model, map, coupling, rg, kernel_decimation })
    }
}

/// `section.key=value`, with `value` read as a TOML literal and taken as a
/// plain string when it is not one.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not of the form section.key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut keys: Vec<&str> = path.trim().split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::Config(format!("override `{item}` has no key")))?;
    let mut node = table;
    for k in keys {
        node = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{item}`: `{k}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
