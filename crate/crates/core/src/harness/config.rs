//! Experiment configuration files (TOML).
//!
//! ```toml
//! master_seed = 1
//! preset = "desk"                 # synthetic-full | semisynthetic | desk | custom
//! methods = ["BSS", "FSS", "LASSO", "ENET"]
//! enet_alphas = [0.1, 0.5, 0.9]
//! lambda_grid_size = 1000
//! k_range = { min = 1, max = 15 }
//! bss_time_budget_ms = 1000
//! budget_clock = "work"           # or "wall"
//! warm_start_restarts = 50
//! replications = 20
//! output_dir = "out"
//! workers = 4
//! expression_matrix = "expr.csv"  # semi-synthetic scenarios only
//!
//! [[scenarios]]                   # custom preset only
//! scenario_id = "low-block0.70-consecutive-tau0.42"
//! n = 1000
//! p = 100
//! tau = 0.42
//! replications = 5                # optional per-scenario override
//! design = "synthetic"            # or "semisynthetic"
//! covariance = { structure = "block", rho = 0.7, block_size = 10 }
//! beta = { s = 10, placement = "consecutive", value = 1.0 }
//! ```
//!
//! Unknown keys are errors. Relative paths are taken relative to the
//! directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::grid::{enumerate_grid, DESK_BSS_BUDGET_MS, DESK_REPLICATIONS};
use crate::datagen::{CovarianceSpec, Design, Placement, ScenarioSpec};
use crate::error::{Error, Result};
use crate::model::Method;
use crate::work::BudgetClock;

pub const DEFAULT_ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_GRID_SIZE: usize = 1000;
pub const DEFAULT_K_RANGE: (usize, usize) = (1, 15);
pub const DEFAULT_REPLICATIONS: usize = 100;
pub const SYNTHETIC_BUDGET_MS: u64 = 180_000;
pub const SEMISYNTHETIC_BUDGET_MS: u64 = 600_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    SyntheticFull,
    SemiSynthetic,
    Desk,
    Custom,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::SyntheticFull => "synthetic-full",
            Preset::SemiSynthetic => "semisynthetic",
            Preset::Desk => "desk",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Preset::SyntheticFull, Preset::SemiSynthetic, Preset::Desk, Preset::Custom]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| config_err("preset", format!("unknown preset `{s}`")))
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub preset: Preset,
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<Method>,
    pub enet_alphas: Vec<f64>,
    pub lambda_grid_size: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Per subset size, warm start included.
    pub bss_time_budget_ms: u64,
    pub budget_clock: BudgetClock,
    pub warm_start_restarts: usize,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub expression_matrix: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: u64,
    preset: Option<String>,
    methods: Option<Vec<String>>,
    enet_alphas: Option<Vec<f64>>,
    lambda_grid_size: Option<usize>,
    k_range: Option<RawKRange>,
    bss_time_budget_ms: Option<u64>,
    budget_clock: Option<BudgetClock>,
    warm_start_restarts: Option<usize>,
    replications: Option<usize>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    expression_matrix: Option<PathBuf>,
    scenarios: Option<Vec<ScenarioEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKRange {
    min: usize,
    max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    #[default]
    Synthetic,
    Semisynthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaEntry {
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default = "default_value")]
    pub value: f64,
}

fn default_s() -> usize {
    10
}
fn default_placement() -> Placement {
    Placement::Consecutive
}
fn default_value() -> f64 {
    1.0
}

impl Default for BetaEntry {
    fn default() -> Self {
        BetaEntry {
            s: default_s(),
            placement: default_placement(),
            value: default_value(),
        }
    }
}

/// One `[[scenarios]]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub scenario_id: String,
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub replications: Option<usize>,
    #[serde(default)]
    pub design: DesignKind,
    pub covariance: Option<CovarianceSpec>,
    pub beta: Option<BetaEntry>,
}

impl ScenarioEntry {
    fn into_spec(self, default_reps: usize, path: &str) -> Result<ScenarioSpec> {
        let design = match self.design {
            DesignKind::Synthetic => {
                let covariance = self
                    .covariance
                    .ok_or_else(|| config_err(format!("{path}.covariance"), "required for synthetic designs"))?;
                let beta = self.beta.unwrap_or_default();
                Design::Synthetic {
                    covariance,
                    placement: beta.placement,
                    s: beta.s,
                    value: beta.value,
                }
            }
            DesignKind::Semisynthetic => {
                if self.covariance.is_some() {
                    return Err(config_err(format!("{path}.covariance"), "not allowed for semisynthetic designs"));
                }
                if self.beta.is_some() {
                    return Err(config_err(format!("{path}.beta"), "not allowed for semisynthetic designs"));
                }
                Design::SemiSynthetic
            }
        };
        let replications = self.replications.unwrap_or(default_reps);
        if replications == 0 {
            return Err(config_err(format!("{path}.replications"), "must be at least 1"));
        }
        let spec = ScenarioSpec {
            scenario_id: self.scenario_id,
            n: self.n,
            p: self.p,
            tau: self.tau,
            replications,
            design,
        };
        spec.validate().map_err(|e| config_err(path, e.to_string()))?;
        Ok(spec)
    }
}

/// Single-scenario file read by `gen-data`: the fields of one
/// `[[scenarios]]` table plus an optional `expression_matrix`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioFile {
    scenario_id: String,
    n: usize,
    p: usize,
    tau: f64,
    replications: Option<usize>,
    #[serde(default)]
    design: DesignKind,
    covariance: Option<CovarianceSpec>,
    beta: Option<BetaEntry>,
    expression_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub spec: ScenarioSpec,
    pub expression_matrix: Option<PathBuf>,
}

/// Deserializes TOML, reporting the failing field as a dotted path.
fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| config_err("<document>", e.to_string().trim()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".to_string() } else { path };
        config_err(path, e.into_inner().to_string().trim())
    })
}

fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenarioFile = parse_toml(text)?;
        let entry = ScenarioEntry {
            scenario_id: raw.scenario_id,
            n: raw.n,
            p: raw.p,
            tau: raw.tau,
            replications: raw.replications,
            design: raw.design,
            covariance: raw.covariance,
            beta: raw.beta,
        };
        let spec = entry.into_spec(1, "<document>")?;
        if matches!(spec.design, Design::SemiSynthetic) && raw.expression_matrix.is_none() {
            return Err(config_err("expression_matrix", "required for semisynthetic designs"));
        }
        Ok(ScenarioFile {
            spec,
            expression_matrix: raw.expression_matrix,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        file.expression_matrix = file.expression_matrix.map(|p| resolve(path.parent(), p));
        Ok(file)
    }
}

impl ExperimentConfig {
    /// Parses a config; `preset` (e.g. from the command line) overrides the
    /// file's own `preset` key.
    pub fn from_toml_str(text: &str, preset: Option<Preset>) -> Result<Self> {
        let raw: RawConfig = parse_toml(text)?;
        Self::from_raw(raw, preset, None)
    }

    pub fn load(path: impl AsRef<Path>, preset: Option<Preset>) -> Result<Self> {
        let path = path.as_ref();
        let raw: RawConfig = parse_toml(&std::fs::read_to_string(path)?)?;
        Self::from_raw(raw, preset, path.parent())
    }

    fn from_raw(raw: RawConfig, preset_override: Option<Preset>, base: Option<&Path>) -> Result<Self> {
        let preset = match (preset_override, &raw.preset) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse()?,
            (None, None) if raw.scenarios.is_some() => Preset::Custom,
            (None, None) => return Err(config_err("preset", "either a preset or [[scenarios]] is required")),
        };

        let methods = match raw.methods {
            None => Method::ALL.to_vec(),
            Some(list) => {
                let mut out = Vec::new();
                for (i, m) in list.iter().enumerate() {
                    let m: Method = m.parse().map_err(|e: Error| config_err(format!("methods[{i}]"), e.to_string()))?;
                    if out.contains(&m) {
                        return Err(config_err(format!("methods[{i}]"), format!("duplicate method {m}")));
                    }
                    out.push(m);
                }
                if out.is_empty() {
                    return Err(config_err("methods", "at least one method is required"));
                }
                out
            }
        };

        let enet_alphas = raw.enet_alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
        for (i, &a) in enet_alphas.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return Err(config_err(format!("enet_alphas[{i}]"), format!("{a} must lie in (0, 1]")));
            }
            if enet_alphas[..i].contains(&a) {
                return Err(config_err(format!("enet_alphas[{i}]"), format!("duplicate alpha {a}")));
            }
        }
        if methods.contains(&Method::Enet) && enet_alphas.is_empty() {
            return Err(config_err("enet_alphas", "ENET needs at least one alpha"));
        }

        let lambda_grid_size = raw.lambda_grid_size.unwrap_or(DEFAULT_GRID_SIZE);
        if lambda_grid_size < 2 {
            return Err(config_err("lambda_grid_size", "must be at least 2"));
        }
        let (k_min, k_max) = raw.k_range.map_or(DEFAULT_K_RANGE, |k| (k.min, k.max));
        if k_min == 0 {
            return Err(config_err("k_range.min", "must be at least 1"));
        }
        if k_max < k_min {
            return Err(config_err("k_range.max", format!("{k_max} is below k_range.min = {k_min}")));
        }
        let workers = raw.workers.unwrap_or(1);
        if workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        let default_reps = raw.replications.unwrap_or(match preset {
            Preset::Desk => DESK_REPLICATIONS,
            _ => DEFAULT_REPLICATIONS,
        });
        if default_reps == 0 {
            return Err(config_err("replications", "must be at least 1"));
        }

        let scenarios = match (preset, raw.scenarios) {
            (Preset::Custom, None) => return Err(config_err("scenarios", "the custom preset needs [[scenarios]]")),
            (Preset::Custom, Some(entries)) => {
                if entries.is_empty() {
                    return Err(config_err("scenarios", "at least one scenario is required"));
                }
                let mut specs = Vec::with_capacity(entries.len());
                for (i, e) in entries.into_iter().enumerate() {
                    let path = format!("scenarios[{i}]");
                    let spec = e.into_spec(default_reps, &path)?;
                    if specs.iter().any(|s: &ScenarioSpec| s.scenario_id == spec.scenario_id) {
                        return Err(config_err(format!("{path}.scenario_id"), "duplicate scenario id"));
                    }
                    specs.push(spec);
                }
                specs
            }
            (_, Some(_)) => {
                return Err(config_err("scenarios", format!("not allowed with the {preset} preset")));
            }
            (named, None) => enumerate_grid(named, default_reps),
        };

        let semi = scenarios.iter().any(|s| matches!(s.design, Design::SemiSynthetic));
        let expression_matrix = raw.expression_matrix.map(|p| resolve(base, p));
        if semi && expression_matrix.is_none() {
            return Err(config_err("expression_matrix", "required for semisynthetic scenarios"));
        }
        for (i, s) in scenarios.iter().enumerate() {
            let limit = s.p.min(s.n - 1);
            if k_max > limit {
                return Err(config_err(
                    "k_range.max",
                    format!("{k_max} exceeds min(n - 1, p) = {limit} of scenario {i} ({})", s.scenario_id),
                ));
            }
        }

        let bss_time_budget_ms = raw.bss_time_budget_ms.unwrap_or(match preset {
            Preset::Desk => DESK_BSS_BUDGET_MS,
            _ if semi => SEMISYNTHETIC_BUDGET_MS,
            _ => SYNTHETIC_BUDGET_MS,
        });
        if bss_time_budget_ms == 0 {
            return Err(config_err("bss_time_budget_ms", "must be positive"));
        }

        Ok(ExperimentConfig {
            master_seed: raw.master_seed,
            preset,
            scenarios,
            methods,
            enet_alphas,
            lambda_grid_size,
            k_min,
            k_max,
            bss_time_budget_ms,
            budget_clock: raw.budget_clock.unwrap_or_default(),
            warm_start_restarts: raw.warm_start_restarts.unwrap_or(crate::selectors::bss::DEFAULT_RESTARTS),
            output_dir: resolve(base, raw.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            workers,
            expression_matrix,
        })
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }
}
