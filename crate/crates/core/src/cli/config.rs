//! Run configuration: a sectioned TOML file plus dotted `key=value` overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Command;
use crate::error::{Error, Result};
use crate::experiments::{functional, Threads};
use crate::models::{build_anderson, build_chc, build_diagonal_additive, ModelSpec};
use crate::schemes::SchemeKind;
use crate::spectral::CoeffState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Anderson,
    Chc,
    DiagonalAdditive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    VarianceGap,
    WeakGap,
}

/// `[model]`: family and parameters. Unused parameters are ignored by the other families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: Option<ModelKind>,
    pub modes: Option<usize>,
    pub nu: f64,
    pub kappa: f64,
    /// Leading coefficients of the initial state; the rest are zero.
    pub initial: Vec<f64>,
    pub c: f64,
    pub rho: f64,
    pub delta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: None,
            modes: None,
            nu: 0.1,
            kappa: 0.5,
            initial: vec![1.0],
            c: PI * PI,
            rho: 2.0,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(rename = "N_ref")]
    pub n_ref: usize,
    /// Step sizes for `lower-bound`.
    pub h: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            t_end: 1.0,
            n: vec![8, 16, 32, 64, 128],
            n_ref: 8192,
            h: (3..=10).map(|k| 2f64.powi(-k)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub samples: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerBoundSection {
    pub quantity: Quantity,
}

impl Default for LowerBoundSection {
    fn default() -> Self {
        LowerBoundSection {
            quantity: Quantity::VarianceGap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    /// Distances `||xi_a - xi_b||`; `xi_b` shifts the first coefficient.
    pub distances: Vec<f64>,
    /// Seeds `mc.seed, mc.seed + 1, ...`.
    pub seeds: u64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            distances: vec![0.1, 1.0],
            seeds: 5,
            n: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Binary noise bundle to drive the path instead of sampling one.
    pub noise_in: Option<String>,
    /// Where to save the bundle that drove the path.
    pub noise_out: Option<String>,
}

/// Everything a run needs; fields left unset get per-subcommand defaults in [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scheme: Option<SchemeKind>,
    pub functional: Option<String>,
    pub model: ModelSection,
    pub grid: GridSection,
    pub mc: McSection,
    pub output: OutputSection,
    pub lower_bound: LowerBoundSection,
    pub perturbation: PerturbationSection,
    pub simulate: SimulateSection,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

// Parse an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("malformed override key '{key}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override '{key}': '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        toml::Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

impl RunConfig {
    /// Parse TOML text and apply `key=value` overrides; unknown keys are errors.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config_err(format!("override '{o}' is not of the form key=value")))?;
            set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    /// Fill per-subcommand defaults and validate.
    pub fn resolve(mut self, cmd: Command) -> Result<Self> {
        let default_kind = match cmd {
            Command::LowerBound | Command::OracleCheck => ModelKind::DiagonalAdditive,
            _ => ModelKind::Anderson,
        };
        let kind = *self.model.kind.get_or_insert(default_kind);
        self.model.modes.get_or_insert(match (kind, cmd) {
            (ModelKind::Anderson, _) => 64,
            (ModelKind::Chc, _) => 32,
            (ModelKind::DiagonalAdditive, Command::LowerBound) => 2000,
            (ModelKind::DiagonalAdditive, _) => 64,
        });
        self.scheme.get_or_insert(SchemeKind::ExponentialEuler);
        self.functional.get_or_insert_with(|| "exp_neg_sq_norm".into());
        self.mc.samples.get_or_insert(match cmd {
            Command::WeakRate => 200_000,
            Command::StrongRate | Command::OracleCheck => 10_000,
            Command::PerturbationCheck => 1_000,
            Command::Simulate | Command::LowerBound => 1,
        });
        let format = *self.output.format.get_or_insert(Format::Csv);
        self.output
            .path
            .get_or_insert_with(|| format!("{}.{}", cmd.name(), format.extension()));
        self.validate(cmd)?;
        Ok(self)
    }

    fn validate(&self, cmd: Command) -> Result<()> {
        functional(self.functional())?;
        let g = &self.grid;
        if !(g.t_end > 0.0) || !g.t_end.is_finite() {
            return Err(config_err(format!("grid.T must be positive, got {}", g.t_end)));
        }
        if !g.n_ref.is_power_of_two() {
            return Err(config_err(format!("grid.N_ref must be a power of two, got {}", g.n_ref)));
        }
        if g.n.is_empty() {
            return Err(config_err("grid.N must not be empty"));
        }
        for &n in &g.n {
            if !n.is_power_of_two() || g.n_ref % n != 0 {
                return Err(config_err(format!(
                    "grid.N entry {n} must be a power of two dividing N_ref={}",
                    g.n_ref
                )));
            }
        }
        if cmd == Command::LowerBound {
            if self.model_kind() != ModelKind::DiagonalAdditive {
                return Err(config_err("lower-bound needs model.kind = \"diagonal-additive\""));
            }
            if g.h.is_empty() || g.h.iter().any(|h| !(*h > 0.0)) {
                return Err(config_err("grid.h must be a nonempty list of positive step sizes"));
            }
        }
        if cmd == Command::OracleCheck && self.model_kind() != ModelKind::DiagonalAdditive {
            return Err(config_err("oracle-check needs model.kind = \"diagonal-additive\""));
        }
        if cmd == Command::PerturbationCheck {
            let p = &self.perturbation;
            if p.n == 0 || p.seeds == 0 || p.distances.is_empty() {
                return Err(config_err("perturbation needs N > 0, seeds > 0 and at least one distance"));
            }
        }
        if self.model.initial.len() > self.modes() {
            return Err(config_err(format!(
                "model.initial has {} entries but model.modes = {}",
                self.model.initial.len(),
                self.modes()
            )));
        }
        Ok(())
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model.kind.unwrap_or(ModelKind::Anderson)
    }

    pub fn modes(&self) -> usize {
        self.model.modes.unwrap_or(64)
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme.unwrap_or(SchemeKind::ExponentialEuler)
    }

    pub fn functional(&self) -> &str {
        self.functional.as_deref().unwrap_or("exp_neg_sq_norm")
    }

    pub fn samples(&self) -> usize {
        self.mc.samples.unwrap_or(1)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or(Format::Csv)
    }

    pub fn initial_state(&self) -> CoeffState {
        let mut v = vec![0.0; self.modes()];
        for (d, s) in v.iter_mut().zip(&self.model.initial) {
            *d = *s;
        }
        CoeffState(v)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let t = self.grid.t_end;
        match self.model_kind() {
            ModelKind::Anderson => build_anderson(self.modes(), m.nu, m.kappa, self.initial_state(), t),
            ModelKind::Chc => build_chc(self.modes(), m.kappa, self.initial_state(), t),
            ModelKind::DiagonalAdditive => build_diagonal_additive(self.modes(), m.c, m.rho, m.delta, t),
        }
    }

    /// Flattened `section.key -> value` view of the resolved configuration.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Ok(v) = toml::Value::try_from(self) {
            flatten("", &v, &mut out);
        }
        out
    }
}

/// `n`, `auto`, or unset (falls back to `SPDE_LAB_THREADS`, then auto).
pub fn parse_threads(flag: Option<&str>) -> Result<Threads> {
    let env = std::env::var("SPDE_LAB_THREADS").ok();
    let raw = match flag.map(str::to_string).or(env) {
        None => return Ok(Threads::Auto),
        Some(r) => r,
    };
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(Threads::Auto);
    }
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(config_err(format!("threads must be a positive integer or 'auto', got '{raw}'"))),
    }
}
