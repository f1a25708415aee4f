//! Plain-text sectioned key-value run configuration.
//!
//! The format is deliberately dependency-free and diffable:
//!
//! ```text
//! [model]
//! kappa = 0.5
//! lambda = 0.5 -0.25 -0.25
//! a_row = 0.0 -3.5 -3.5     # repeated n_components times
//! mobility = projector       # or repeated mobility_row lines
//! [discretization]
//! stabilization = auto       # resolves to b/(epsilon h_reg)
//! ```
//!
//! `#` starts a comment; repeated keys (`a_row`, `mobility_row`) accumulate
//! in file order. Unknown keys and malformed values are reported by name.

use std::path::PathBuf;

use mcps_core::fields::{ModelParams, Mobility};
use mcps_core::potential::{EntropySpec, InteractionMatrix};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MobilitySpec {
    Projector,
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilization {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct ModelBlock {
    pub kappa: f64,
    pub sigma: f64,
    pub b: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub radius: f64,
    pub n_components: usize,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub a_rows: Vec<Vec<f64>>,
    pub mobility: MobilitySpec,
}

#[derive(Debug, Clone)]
pub struct DiscretizationBlock {
    pub lmax: usize,
    pub dt: f64,
    pub t_final: f64,
    pub h_reg: f64,
    pub stabilization: Stabilization,
}

#[derive(Debug, Clone)]
pub struct InitBlock {
    pub seed: u64,
    pub amplitude: f64,
    pub l_init: usize,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct OutputBlock {
    pub outdir: PathBuf,
    pub diagnostics_every: u64,
    pub snapshot_every: u64,
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub discretization: DiscretizationBlock,
    pub init: InitBlock,
    pub output: OutputBlock,
    /// FNV-1a hash of the raw configuration text; stored in checkpoints so a
    /// resumed run refuses mismatched settings.
    pub source_hash: u64,
}

/// FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The built-in desk-scale configuration used when no file is given.
pub const DEFAULT_CONFIG: &str = "\
[model]
kappa = 0.5
sigma = 1.5
b = 1.0
epsilon = 0.1
beta = 1.0
radius = 1.0
n_components = 3
lambda = 0.5 -0.25 -0.25
alpha = 0.4 0.35 0.25
a_row = 0.0 -3.5 -3.5
a_row = -3.5 0.0 -3.5
a_row = -3.5 -3.5 0.0
mobility = projector

[discretization]
lmax = 24
dt = 1e-3
t_final = 10.0
h_reg = 1e-4
stabilization = 350

[init]
seed = 42
amplitude = 0.1
l_init = 4
margin = 0.05

[output]
outdir = out
diagnostics_every = 10
snapshot_every = 0
checkpoint_every = 0
";

struct RawConfig {
    // (section, key, value) in file order
    entries: Vec<(String, String, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if section.is_empty() {
                return Err(CliError::Config(format!(
                    "line {}: key `{key}` appears before any [section]",
                    lineno + 1
                )));
            }
            entries.push((section.clone(), key, value));
        }
        Ok(Self { entries })
    }

    fn take(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    fn take_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
            .collect()
    }

    fn require(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.take(section, key)
            .ok_or_else(|| CliError::Config(format!("missing key `{key}` in [{section}]")))
    }
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse().map_err(|_| {
        CliError::Config(format!("[{section}] {key}: `{v}` is not a number"))
    })
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| {
        CliError::Config(format!("[{section}] {key}: `{v}` is not a nonnegative integer"))
    })
}

fn parse_u64(section: &str, key: &str, v: &str) -> Result<u64, CliError> {
    v.parse().map_err(|_| {
        CliError::Config(format!("[{section}] {key}: `{v}` is not a nonnegative integer"))
    })
}

fn parse_vec(section: &str, key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split_whitespace()
        .map(|t| parse_f64(section, key, t))
        .collect()
}

impl RunConfig {
    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("built-in configuration parses")
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw = RawConfig::parse(text)?;
        let sec = "model";
        let n = parse_usize(sec, "n_components", raw.require(sec, "n_components")?)?;
        if n < 2 {
            return Err(CliError::Config("[model] n_components: need at least 2".into()));
        }
        let lambda = parse_vec(sec, "lambda", raw.require(sec, "lambda")?)?;
        let alpha = parse_vec(sec, "alpha", raw.require(sec, "alpha")?)?;
        if lambda.len() != n || alpha.len() != n {
            return Err(CliError::Config(format!(
                "[model] lambda/alpha must have n_components = {n} entries"
            )));
        }
        let a_rows = raw
            .take_all(sec, "a_row")
            .iter()
            .map(|v| parse_vec(sec, "a_row", v))
            .collect::<Result<Vec<_>, _>>()?;
        if a_rows.len() != n || a_rows.iter().any(|r| r.len() != n) {
            return Err(CliError::Config(format!(
                "[model] a_row: need {n} rows of {n} entries"
            )));
        }
        let mobility = match raw.take(sec, "mobility") {
            Some("projector") => MobilitySpec::Projector,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "[model] mobility: `{other}` (expected `projector` or mobility_row lines)"
                )))
            }
            None => {
                let rows = raw
                    .take_all(sec, "mobility_row")
                    .iter()
                    .map(|v| parse_vec(sec, "mobility_row", v))
                    .collect::<Result<Vec<_>, _>>()?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(format!(
                        "[model] mobility_row: need {n} rows of {n} entries (or `mobility = projector`)"
                    )));
                }
                MobilitySpec::Rows(rows)
            }
        };
        let model = ModelBlock {
            kappa: parse_f64(sec, "kappa", raw.require(sec, "kappa")?)?,
            sigma: parse_f64(sec, "sigma", raw.require(sec, "sigma")?)?,
            b: parse_f64(sec, "b", raw.require(sec, "b")?)?,
            epsilon: parse_f64(sec, "epsilon", raw.require(sec, "epsilon")?)?,
            beta: parse_f64(sec, "beta", raw.require(sec, "beta")?)?,
            radius: parse_f64(sec, "radius", raw.require(sec, "radius")?)?,
            n_components: n,
            lambda,
            alpha,
            a_rows,
            mobility,
        };

        let sec = "discretization";
        let stabilization = match raw.require(sec, "stabilization")? {
            "auto" => Stabilization::Auto,
            v => Stabilization::Value(parse_f64(sec, "stabilization", v)?),
        };
        let discretization = DiscretizationBlock {
            lmax: parse_usize(sec, "lmax", raw.require(sec, "lmax")?)?,
            dt: parse_f64(sec, "dt", raw.require(sec, "dt")?)?,
            t_final: parse_f64(sec, "t_final", raw.require(sec, "t_final")?)?,
            h_reg: parse_f64(sec, "h_reg", raw.require(sec, "h_reg")?)?,
            stabilization,
        };

        let sec = "init";
        let init = InitBlock {
            seed: parse_u64(sec, "seed", raw.require(sec, "seed")?)?,
            amplitude: parse_f64(sec, "amplitude", raw.require(sec, "amplitude")?)?,
            l_init: parse_usize(sec, "l_init", raw.require(sec, "l_init")?)?,
            margin: parse_f64(sec, "margin", raw.require(sec, "margin")?)?,
        };

        let sec = "output";
        let output = OutputBlock {
            outdir: PathBuf::from(raw.require(sec, "outdir")?),
            diagnostics_every: parse_u64(
                sec,
                "diagnostics_every",
                raw.take(sec, "diagnostics_every").unwrap_or("1"),
            )?,
            snapshot_every: parse_u64(
                sec,
                "snapshot_every",
                raw.take(sec, "snapshot_every").unwrap_or("0"),
            )?,
            checkpoint_every: parse_u64(
                sec,
                "checkpoint_every",
                raw.take(sec, "checkpoint_every").unwrap_or("0"),
            )?,
        };

        let cfg = Self {
            model,
            discretization,
            init,
            output,
            source_hash: fnv1a(text.as_bytes()),
        };
        // validate the physical parameters eagerly so errors carry key names
        cfg.to_model_params()?;
        if cfg.discretization.lmax < 2 {
            return Err(CliError::Config("[discretization] lmax: must be >= 2".into()));
        }
        if !(cfg.discretization.t_final > 0.0) {
            return Err(CliError::Config(
                "[discretization] t_final: must be positive".into(),
            ));
        }
        if cfg.output.diagnostics_every == 0 {
            return Err(CliError::Config(
                "[output] diagnostics_every: must be >= 1".into(),
            ));
        }
        Ok(cfg)
    }

    /// The resolved stabilization coefficient.
    pub fn resolved_stabilization(&self) -> f64 {
        match self.discretization.stabilization {
            Stabilization::Auto => ModelParams::auto_stabilization(
                self.model.b,
                self.model.epsilon,
                self.discretization.h_reg,
            ),
            Stabilization::Value(v) => v,
        }
    }

    pub fn to_model_params(&self) -> Result<ModelParams, CliError> {
        let interaction = InteractionMatrix::new(self.model.a_rows.clone())
            .map_err(|e| CliError::Config(format!("[model] a_row: {e}")))?;
        let mobility = match &self.model.mobility {
            MobilitySpec::Projector => Mobility::projector(self.model.n_components),
            MobilitySpec::Rows(rows) => Mobility::validate(rows.clone())
                .map_err(|e| CliError::Config(format!("[model] mobility_row: {e}")))?,
        };
        let entropy = EntropySpec::logarithmic(self.discretization.h_reg)
            .map_err(|e| CliError::Config(format!("[discretization] h_reg: {e}")))?;
        let params = ModelParams {
            kappa: self.model.kappa,
            sigma: self.model.sigma,
            b: self.model.b,
            epsilon: self.model.epsilon,
            beta: self.model.beta,
            radius: self.model.radius,
            lambda: self.model.lambda.clone(),
            interaction,
            alpha: self.model.alpha.clone(),
            mobility,
            entropy,
            h: self.discretization.h_reg,
            stabilization: self.resolved_stabilization(),
            dt: self.discretization.dt,
        };
        params
            .validate()
            .map_err(|e| CliError::Config(format!("invalid parameters: {e}")))?;
        Ok(params)
    }

    pub fn total_steps(&self) -> u64 {
        (self.discretization.t_final / self.discretization.dt).round() as u64
    }
}
