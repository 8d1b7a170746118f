use std::path::{Path, PathBuf};

use arclab_core::polycore::IntPolynomial;
use arclab_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One experiment, as given on the command line or in a TOML file.
///
/// Unset fields fall back to per-command defaults. `command` is one of
/// `sieve`, `expsum`, `arcs-classify`, `arcs-moment`, `vaughan-verify`,
/// `transfer`, `witness-count`, `witness-find`, `witness-weighted`,
/// `scan-minor-arc` or `scan-gauss`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Modulus of `Z_N` for the Fourier count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    /// `unit`, `prime`, `delta-prime` or `poly:<h>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    /// `power`, `log` or `fixed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
    /// Set generator, e.g. `uniform:n=1000,delta=0.5,seed=7`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    /// `brute`, `fft` or `both`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<u64>,
    /// Scan points: `N` values for `scan-minor-arc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<u64>>,
    /// Quadrature points for `arcs-moment`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sieve_cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

const COMMANDS: &[&str] = &[
    "sieve",
    "expsum",
    "arcs-classify",
    "arcs-moment",
    "vaughan-verify",
    "transfer",
    "witness-count",
    "witness-find",
    "witness-weighted",
    "scan-minor-arc",
    "scan-gauss",
];

impl ExperimentConfig {
    pub fn new(command: &str) -> Self {
        ExperimentConfig { command: command.to_string(), ..Default::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.normalized()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config fields are all serialisable")
    }

    /// Validates the command and rewrites `psi` into canonical form.
    pub fn normalized(mut self) -> Result<Self> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(Error::Parse(format!(
                "unknown command '{}', expected one of {}",
                self.command,
                COMMANDS.join(", ")
            )));
        }
        if let Some(p) = &self.psi {
            let parsed: IntPolynomial = p.parse()?;
            self.psi = Some(parsed.to_string());
        }
        if let Some(p) = &self.phase {
            self.phase = Some(p.split_whitespace().collect());
        }
        Ok(self)
    }
}
