//! Run configuration: JSON config file plus flag overrides.

use anyhow::{Context, Result, bail};
use fcshadow::dynamics::{InitialStateKind, InitialStateSpec, QuenchConfig};
use fcshadow::spin::SubsystemSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Decoherence applied during the quench (stand-in dephasing model).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-site dephasing probability per millisecond; 0 disables it.
    #[serde(default)]
    pub dephasing_gamma_per_ms: f64,
    /// Trotter slice for interleaving dephasing with the evolution.
    #[serde(default = "default_dt")]
    pub dephasing_dt_ms: f64,
}

fn default_dt() -> f64 {
    0.1
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            dephasing_gamma_per_ms: 0.0,
            dephasing_dt_ms: default_dt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub n_u: usize,
    pub n_m: usize,
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        // Néel-quench experimental budget
        AcquisitionConfig {
            n_u: 500,
            n_m: 150,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Subsystem syntax: inclusive range "a:b" or explicit list "a,b,c".
    pub subsystem: String,
    pub axis: String,
    pub grid_points: usize,
    #[serde(default)]
    pub bulk: bool,
    #[serde(default)]
    pub jackknife: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            subsystem: "4:7".to_string(),
            axis: "z".to_string(),
            grid_points: 65,
            bulk: false,
            jackknife: false,
        }
    }
}

/// Full pipeline configuration; every command reads the sections it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_system")]
    pub system: QuenchConfig,
    #[serde(default = "default_state")]
    pub state: InitialStateSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_system() -> QuenchConfig {
    QuenchConfig::case_i()
}

fn default_state() -> InitialStateSpec {
    InitialStateSpec::neel()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::case_i()
    }
}

impl RunConfig {
    /// The Néel-quench experiment defaults (N=10, J0=420 rad/s, α=1.24).
    pub fn case_i() -> Self {
        RunConfig {
            system: QuenchConfig::case_i(),
            state: InitialStateSpec::neel(),
            noise: NoiseConfig::default(),
            acquisition: AcquisitionConfig {
                n_u: 500,
                n_m: 150,
                seed: 1,
            },
            analysis: AnalysisConfig::default(),
        }
    }

    /// The tilted-ferromagnet experiment defaults (N=12, J0=560 rad/s, α=1,
    /// θ=0.5π, N_M=30).
    pub fn case_ii() -> Self {
        RunConfig {
            system: QuenchConfig::case_ii(),
            state: InitialStateSpec::tilted(0.5 * std::f64::consts::PI),
            noise: NoiseConfig::default(),
            acquisition: AcquisitionConfig {
                n_u: 500,
                n_m: 30,
                seed: 1,
            },
            analysis: AnalysisConfig {
                subsystem: "5:8".to_string(),
                ..AnalysisConfig::default()
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parse the command-line subsystem syntax: "a:b" (inclusive range) or
/// "a,b,c" (explicit list); 1-based site labels.
pub fn parse_subsystem(text: &str) -> Result<SubsystemSpec> {
    let text = text.trim();
    let spec = if let Some((lo, hi)) = text.split_once(':') {
        let first: usize = lo.trim().parse().context("subsystem range start")?;
        let last: usize = hi.trim().parse().context("subsystem range end")?;
        SubsystemSpec::contiguous(first, last)
    } else {
        let sites: Vec<usize> = text
            .split(',')
            .map(|tok| tok.trim().parse::<usize>().context("subsystem site"))
            .collect::<Result<_>>()?;
        SubsystemSpec::new(sites)
    };
    spec.map_err(|e| anyhow::anyhow!("invalid subsystem `{text}`: {e}"))
}

/// Parse a comma-separated list of floats.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{tok}`"))
        })
        .collect()
}

/// Parse a comma-separated list of 1-based site indices.
pub fn parse_site_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .with_context(|| format!("bad site `{tok}`"))
        })
        .collect()
}

/// Parse the initial-state kind flag.
pub fn parse_state_kind(text: &str) -> Result<InitialStateKind> {
    match text.trim().to_ascii_lowercase().as_str() {
        "neel" => Ok(InitialStateKind::Neel),
        "tilted" | "tilted_ferromagnet" => Ok(InitialStateKind::TiltedFerromagnet),
        other => bail!("unknown initial state `{other}` (expected neel|tilted)"),
    }
}
