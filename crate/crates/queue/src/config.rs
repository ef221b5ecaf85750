//! Experiment configuration: a TOML document with one table per command.
//! Every key is optional; missing keys take the built-in defaults, so an
//! empty file (or no file) reproduces the reference outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 2024;

fn tenths(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub rate_table: RateTableConfig,
    pub intensity_table: WindowTableConfig,
    pub queue_table: QueueTableConfig,
    pub fig_independence: FigIndependenceConfig,
    pub fig_correlated: FigCorrelatedConfig,
    pub fermi: FermiConfig,
    pub simulate: SimulateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            rate_table: RateTableConfig::default(),
            intensity_table: WindowTableConfig::default(),
            queue_table: QueueTableConfig::default(),
            fig_independence: FigIndependenceConfig::default(),
            fig_correlated: FigCorrelatedConfig::default(),
            fermi: FermiConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateTableConfig {
    pub sigmas: Vec<f64>,
    pub ts: Vec<f64>,
    pub rate: f64,
}

impl Default for RateTableConfig {
    fn default() -> Self {
        Self {
            sigmas: tenths(2, 10),
            ts: tenths(0, 10),
            rate: 1.0,
        }
    }
}

/// Grid over `(σ, t)` of a quantity attached to the window `(t, t+T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowTableConfig {
    pub sigmas: Vec<f64>,
    pub ts: Vec<f64>,
    pub rate: f64,
    pub service_time: f64,
}

impl Default for WindowTableConfig {
    fn default() -> Self {
        Self {
            sigmas: tenths(2, 10),
            ts: tenths(0, 9),
            rate: 1.0,
            service_time: 0.9,
        }
    }
}

/// Same fields as [`WindowTableConfig`], with the mean-queue grid as default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueTableConfig {
    pub sigmas: Vec<f64>,
    pub ts: Vec<f64>,
    pub rate: f64,
    pub service_time: f64,
}

impl Default for QueueTableConfig {
    fn default() -> Self {
        Self {
            sigmas: tenths(1, 10),
            ts: tenths(0, 10),
            rate: 1.0,
            service_time: 0.9,
        }
    }
}

impl From<&QueueTableConfig> for WindowTableConfig {
    fn from(q: &QueueTableConfig) -> Self {
        Self {
            sigmas: q.sigmas.clone(),
            ts: q.ts.clone(),
            rate: q.rate,
            service_time: q.service_time,
        }
    }
}

/// Slot-independent approximation against simulation; simulations run in
/// load mode (`γ = λ = 1`, `T = ρ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigIndependenceConfig {
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Window offset at which the analytic value is evaluated.
    pub t: f64,
    pub horizon: u64,
    pub n_reps: u64,
}

impl Default for FigIndependenceConfig {
    fn default() -> Self {
        Self {
            rhos: vec![0.5, 0.7, 0.9],
            sigmas: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            t: 0.5,
            horizon: 500_000,
            n_reps: 8,
        }
    }
}

/// Correlated approximation against simulation; uniform delays on
/// `[-L, L]`, thinning mode (`λ = T = 1`, `γ = ρ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigCorrelatedConfig {
    pub half_support: u32,
    pub rhos: Vec<f64>,
    pub horizon: u64,
    pub n_reps: u64,
}

impl Default for FigCorrelatedConfig {
    fn default() -> Self {
        Self {
            half_support: 5,
            rhos: vec![0.90, 0.95, 0.98, 0.99],
            horizon: 1_250_000,
            n_reps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FermiConfig {
    pub half_support: u32,
    pub rho: f64,
    /// Operations in one day, for the minimal-α search.
    pub day_operations: u64,
    /// Lowest α of the birth-death chain; `-L+1` when absent.
    pub alpha_floor: Option<i64>,
}

impl Default for FermiConfig {
    fn default() -> Self {
        Self {
            half_support: 2,
            rho: 0.95,
            day_operations: 1000,
            alpha_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub family: Family,
    pub sigma: f64,
    pub half_support: u32,
    pub rate: f64,
    pub survival: f64,
    pub service_time: f64,
    pub horizon: u64,
    pub warmup: Option<u64>,
    pub index_margin: Option<u64>,
    pub track_occupancy: bool,
    pub n_reps: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            family: Family::Gaussian,
            sigma: 1.0,
            half_support: 3,
            rate: 1.0,
            survival: 0.9,
            service_time: 1.0,
            horizon: 10_000,
            warmup: None,
            index_margin: None,
            track_occupancy: false,
            n_reps: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

pub(crate) fn require_grid(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("`{name}` must not be empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!(
            "`{name}` must hold finite numbers"
        )));
    }
    Ok(())
}
