//! Strict JSON run configurations, one per subcommand.

use serde::{Deserialize, Serialize};

use pathwave::io::PathwayDoc;
use pathwave::sweep::{default_sigma_grid, GradientKind};
use pathwave::{Error, IntegratorConfig, Result, StochasticEnsembleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn long_horizon() -> IntegratorConfig {
    IntegratorConfig::default().with_t_end(1e5)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPathway {
    pub name: String,
    pub pathway: PathwayDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub runs: Vec<NamedPathway>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Times at which full node profiles are written.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_n() -> usize {
    200
}

fn default_true() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_true")]
    pub fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiGrid {
    Values(Vec<f64>),
    /// `count` evenly spaced values in `(-phi_c + margin, phi_c - margin)` for each `B`.
    Window {
        count: usize,
        margin: f64,
    },
}

impl Default for PhiGrid {
    fn default() -> Self {
        PhiGrid::Window { count: 25, margin: 0.01 }
    }
}

impl PhiGrid {
    pub fn values(&self, b: f64) -> Result<Vec<f64>> {
        match self {
            PhiGrid::Values(v) => Ok(v.clone()),
            PhiGrid::Window { count, margin } => {
                let edge = 1.0 / b - margin;
                if *count < 2 || edge.is_nan() || edge <= 0.0 {
                    return Err(Error::InvalidParams(format!("phi window empty at B = {b} (margin {margin})")));
                }
                Ok((0..*count).map(|k| -edge + 2.0 * edge * k as f64 / (*count - 1) as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesRequest {
    #[serde(rename = "B")]
    pub b: f64,
    pub phi: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavespeedConfig {
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(default)]
    pub phi: PhiGrid,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Inhibitory waves (`-1` into an active chain) instead of activation waves.
    #[serde(default)]
    pub inhibitory: bool,
    #[serde(default = "long_horizon")]
    pub integrator: IntegratorConfig,
    /// Full velocity traces `c_j` for selected parameters.
    #[serde(default)]
    pub series: Vec<SeriesRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exact,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDoc {
    pub mode: OracleKind,
    /// Precomputed table to load instead of building one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_file: Option<String>,
}

fn exact_oracle() -> OracleDoc {
    OracleDoc { mode: OracleKind::Exact, table_file: None }
}

fn table_oracle() -> OracleDoc {
    OracleDoc { mode: OracleKind::Table, table_file: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientDoc {
    pub kind: GradientKind,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticDoc {
    pub ensemble: StochasticEnsembleSpec,
    #[serde(default)]
    pub realization: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathway: Option<PathwayDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticDoc>,
    #[serde(default = "exact_oracle")]
    pub oracle: OracleDoc,
    #[serde(default = "long_horizon")]
    pub integrator: IntegratorConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub ensemble: StochasticEnsembleSpec,
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "table_oracle")]
    pub oracle: OracleDoc,
    #[serde(default = "long_horizon")]
    pub integrator: IntegratorConfig,
    /// Also write one JSON line per realization.
    #[serde(default)]
    pub details: bool,
}

/// Keys shared by every configuration document.
pub const ENVELOPE_KEYS: [&str; 3] = ["command", "format", "digits"];
