//! JSON experiment configuration shared by all CLI subcommands.

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Flat { n: usize },
    Sphere { n: usize, r0: f64 },
    Cylinder { n: usize, r0: f64 },
    Warped { n: usize, grid: Vec<f64>, warp: Vec<f64> },
}

impl GeometryConfig {
    pub fn to_geometry(&self) -> Result<ModelGeometry> {
        let g = match self {
            GeometryConfig::Flat { n } => ModelGeometry::EuclideanSpace { n: *n },
            GeometryConfig::Sphere { n, r0 } => ModelGeometry::RoundSphere { n: *n, r0: *r0 },
            GeometryConfig::Cylinder { n, r0 } => ModelGeometry::RoundCylinder { n: *n, r0: *r0 },
            GeometryConfig::Warped { n, grid, warp } => ModelGeometry::WarpedProduct {
                n: *n,
                grid: grid.clone(),
                warp: warp.clone(),
            },
        };
        g.validate()?;
        Ok(g)
    }
}

fn default_tau_end() -> f64 {
    1.0
}
fn default_step() -> f64 {
    5e-4
}
fn default_flow_tolerance() -> f64 {
    1e-6
}
fn default_taus() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_tau_end")]
    pub tau_end: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_flow_tolerance")]
    pub flow_tolerance: f64,
    /// τ values reported in flow.csv.
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            tau_end: default_tau_end(),
            step: default_step(),
            flow_tolerance: default_flow_tolerance(),
            taus: default_taus(),
        }
    }
}

fn default_segments() -> usize {
    16
}
fn default_opt_tolerance() -> f64 {
    1e-8
}
fn default_restarts() -> usize {
    3
}
fn default_seed() -> u64 {
    7
}
fn default_cutoff() -> f64 {
    30.0
}
fn default_tail_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgeoConfig {
    pub base: Vec<f64>,
    pub target: Vec<f64>,
    pub tau1: f64,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_opt_tolerance")]
    pub opt_tolerance: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// τ values at which the reduced volume is reported.
    #[serde(default)]
    pub reduced_volume_taus: Vec<f64>,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn default_alpha() -> f64 {
    0.25
}
fn default_i_max() -> usize {
    8
}
fn default_breather_tolerance() -> f64 {
    1e-10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreatherConfig {
    /// Shrinking factor; on spheres and cylinders the canonical value is
    /// implied by the geometry, and a conflicting value is rejected.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Observer point y whose orbit x_i = φ^{-(i+1)}(y) seeds the bound.
    pub y: Vec<f64>,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    #[serde(default = "default_true")]
    pub compute_l_num: bool,
    #[serde(default = "default_breather_tolerance")]
    pub breather_tolerance: f64,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_residual_tolerance() -> f64 {
    1e-3
}
fn default_kappa() -> f64 {
    0.1
}
fn default_probe_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Inclusive range of blow-down indices to examine.
    #[serde(default)]
    pub i_lo: usize,
    #[serde(default = "default_i_max")]
    pub i_hi: usize,
    #[serde(default = "default_residual_tolerance")]
    pub residual_tolerance: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub lgeo: Option<LgeoConfig>,
    #[serde(default)]
    pub breather: Option<BreatherConfig>,
    #[serde(default)]
    pub detect: Option<DetectConfig>,
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"geometry": {"family": "flat", "n": 2}}"#).unwrap();
        assert_eq!(cfg.flow.tau_end, 1.0);
        assert!(cfg.lgeo.is_none());
        cfg.geometry.to_geometry().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"geometry": {"family": "flat", "n": 2}, "bogus": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn invalid_geometry_rejected_on_conversion() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"geometry": {"family": "sphere", "n": 2, "r0": -1.0}}"#)
                .unwrap();
        assert!(cfg.geometry.to_geometry().is_err());
    }
}
