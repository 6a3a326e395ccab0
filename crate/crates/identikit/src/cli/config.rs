//! Run configuration. JSON, versioned through `schema`, unknown fields
//! rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{GaugeSpec, Thresholds};
use crate::error::{Error, Result};
use crate::models::{AaraSpec, CircleSpec, IgMixtureSpec, MixedLogitSpec, SyntheticSpec, TriangularSpec, WtpSpec};
use crate::solvers::RegPolicy;

pub const SCHEMA: &str = "identikit/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub regularization: RegPolicy,
    /// Gauges for the generalized Fisher information.
    #[serde(default = "default_gauges")]
    pub gauges: Vec<GaugeSpec>,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_gauges() -> Vec<GaugeSpec> {
    vec![GaugeSpec::Power { rho: 1.5 }]
}

fn default_out() -> PathBuf {
    PathBuf::from("identikit-out")
}

/// The model and its coarse mesh. The fine mesh refines every grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    IgMixture(IgMixtureSpec),
    MixedLogit(MixedLogitSpec),
    TriangularRc(TriangularSpec),
    CircleRc(CircleSpec),
    Wtp(WtpSpec),
    Euler(EulerConfig),
    Discrete(DiscreteConfig),
    SyntheticSequence(SyntheticSpec),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::IgMixture(_) => "ig_mixture",
            ModelConfig::MixedLogit(_) => "mixed_logit",
            ModelConfig::TriangularRc(_) => "triangular_rc",
            ModelConfig::CircleRc(_) => "circle_rc",
            ModelConfig::Wtp(_) => "wtp",
            ModelConfig::Euler(_) => "euler",
            ModelConfig::Discrete(_) => "discrete",
            ModelConfig::SyntheticSequence(_) => "synthetic_sequence",
        }
    }
}

/// Planted Euler model on a lognormal consumption grid with `n` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    pub theta0: f64,
    pub n: usize,
    #[serde(default)]
    pub aara: AaraSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    /// `p[j][k] = P(Z = j | Z* = k)`.
    pub p: Vec<Vec<f64>>,
    pub latent_weights: Vec<f64>,
}

/// A built-in functional by name, or a representer given on each mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionalSpec {
    Name(String),
    Table(FunctionalTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalTable {
    pub name: String,
    /// Representer values at the coarse domain nodes.
    pub coarse: Vec<f64>,
    /// Values at the fine nodes; defaults to `coarse` when both meshes agree.
    #[serde(default)]
    pub fine: Option<Vec<f64>>,
    /// Center the representer and add this constant back to estimates.
    #[serde(default)]
    pub calibration: Option<f64>,
}

impl FunctionalSpec {
    pub fn name(&self) -> &str {
        match self {
            FunctionalSpec::Name(n) => n,
            FunctionalSpec::Table(t) => &t.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Every refinable axis of the fine mesh has this many times the
    /// intervals of the coarse one.
    pub fine_factor: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { fine_factor: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    /// CSV of observations, one row per draw, one column per coordinate of
    /// the observation space. A non-numeric first row is a header.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Simulated sample size when no data file is given.
    #[serde(default)]
    pub simulate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub ns: Vec<usize>,
    pub reps: usize,
    /// Defaults to the first configured functional.
    #[serde(default)]
    pub functional: Option<String>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig { ns: vec![500, 2000, 8000, 32000], reps: 200, functional: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub rho: f64,
    pub ts: Vec<f64>,
    #[serde(default)]
    pub functional: Option<String>,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { rho: 1.0, ts: vec![0.0125, 0.025, 0.05, 0.1, 0.2], functional: None }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::invalid(format!("config: schema must be \"{SCHEMA}\", found \"{}\"", self.schema)));
        }
        if self.grids.fine_factor < 2 {
            return Err(Error::invalid("config: grids.fine_factor must be at least 2"));
        }
        let t = &self.thresholds;
        for (name, v) in [("tau_null", t.tau_null), ("tau_ident", t.tau_ident), ("delta_conv", t.delta_conv)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("config: thresholds.{name} must be positive, found {v}")));
            }
        }
        if t.betas.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(Error::invalid("config: thresholds.betas must be nonnegative"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.functionals {
            if !seen.insert(f.name()) {
                return Err(Error::invalid(format!("config: functional \"{}\" listed twice", f.name())));
            }
        }
        if self.rates.reps == 0 {
            return Err(Error::invalid("config: rates.reps must be at least 1"));
        }
        if !(self.path.rho >= 1.0) {
            return Err(Error::invalid("config: path.rho must be at least 1"));
        }
        for g in &self.gauges {
            g.build()?;
        }
        Ok(())
    }

    /// The configuration as written into reports.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_expands_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16}}"#).unwrap();
        assert_eq!(cfg.grids.fine_factor, 2);
        assert_eq!(cfg.thresholds, Thresholds::default());
        let back: RunConfig = serde_json::from_value(cfg.resolved_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_errors() {
        let e = RunConfig::from_json(r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16}, "sed": 1}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("sed") && e.contains("line"), "{e}");
        let e = RunConfig::from_json(r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16, "kapa": 1}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("kapa"), "{e}");
    }

    #[test]
    fn schema_and_refinement_checked() {
        assert!(RunConfig::from_json(r#"{"schema": "identikit/0", "model": {"type": "circle_rc", "n": 16}}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16}, "grids": {"fine_factor": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn functionals_by_name_or_table() {
        let cfg = RunConfig::from_json(
            r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 4},
                "functionals": ["sin3", {"name": "t", "coarse": [1, 2, 3, 4]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.functionals[0], FunctionalSpec::Name("sin3".into()));
        assert!(matches!(&cfg.functionals[1], FunctionalSpec::Table(t) if t.coarse.len() == 4));
    }
}
