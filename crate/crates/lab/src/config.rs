//! Experiment configuration: one JSON document per run.
//!
//! `params`, `N`, `M`, `T`, `dt`, `scheme`, `record_stride` and `seed` are
//! mandatory. Statistical thresholds and sampler settings have documented
//! defaults and are echoed back in every report.

use std::path::Path;
use std::sync::Arc;

use galerkin_core::integrate::{Scheme, StepperConfig};
use galerkin_core::lattice::build_truncation;
use galerkin_core::measures::{SimplexMethod, SimplexSamplerConfig};
use galerkin_core::{ModelParams, Truncation};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: f64,
    pub s: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Midpoint,
    Rk4,
}

/// Acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Largest admissible |z| for moment drift and off-diagonal moments.
    pub z_max: f64,
    /// Family-wise KS level, split over modes (Bonferroni).
    pub ks_alpha: f64,
    /// Band, in standard errors, for comparisons of means against theory
    /// or between times (test functions, histograms, surface moments).
    pub se_band: f64,
    /// Largest relative energy deviation from the level `r`.
    pub confinement: f64,
    /// Largest relative drift of energy or enstrophy along any trajectory.
    pub conservation: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            z_max: 4.0,
            ks_alpha: 0.01,
            se_band: 3.0,
            confinement: 1e-9,
            conservation: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    Rejection,
    Gibbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub burn_in: usize,
    pub thinning: usize,
    pub max_attempts: u64,
    pub min_ess_fraction: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let d = SimplexSamplerConfig::default();
        Self {
            method: SamplerMethod::Rejection,
            burn_in: d.burn_in,
            thinning: d.thinning,
            max_attempts: d.max_attempts,
            min_ess_fraction: d.min_ess_fraction,
        }
    }
}

impl SamplerConfig {
    pub fn to_core(&self) -> SimplexSamplerConfig {
        SimplexSamplerConfig {
            method: match self.method {
                SamplerMethod::Rejection => SimplexMethod::Rejection,
                SamplerMethod::Gibbs => SimplexMethod::GibbsMcmc,
            },
            burn_in: self.burn_in,
            thinning: self.thinning,
            max_attempts: self.max_attempts,
            min_ess_fraction: self.min_ess_fraction,
        }
    }
}

/// Energy level for surface runs; `None` means the mean energy under `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    #[serde(default)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceConfig {
    /// Squared-radius of the start ball; chosen from `percentile` of
    /// pairwise squared distances among `reference_samples` draws if absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub alpha: f64,
    pub t_max: f64,
    #[serde(default = "default_initial_conditions")]
    pub initial_conditions: usize,
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    #[serde(default = "default_percentile")]
    pub percentile: f64,
    /// Fraction of initial conditions that must return for a pass.
    #[serde(default = "default_required_fraction")]
    pub required_fraction: f64,
}

fn default_initial_conditions() -> usize {
    10
}
fn default_reference_samples() -> usize {
    200
}
fn default_percentile() -> f64 {
    0.1
}
fn default_required_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureName {
    Mu,
    Nu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub n_small: Vec<i64>,
    pub n_large: i64,
    pub alpha: f64,
    #[serde(default = "default_measure")]
    pub measure: MeasureName,
}

fn default_measure() -> MeasureName {
    MeasureName::Mu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsConfig,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    pub scheme: SchemeName,
    pub record_stride: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<RecurrenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        self.model_params()?;
        if self.n < 1 {
            return bad(format!("N must be at least 1, got {}", self.n));
        }
        if self.m == 0 {
            return bad("M must be positive".into());
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return bad(format!("T must be finite and non-negative, got {}", self.t));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        let th = &self.thresholds;
        if !(th.z_max > 0.0
            && th.ks_alpha > 0.0
            && th.ks_alpha < 1.0
            && th.confinement > 0.0
            && th.conservation > 0.0)
        {
            return bad("thresholds must be positive (ks_alpha in (0, 1))".into());
        }
        if let Some(r) = self.surface.and_then(|s| s.r) {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("surface.r must be positive, got {r}"));
            }
        }
        if let Some(rc) = &self.recurrence {
            if rc.alpha <= 2.0 {
                return bad(format!("recurrence.alpha must exceed 2, got {}", rc.alpha));
            }
            if rc.t_max.is_nan()
                || rc.t_max <= 0.0
                || rc.initial_conditions == 0
                || rc.reference_samples < 2
            {
                return bad(
                    "recurrence needs t_max > 0, initial_conditions >= 1, reference_samples >= 2"
                        .into(),
                );
            }
            if !(rc.percentile > 0.0 && rc.percentile < 1.0) {
                return bad("recurrence.percentile must lie in (0, 1)".into());
            }
            if let Some(e) = rc.epsilon {
                if e.is_nan() || e <= 0.0 {
                    return bad("recurrence.epsilon must be positive".into());
                }
            }
        }
        if let Some(cv) = &self.convergence {
            if cv.n_small.is_empty() || cv.n_small.iter().any(|&n| n < 1 || n > cv.n_large) {
                return bad(
                    "convergence.n_small must be non-empty with 1 <= N_small <= n_large".into(),
                );
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.params.a,
            self.params.s,
            self.params.gamma,
        )?)
    }

    pub fn truncation(&self) -> Result<Arc<Truncation>> {
        Ok(Arc::new(build_truncation(self.n)?))
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let scheme = match self.scheme {
            SchemeName::Midpoint => Scheme::ImplicitMidpoint,
            SchemeName::Rk4 => Scheme::Rk4,
        };
        Ok(StepperConfig::new(scheme, self.dt)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"params":{"a":1,"s":1,"gamma":1},"N":4,"M":10,"T":1,"dt":0.01,
        "scheme":"midpoint","record_stride":10,"seed":7}"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.n, 4);
        assert_eq!(c.thresholds.z_max, 4.0);
        assert_eq!(c.sampler.method, SamplerMethod::Rejection);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = BASE.replace(r#","seed":7"#, "");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = BASE.replace(r#""seed":7"#, r#""seed":7,"sed":1"#);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(ExperimentConfig::from_json(&BASE.replace(r#""dt":0.01"#, r#""dt":-1"#)).is_err());
        assert!(ExperimentConfig::from_json(&BASE.replace(r#""N":4"#, r#""N":0"#)).is_err());
    }
}
