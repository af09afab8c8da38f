use std::sync::Arc;

use galerkin_core::fast::FastEvaluator;
use galerkin_core::lattice::build_truncation;
use galerkin_core::measures::{sample_mu_seeded, sample_nu_indexed, GibbsSpec};
use galerkin_core::{SpectralField, Truncation};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConvergenceConfig, ExperimentConfig, MeasureName};
use crate::error::{LabError, Result};
use crate::stats::{mean_se, MeanSe};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: i64,
    /// Monte Carlo estimate of `E‖B^N(φ^N) - B^{N_large}(φ)‖²_{1-α,s}`.
    pub estimate: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub measure: &'static str,
    pub n_large: i64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub r: Option<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// Estimates strictly decrease along increasing `N`.
    pub strictly_decreasing: bool,
    pub passed: bool,
}

/// Distance in `H^{1-α,s}` between the truncated fields `B^N` and
/// `B^{N_large}`, with `φ` drawn at `N_large` and projected onto `N`.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let cv: &ConvergenceConfig = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| LabError::Config("missing `convergence` section".into()))?;
    let params = cfg.model_params()?;
    let large: Arc<Truncation> = Arc::new(build_truncation(cv.n_large)?);
    let spec = GibbsSpec::new(params, large.clone());
    let r = match cv.measure {
        MeasureName::Mu => None,
        MeasureName::Nu => Some(
            cfg.surface
                .and_then(|s| s.r)
                .unwrap_or_else(|| spec.mean_energy()),
        ),
    };
    let mut ns = cv.n_small.clone();
    ns.sort_unstable();
    ns.dedup();
    let eval_large = FastEvaluator::new(large.clone(), params);
    let small: Vec<(Arc<Truncation>, FastEvaluator)> = ns
        .iter()
        .map(|&n| {
            let t = Arc::new(build_truncation(n)?);
            Ok((t.clone(), FastEvaluator::new(t, params)))
        })
        .collect::<Result<_>>()?;
    let p = 1.0 - cv.alpha;
    let attempts = cfg.sampler.max_attempts;
    let per_sample: Vec<Result<Vec<f64>>> = (0..cfg.m as u64)
        .into_par_iter()
        .map(|i| {
            let phi: SpectralField = match r {
                None => sample_mu_seeded(&spec, cfg.seed, i),
                Some(level) => sample_nu_indexed(&spec, level, attempts, cfg.seed, i)?,
            };
            let b_large = eval_large.eval(&phi)?;
            small
                .iter()
                .map(|(t, ev)| {
                    let b = ev.eval(&phi.embed(t))?.embed(&large);
                    Ok(b.distance_sq(&b_large, &params, p)?)
                })
                .collect()
        })
        .collect();
    let per_sample: Vec<Vec<f64>> = per_sample.into_iter().collect::<Result<_>>()?;
    let rows: Vec<ConvergenceRow> = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let xs: Vec<f64> = per_sample.iter().map(|v| v[j]).collect();
            ConvergenceRow {
                n,
                estimate: mean_se(&xs),
            }
        })
        .collect();
    let strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].estimate.mean < w[0].estimate.mean);
    Ok(ConvergenceReport {
        measure: if r.is_some() { "nu" } else { "mu" },
        n_large: cv.n_large,
        alpha: cv.alpha,
        m: cfg.m,
        r,
        rows,
        strictly_decreasing,
        passed: strictly_decreasing,
    })
}
