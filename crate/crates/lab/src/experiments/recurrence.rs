use galerkin_core::integrate::{step_count, Stepper, StepperConfig};
use galerkin_core::measures::{sample_nu_indexed, GibbsSpec};
use galerkin_core::{CoeffTable, SpectralField};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, RecurrenceConfig};
use crate::error::{LabError, Result};
use crate::format::FieldRecord;
use crate::stats::quantile;

type Traced = (RecurrenceResult, Vec<(f64, f64)>);

/// Reference draws for the ε percentile live on streams offset by this.
const REFERENCE_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceResult {
    pub index: u64,
    /// Squared radius of the start ball.
    pub epsilon: f64,
    /// Sobolev order `1 - α` of the distance.
    pub norm_order: f64,
    /// Entry times into the `2ε` ball, each after an excursion beyond it.
    pub return_times: Vec<f64>,
    pub first_return: Option<f64>,
    /// The trajectory never left the `ε` ball.
    pub never_exits: bool,
    pub max_distance: f64,
    pub t_max: f64,
    pub initial: FieldRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub r: f64,
    pub epsilon: f64,
    pub epsilon_from_percentile: Option<f64>,
    pub results: Vec<RecurrenceResult>,
    pub with_return: usize,
    pub required: usize,
    /// Quantiles 0.1, 0.5, 0.9 of the first-return times that occurred.
    pub first_return_quantiles: Option<[f64; 3]>,
    pub passed: bool,
}

/// Follows one trajectory for `t_max`, recording returns into the `2ε` ball.
///
/// The detector arms once the squared distance reaches `2ε` and fires (then
/// disarms) on the next step with distance below `2ε`, so the excursion
/// right after leaving the `ε` ball does not count as a return. When
/// `trace_stride` is set, `(t, d)` pairs are returned for plotting.
pub fn recurrence_from(
    phi0: &SpectralField,
    table: &CoeffTable,
    stepper: &StepperConfig,
    epsilon: f64,
    alpha: f64,
    t_max: f64,
    trace_stride: Option<u64>,
) -> Result<(RecurrenceResult, Vec<(f64, f64)>)> {
    let params = *table.params();
    let p = 1.0 - alpha;
    let steps = step_count(t_max, stepper.dt)?;
    let mut st = Stepper::new(table, *stepper)?;
    let mut phi = phi0.clone();
    let mut armed = false;
    let mut left = false;
    let mut returns = Vec::new();
    let mut max_distance: f64 = 0.0;
    let mut trace = vec![(0.0, 0.0)];
    let dt = stepper.dt.abs();
    for n in 1..=steps {
        st.step_in_place(&mut phi)?;
        let d = phi.distance_sq(phi0, &params, p)?;
        if !d.is_finite() {
            return Err(galerkin_core::Error::NonFinite {
                time: n as f64 * dt,
            }
            .into());
        }
        let t = n as f64 * dt;
        max_distance = max_distance.max(d);
        left |= d >= epsilon;
        if d >= 2.0 * epsilon {
            armed = true;
        } else if armed {
            returns.push(t);
            armed = false;
        }
        if let Some(s) = trace_stride {
            if n % s.max(1) == 0 {
                trace.push((t, d));
            }
        }
    }
    let result = RecurrenceResult {
        index: 0,
        epsilon,
        norm_order: p,
        first_return: returns.first().copied(),
        return_times: returns,
        never_exits: !left,
        max_distance,
        t_max,
        initial: FieldRecord::from_field(phi0, &params),
    };
    Ok((result, trace))
}

/// Recurrence on the surface `V_r` for several `ν^r` initial conditions.
/// Returns the report and the distance trace of the first trajectory.
pub fn run_recurrence(cfg: &ExperimentConfig) -> Result<(RecurrenceReport, Vec<(f64, f64)>)> {
    let rc: RecurrenceConfig = cfg
        .recurrence
        .ok_or_else(|| LabError::Config("missing `recurrence` section".into()))?;
    let params = cfg.model_params()?;
    let trunc = cfg.truncation()?;
    let spec = GibbsSpec::new(params, trunc.clone());
    let r = cfg
        .surface
        .and_then(|s| s.r)
        .unwrap_or_else(|| spec.mean_energy());
    let table = CoeffTable::new(trunc, params);
    let stepper = cfg.stepper()?;
    let attempts = cfg.sampler.max_attempts;
    let p = 1.0 - rc.alpha;

    let reference: Vec<SpectralField> = (0..rc.reference_samples as u64)
        .map(|j| sample_nu_indexed(&spec, r, attempts, cfg.seed, REFERENCE_STREAM + j))
        .collect::<Result<_, _>>()?;
    let mut pairwise = Vec::new();
    for i in 0..reference.len() {
        for j in i + 1..reference.len() {
            pairwise.push(reference[i].distance_sq(&reference[j], &params, p)?);
        }
    }
    let from_percentile = quantile(&pairwise, rc.percentile);
    let epsilon = rc.epsilon.unwrap_or(from_percentile);

    let stride = (cfg.record_stride as u64).max(1);
    let runs: Vec<Result<Traced>> = (0..rc.initial_conditions as u64)
        .into_par_iter()
        .map(|i| {
            let phi0 = sample_nu_indexed(&spec, r, attempts, cfg.seed, i)?;
            let trace = (i == 0).then_some(stride);
            let (mut res, tr) =
                recurrence_from(&phi0, &table, &stepper, epsilon, rc.alpha, rc.t_max, trace)
                    .map_err(|e| match e {
                        LabError::Core(source) => LabError::Trajectory {
                            index: i,
                            seed: cfg.seed,
                            source,
                        },
                        other => other,
                    })?;
            res.index = i;
            Ok((res, tr))
        })
        .collect();
    let mut results = Vec::new();
    let mut trace = Vec::new();
    for run in runs {
        let (res, tr) = run?;
        if res.index == 0 {
            trace = tr;
        }
        results.push(res);
    }
    let firsts: Vec<f64> = results.iter().filter_map(|r| r.first_return).collect();
    let with_return = firsts.len();
    let required = (rc.required_fraction * rc.initial_conditions as f64).ceil() as usize;
    let first_return_quantiles = (!firsts.is_empty()).then(|| {
        [
            quantile(&firsts, 0.1),
            quantile(&firsts, 0.5),
            quantile(&firsts, 0.9),
        ]
    });
    let report = RecurrenceReport {
        r,
        epsilon,
        epsilon_from_percentile: rc.epsilon.is_none().then_some(from_percentile),
        results,
        with_return,
        required,
        first_return_quantiles,
        passed: with_return >= required,
    };
    Ok((report, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use galerkin_core::integrate::Scheme;
    use galerkin_core::lattice::build_truncation;
    use galerkin_core::{Complex64, ModeIndex, ModelParams};
    use std::sync::Arc;

    #[test]
    fn steady_start_never_exits() {
        let t = Arc::new(build_truncation(2).unwrap());
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let table = CoeffTable::new(t.clone(), p);
        let f = SpectralField::from_modes(t, &[(ModeIndex::new(1, 0), Complex64::new(0.3, 0.2))])
            .unwrap();
        let c = StepperConfig::new(Scheme::ImplicitMidpoint, 0.1).unwrap();
        let (res, _) = recurrence_from(&f, &table, &c, 1e-6, 3.0, 10.0, None).unwrap();
        assert!(res.never_exits);
        assert!(res.return_times.is_empty());
    }

    #[test]
    fn rotating_start_returns_repeatedly() {
        let t = Arc::new(build_truncation(2).unwrap());
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let table = CoeffTable::new(t.clone(), p);
        let f = SpectralField::from_modes(
            t,
            &[
                (ModeIndex::new(1, 1), Complex64::new(2.0, 0.0)),
                (ModeIndex::new(1, 0), Complex64::new(0.3, 0.0)),
            ],
        )
        .unwrap();
        let c = StepperConfig::new(Scheme::ImplicitMidpoint, 0.01).unwrap();
        let (res, trace) = recurrence_from(&f, &table, &c, 1e-4, 3.0, 200.0, Some(100)).unwrap();
        assert!(!res.never_exits);
        assert!(res.return_times.len() >= 2, "{:?}", res.return_times);
        assert!(res.return_times.windows(2).all(|w| w[0] < w[1]));
        assert!(res.return_times.iter().all(|&t| t > 0.0 && t <= 200.0));
        assert!(trace.len() > 10);
    }
}
