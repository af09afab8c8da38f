//! Experiment runners. Every ensemble is parallel across trajectories only;
//! results are gathered in index order and reduced sequentially, so a run is
//! bitwise reproducible from its config.

mod conservation;
mod convergence;
mod density;
mod invariance;
mod recurrence;

use std::time::Instant;

use galerkin_core::integrate::{evolve, StepperConfig};
use galerkin_core::{CoeffTable, SpectralField};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Thresholds};
use crate::error::{LabError, Result};

pub use conservation::{rk4_halving, run_evolve, ConservationReport, HalvingReport};
pub use convergence::{run_convergence, ConvergenceReport, ConvergenceRow};
pub use density::{run_density, DensityReport, HistogramBin};
pub use invariance::{
    run_invariance, run_surface_invariance, InvarianceReport, ModeStats, PairStats,
};
pub use recurrence::{recurrence_from, run_recurrence, RecurrenceReport, RecurrenceResult};

/// Build identifier embedded at compile time.
pub const BUILD: &str = env!("GALERKIN_GIT_DESCRIBE");

/// Envelope written to `report.json`.
#[derive(Debug, Serialize)]
pub struct Report<'a, R: Serialize> {
    pub experiment: &'a str,
    pub passed: bool,
    pub build: &'a str,
    pub wall_clock_seconds: f64,
    pub config: &'a ExperimentConfig,
    pub result: &'a R,
}

/// Times `f` and wraps its result in a [`Report`]-ready tuple.
pub fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// State of one ensemble member at `t = 0` and `t = T`.
#[derive(Debug, Clone)]
pub(crate) struct Member {
    pub initial: SpectralField,
    pub last: SpectralField,
    pub energy_drift: f64,
    pub enstrophy_drift: f64,
    /// Largest `|E(t) - level| / level` over the records.
    pub level_deviation: f64,
}

/// Integrates `count` members in parallel; `init(i)` draws member `i`.
/// Any integration failure or conservation breach aborts the run and names
/// the member so it can be replayed from `(seed, i)`.
pub(crate) fn run_ensemble<F>(
    cfg: &ExperimentConfig,
    table: &CoeffTable,
    stepper: &StepperConfig,
    level: Option<f64>,
    init: F,
) -> Result<Vec<Member>>
where
    F: Fn(u64) -> Result<SpectralField> + Sync,
{
    let th: Thresholds = cfg.thresholds;
    let members: Vec<Result<Member>> = (0..cfg.m as u64)
        .into_par_iter()
        .map(|i| {
            let initial = init(i)?;
            let traj = evolve(&initial, table, stepper, cfg.t, cfg.record_stride, false).map_err(
                |source| LabError::Trajectory {
                    index: i,
                    seed: cfg.seed,
                    source,
                },
            )?;
            let (ed, sd) = (traj.energy_drift(), traj.enstrophy_drift());
            for (quantity, drift) in [("energy", ed), ("enstrophy", sd)] {
                if drift.is_nan() || drift > th.conservation {
                    return Err(LabError::Conservation {
                        index: i,
                        seed: cfg.seed,
                        quantity,
                        drift,
                        threshold: th.conservation,
                    });
                }
            }
            let level_deviation = match level {
                Some(r) => traj
                    .energy_log
                    .iter()
                    .map(|e| (e - r).abs() / r)
                    .fold(0.0, f64::max),
                None => 0.0,
            };
            Ok(Member {
                initial,
                last: traj.final_field,
                energy_drift: ed,
                enstrophy_drift: sd,
                level_deviation,
            })
        })
        .collect();
    members.into_iter().collect()
}
