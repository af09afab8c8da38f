use galerkin_core::integrate::{evolve, Scheme, StepperConfig, Trajectory};
use galerkin_core::measures::{sample_mu_seeded, GibbsSpec};
use galerkin_core::{CoeffTable, SpectralField};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub scheme: &'static str,
    pub dt: f64,
    pub steps: u64,
    pub energy_initial: f64,
    pub enstrophy_initial: f64,
    pub energy_drift: f64,
    pub enstrophy_drift: f64,
    pub passed: bool,
}

/// Integrates one trajectory from `initial` (or the `μ_γ` draw on stream
/// `(seed, 0)`) and checks energy and enstrophy drift against the threshold.
pub fn run_evolve(
    cfg: &ExperimentConfig,
    initial: Option<SpectralField>,
    keep_snapshots: bool,
) -> Result<(ConservationReport, Trajectory)> {
    let params = cfg.model_params()?;
    let trunc = cfg.truncation()?;
    let field = match initial {
        Some(f) => {
            if **f.trunc() != *trunc {
                return Err(LabError::Config(
                    "initial field does not match the configured truncation".into(),
                ));
            }
            f.embed(&trunc)
        }
        None => sample_mu_seeded(&GibbsSpec::new(params, trunc.clone()), cfg.seed, 0),
    };
    let table = CoeffTable::new(trunc, params);
    let stepper = cfg.stepper()?;
    let traj = evolve(
        &field,
        &table,
        &stepper,
        cfg.t,
        cfg.record_stride,
        keep_snapshots,
    )
    .map_err(|source| LabError::Trajectory {
        index: 0,
        seed: cfg.seed,
        source,
    })?;
    let (ed, sd) = (traj.energy_drift(), traj.enstrophy_drift());
    let report = ConservationReport {
        scheme: match stepper.scheme {
            Scheme::Rk4 => "rk4",
            Scheme::ImplicitMidpoint => "midpoint",
        },
        dt: cfg.dt,
        steps: galerkin_core::integrate::step_count(cfg.t, cfg.dt)?,
        energy_initial: traj.energy_log[0],
        enstrophy_initial: traj.enstrophy_log[0],
        energy_drift: ed,
        enstrophy_drift: sd,
        passed: ed <= cfg.thresholds.conservation && sd <= cfg.thresholds.conservation,
    };
    Ok((report, traj))
}

/// Drift of an RK4 run at `dt` and at `dt / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalvingReport {
    pub dt: f64,
    pub duration: f64,
    pub energy_drift: [f64; 2],
    pub enstrophy_drift: [f64; 2],
    pub energy_ratio: f64,
    pub enstrophy_ratio: f64,
}

/// RK4 conserves quadratic invariants only to `O(dt⁴)`; halving the step
/// should shrink the drift about sixteenfold.
pub fn rk4_halving(
    field: &SpectralField,
    table: &CoeffTable,
    dt: f64,
    duration: f64,
) -> Result<HalvingReport> {
    let mut e = [0.0; 2];
    let mut s = [0.0; 2];
    for (i, h) in [dt, 0.5 * dt].into_iter().enumerate() {
        let c = StepperConfig::new(Scheme::Rk4, h)?;
        let tr = evolve(field, table, &c, duration, 1, false)?;
        e[i] = tr.energy_drift();
        s[i] = tr.enstrophy_drift();
    }
    Ok(HalvingReport {
        dt,
        duration,
        energy_drift: e,
        enstrophy_drift: s,
        energy_ratio: e[0] / e[1],
        enstrophy_ratio: s[0] / s[1],
    })
}
