//! Time integration of the truncated flow `dω/dt = B^n(ω)`.
//!
//! Implicit midpoint is the reference scheme: it preserves every quadratic
//! invariant, so energy and enstrophy are conserved up to the fixed-point
//! tolerance. Classical RK4 is kept as a non-conservative baseline.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::eval_into;
use crate::error::{Error, Result};
use crate::lattice::{energy, enstrophy, CoeffTable, SpectralField};
use crate::math;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Implicit midpoint rule solved by fixed-point iteration.
    ImplicitMidpoint,
}

/// Stepper settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Scheme.
    pub scheme: Scheme,
    /// Step; negative values integrate backwards in time.
    pub dt: f64,
    /// Fixed-point stopping tolerance, relative to the sup norm of the stage.
    pub tolerance: f64,
    /// Fixed-point iteration cap.
    pub max_iterations: usize,
}

impl StepperConfig {
    /// Config with default solver settings (`1e-13`, 50 iterations).
    pub fn new(scheme: Scheme, dt: f64) -> Result<Self> {
        let c = Self {
            scheme,
            dt,
            tolerance: 1e-13,
            max_iterations: 50,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks `dt != 0`, finite, and a positive tolerance.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "dt must be finite and nonzero, got {}",
                self.dt
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "tolerance and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Same settings with the step reversed.
    pub fn reversed(&self) -> Self {
        Self {
            dt: -self.dt,
            ..*self
        }
    }
}

/// Stateful stepper with preallocated workspace.
#[derive(Debug)]
pub struct Stepper<'a> {
    table: &'a CoeffTable,
    config: StepperConfig,
    stage: SpectralField,
    k: [Vec<Complex64>; 4],
}

fn sup_norm(z: &[Complex64]) -> f64 {
    z.iter()
        .fold(0.0f64, |m, c| m.max(c.re.abs()).max(c.im.abs()))
}

impl<'a> Stepper<'a> {
    /// Prepares a stepper for a table and config.
    pub fn new(table: &'a CoeffTable, config: StepperConfig) -> Result<Self> {
        config.validate()?;
        let zero = SpectralField::zeros(table.trunc().clone());
        let d = table.trunc().len();
        let z = Complex64::new(0.0, 0.0);
        Ok(Self {
            table,
            config,
            stage: zero,
            k: [
                alloc::vec![z; d],
                alloc::vec![z; d],
                alloc::vec![z; d],
                alloc::vec![z; d],
            ],
        })
    }

    /// Stepper configuration.
    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    /// Advances `field` in place by one step.
    pub fn step_in_place(&mut self, field: &mut SpectralField) -> Result<()> {
        if !field.same_trunc(&self.stage) {
            return Err(Error::TruncationMismatch);
        }
        match self.config.scheme {
            Scheme::Rk4 => self.rk4(field),
            Scheme::ImplicitMidpoint => self.midpoint(field),
        }
    }

    fn rk4(&mut self, field: &mut SpectralField) -> Result<()> {
        let dt = self.config.dt;
        let [k1, k2, k3, k4] = &mut self.k;
        eval_into(field, self.table, k1);
        stage_from(&mut self.stage, field, 0.5 * dt, k1);
        eval_into(&self.stage, self.table, k2);
        stage_from(&mut self.stage, field, 0.5 * dt, k2);
        eval_into(&self.stage, self.table, k3);
        stage_from(&mut self.stage, field, dt, k3);
        eval_into(&self.stage, self.table, k4);
        let w = dt / 6.0;
        for (i, z) in field.coeffs_mut().iter_mut().enumerate() {
            *z += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        Ok(())
    }

    fn midpoint(&mut self, field: &mut SpectralField) -> Result<()> {
        let half = 0.5 * self.config.dt;
        let [b, _, _, _] = &mut self.k;
        // explicit Euler predictor for the midpoint stage
        eval_into(field, self.table, b);
        stage_from(&mut self.stage, field, half, b);
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for _ in 0..self.config.max_iterations {
            eval_into(&self.stage, self.table, b);
            let mut delta = 0.0f64;
            for ((s, x), v) in self
                .stage
                .coeffs_mut()
                .iter_mut()
                .zip(field.coeffs())
                .zip(b.iter())
            {
                let next = x + v * half;
                let d = next - *s;
                delta = delta.max(d.re.abs()).max(d.im.abs());
                *s = next;
            }
            residual = delta;
            let scale = sup_norm(self.stage.coeffs());
            if !(scale.is_finite() && self.stage.is_finite()) {
                residual = f64::INFINITY;
                break;
            }
            if delta <= self.config.tolerance * scale || delta == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: self.config.max_iterations,
                residual,
            });
        }
        for (x, s) in field.coeffs_mut().iter_mut().zip(self.stage.coeffs()) {
            *x = s * 2.0 - *x;
        }
        Ok(())
    }
}

fn stage_from(stage: &mut SpectralField, base: &SpectralField, h: f64, slope: &[Complex64]) {
    for ((s, x), v) in stage.coeffs_mut().iter_mut().zip(base.coeffs()).zip(slope) {
        *s = x + v * h;
    }
}

/// One step of the configured scheme.
pub fn step(
    field: &SpectralField,
    table: &CoeffTable,
    config: &StepperConfig,
) -> Result<SpectralField> {
    let mut out = field.clone();
    Stepper::new(table, *config)?.step_in_place(&mut out)?;
    Ok(out)
}

/// Recorded integration history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Elapsed model time of each record (strictly increasing); the signed
    /// model time is `times[i] * dt.signum()`.
    pub times: Vec<f64>,
    /// Step used (sign gives the direction).
    pub dt: f64,
    /// Energy at each record.
    pub energy_log: Vec<f64>,
    /// Enstrophy at each record.
    pub enstrophy_log: Vec<f64>,
    /// Fields at each record when requested.
    pub snapshots: Option<Vec<SpectralField>>,
    /// Final state.
    pub final_field: SpectralField,
}

impl Trajectory {
    /// Largest `|E(t) - E(0)| / E(0)` over the records (0 for a zero field).
    pub fn energy_drift(&self) -> f64 {
        relative_drift(&self.energy_log)
    }

    /// Largest `|S(t) - S(0)| / S(0)` over the records.
    pub fn enstrophy_drift(&self) -> f64 {
        relative_drift(&self.enstrophy_log)
    }
}

fn relative_drift(log: &[f64]) -> f64 {
    let Some(&first) = log.first() else {
        return 0.0;
    };
    let max = log.iter().map(|x| (x - first).abs()).fold(0.0, f64::max);
    if first != 0.0 {
        max / first.abs()
    } else {
        max
    }
}

/// Number of steps covering `duration` with step `|dt|`.
pub fn step_count(duration: f64, dt: f64) -> Result<u64> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "duration must be finite and >= 0, got {duration}"
        )));
    }
    let ratio = duration / dt.abs();
    let steps = libm::round(ratio);
    if (steps - ratio).abs() > 1e-6 || steps > 1e12 {
        return Err(Error::InvalidArgument(alloc::format!(
            "duration {duration} is not a whole number of steps of {}",
            dt.abs()
        )));
    }
    Ok(steps as u64)
}

/// Integrates for elapsed time `duration` (direction from the sign of `dt`),
/// recording every `record_stride` steps and at the end.
pub fn evolve(
    field: &SpectralField,
    table: &CoeffTable,
    config: &StepperConfig,
    duration: f64,
    record_stride: usize,
    keep_snapshots: bool,
) -> Result<Trajectory> {
    let steps = step_count(duration, config.dt)?;
    let stride = record_stride.max(1) as u64;
    let params = table.params();
    let mut stepper = Stepper::new(table, *config)?;
    let mut state = field.clone();
    let mut times = alloc::vec![0.0];
    let mut energy_log = alloc::vec![energy(&state, params)];
    let mut enstrophy_log = alloc::vec![enstrophy(&state, params)];
    let mut snapshots = keep_snapshots.then(|| alloc::vec![state.clone()]);
    let dt = config.dt.abs();
    for n in 1..=steps {
        stepper.step_in_place(&mut state)?;
        if !state.is_finite() {
            return Err(Error::NonFinite {
                time: n as f64 * config.dt,
            });
        }
        if n % stride == 0 || n == steps {
            times.push(n as f64 * dt);
            energy_log.push(energy(&state, params));
            enstrophy_log.push(enstrophy(&state, params));
            if let Some(s) = snapshots.as_mut() {
                s.push(state.clone());
            }
        }
    }
    Ok(Trajectory {
        times,
        dt: config.dt,
        energy_log,
        enstrophy_log,
        snapshots,
        final_field: state,
    })
}

/// Runs forward for `duration`, then backward for the same time, and
/// returns the `H^{1-α,s}` distance from the starting field.
pub fn reversibility_defect(
    field: &SpectralField,
    table: &CoeffTable,
    config: &StepperConfig,
    duration: f64,
    alpha: f64,
) -> Result<f64> {
    let forward = evolve(field, table, config, duration, usize::MAX, false)?;
    let back = evolve(
        &forward.final_field,
        table,
        &config.reversed(),
        duration,
        usize::MAX,
        false,
    )?;
    let d2 = back
        .final_field
        .distance_sq(field, table.params(), 1.0 - alpha)?;
    Ok(math::sqrt(d2))
}
