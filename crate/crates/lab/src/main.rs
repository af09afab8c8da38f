use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use galerkin_core::measures::{sample_mu_seeded, sample_nu_batch, GibbsSpec};
use galerkin_core::{CoeffTable, ModeIndex};
use galerkin_lab::config::ExperimentConfig;
use galerkin_lab::error::{LabError, Result};
use galerkin_lab::experiments::{self, Report, BUILD};
use galerkin_lab::format::{self, Cell, FieldRecord, TrajectoryRecord};

#[derive(Parser)]
#[command(
    name = "galerkin",
    version,
    about = "Averaged-Euler Galerkin simulator and invariant-measure lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Mu,
    Nu,
}

#[derive(Subcommand)]
enum Command {
    /// Draw M fields from the Gibbs or surface measure.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "mu")]
        measure: Measure,
    },
    /// Integrate one trajectory and log energy and enstrophy.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Initial field (JSON); defaults to a Gibbs draw from the seed.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Include the field in every trajectory record.
        #[arg(long)]
        snapshots: bool,
    },
    /// Gibbs-measure invariance ensemble.
    Invariance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Surface-measure invariance ensemble.
    Surface {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Return times to the start ball on an energy surface.
    Recurrence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the energy density; optionally check it against sampling.
    Density {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the Monte Carlo histogram check, writing into this directory.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Truncation convergence of the vector field.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interaction coefficients feeding one mode.
    Coeffs {
        #[arg(long)]
        config: PathBuf,
        /// Mode as `k1,k2`.
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Pass(String),
    Fail(String),
}

fn write_report<R: serde::Serialize>(
    out: &Path,
    name: &str,
    passed: bool,
    seconds: f64,
    cfg: &ExperimentConfig,
    result: &R,
) -> Result<()> {
    let report = Report {
        experiment: name,
        passed,
        build: BUILD,
        wall_clock_seconds: seconds,
        config: cfg,
        result,
    };
    format::write_json(&out.join("report.json"), &report)
}

fn verdict(passed: bool, msg: String) -> Outcome {
    if passed {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn parse_mode(s: &str) -> Result<ModeIndex> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || LabError::Config(format!("--k expects `k1,k2`, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let k1 = parts[0].parse().map_err(|_| bad())?;
    let k2 = parts[1].parse().map_err(|_| bad())?;
    Ok(ModeIndex::new(k1, k2))
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Sample {
            config,
            out,
            measure,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let params = cfg.model_params()?;
            let spec = GibbsSpec::new(params, cfg.truncation()?);
            let fields = match measure {
                Measure::Mu => (0..cfg.m as u64)
                    .map(|i| sample_mu_seeded(&spec, cfg.seed, i))
                    .collect(),
                Measure::Nu => {
                    let r = cfg
                        .surface
                        .and_then(|s| s.r)
                        .unwrap_or_else(|| spec.mean_energy());
                    let batch = sample_nu_batch(&spec, r, &cfg.sampler.to_core(), cfg.seed, cfg.m)?;
                    if let Some(d) = &batch.diagnostics {
                        format::write_json(
                            &out.join("mcmc.json"),
                            &serde_json::json!({
                                "ess": d.ess, "min_ess": d.min_ess, "mixed": d.mixed
                            }),
                        )?;
                        if !d.mixed {
                            eprintln!(
                                "warning: chain mixing below threshold (min ESS {:.1})",
                                d.min_ess
                            );
                        }
                    }
                    batch.fields
                }
            };
            format::write_jsonl(
                &out.join("samples.jsonl"),
                fields.iter().map(|f| FieldRecord::from_field(f, &params)),
            )?;
            Ok(Outcome::Pass(format!(
                "sample: wrote {} fields to {}",
                fields.len(),
                out.display()
            )))
        }
        Command::Evolve {
            config,
            out,
            input,
            snapshots,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let params = cfg.model_params()?;
            let initial = input.as_deref().map(format::read_field).transpose()?;
            let ((rep, traj), secs) =
                experiments::timed(|| experiments::run_evolve(&cfg, initial, snapshots))?;
            let snaps = traj.snapshots.as_ref();
            let records = traj
                .times
                .iter()
                .enumerate()
                .map(|(i, &t)| TrajectoryRecord {
                    t,
                    energy: traj.energy_log[i],
                    enstrophy: traj.enstrophy_log[i],
                    field: snaps.map(|s| FieldRecord::from_field(&s[i], &params)),
                });
            format::write_jsonl(&out.join("trajectory.jsonl"), records)?;
            let (e0, s0) = (traj.energy_log[0], traj.enstrophy_log[0]);
            let rows: Vec<Vec<Cell>> = traj
                .times
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let (e, s) = (traj.energy_log[i], traj.enstrophy_log[i]);
                    vec![
                        t.into(),
                        e.into(),
                        s.into(),
                        ((e - e0).abs() / e0).into(),
                        ((s - s0).abs() / s0).into(),
                    ]
                })
                .collect();
            format::write_csv(
                &out.join("conservation.csv"),
                &["t", "E", "S", "dE_rel", "dS_rel"],
                &rows,
            )?;
            write_report(&out, "evolve", rep.passed, secs, &cfg, &rep)?;
            Ok(verdict(
                rep.passed,
                format!(
                    "evolve: {} steps, energy drift {:.3e}, enstrophy drift {:.3e}",
                    rep.steps, rep.energy_drift, rep.enstrophy_drift
                ),
            ))
        }
        Command::Invariance { config, out } => invariance(&config, &out, false),
        Command::Surface { config, out } => invariance(&config, &out, true),
        Command::Recurrence { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ((rep, trace), secs) = experiments::timed(|| experiments::run_recurrence(&cfg))?;
            let mut rows = Vec::new();
            for res in &rep.results {
                for (n, t) in res.return_times.iter().enumerate() {
                    rows.push(vec![Cell::from(res.index as i64), n.into(), (*t).into()]);
                }
            }
            format::write_csv(
                &out.join("returns.csv"),
                &["initial_condition", "return", "t"],
                &rows,
            )?;
            format::write_jsonl(
                &out.join("distance.jsonl"),
                trace
                    .iter()
                    .map(|(t, d)| serde_json::json!({ "t": t, "d": d, "epsilon": rep.epsilon })),
            )?;
            write_report(&out, "recurrence", rep.passed, secs, &cfg, &rep)?;
            Ok(verdict(
                rep.passed,
                format!(
                    "recurrence: {}/{} initial conditions returned (required {}), epsilon {:.3e}",
                    rep.with_return,
                    rep.results.len(),
                    rep.required,
                    rep.epsilon
                ),
            ))
        }
        Command::Density {
            config,
            r_max,
            points,
            out,
            check,
            bins,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            if r_max.is_nan() || r_max <= 0.0 || points < 2 {
                return Err(LabError::Config(
                    "--r-max must be positive and --points at least 2".into(),
                ));
            }
            let spec = GibbsSpec::new(cfg.model_params()?, cfg.truncation()?);
            let rho = spec.energy_density();
            let rows: Vec<Vec<Cell>> = rho
                .table(r_max, points)
                .into_iter()
                .map(|(r, p)| vec![r.into(), p.into()])
                .collect();
            match &out {
                Some(path) => format::write_csv(path, &["r", "rho"], &rows)?,
                None => format::write_csv_to(std::io::stdout().lock(), &["r", "rho"], &rows)?,
            }
            let Some(dir) = check else {
                return Ok(Outcome::Pass(format!(
                    "density: {points} points on [0, {r_max}]"
                )));
            };
            let (rep, secs) = experiments::timed(|| experiments::run_density(&cfg, bins))?;
            let rows: Vec<Vec<Cell>> = rep
                .histogram
                .iter()
                .map(|h| {
                    vec![
                        h.lo.into(),
                        h.hi.into(),
                        (h.count as i64).into(),
                        h.empirical.into(),
                        h.theory.into(),
                        h.se.into(),
                        h.z.into(),
                    ]
                })
                .collect();
            format::write_csv(
                &dir.join("histogram.csv"),
                &["lo", "hi", "count", "empirical", "theory", "se", "z"],
                &rows,
            )?;
            write_report(&dir, "density", rep.passed, secs, &cfg, &rep)?;
            Ok(verdict(
                rep.passed,
                format!(
                    "density: histogram max |z| {:.2} over {} samples",
                    rep.max_abs_z, rep.samples
                ),
            ))
        }
        Command::Convergence { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (rep, secs) = experiments::timed(|| experiments::run_convergence(&cfg))?;
            let rows: Vec<Vec<Cell>> = rep
                .rows
                .iter()
                .map(|r| vec![r.n.into(), r.estimate.mean.into(), r.estimate.se.into()])
                .collect();
            format::write_csv(&out.join("convergence.csv"), &["N", "mean", "se"], &rows)?;
            write_report(&out, "convergence", rep.passed, secs, &cfg, &rep)?;
            Ok(verdict(
                rep.passed,
                format!(
                    "convergence: strictly decreasing = {}",
                    rep.strictly_decreasing
                ),
            ))
        }
        Command::Coeffs { config, k, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let k = parse_mode(&k)?;
            let trunc = cfg.truncation()?;
            let ki = trunc.index_of(k).ok_or_else(|| {
                LabError::Config(format!(
                    "{k} is not a positive retained mode of N = {}",
                    cfg.n
                ))
            })?;
            let table = CoeffTable::new(trunc, cfg.model_params()?);
            let rows: Vec<Vec<Cell>> = table
                .row(ki)
                .iter()
                .map(|t| {
                    let r = k.sub(t.h);
                    vec![
                        t.h.k1.into(),
                        t.h.k2.into(),
                        r.k1.into(),
                        r.k2.into(),
                        t.coeff.into(),
                    ]
                })
                .collect();
            let header = ["h1", "h2", "k_minus_h1", "k_minus_h2", "alpha"];
            match &out {
                Some(path) => format::write_csv(path, &header, &rows)?,
                None => format::write_csv_to(std::io::stdout().lock(), &header, &rows)?,
            }
            Ok(Outcome::Pass(format!(
                "coeffs: {} admissible h for k = {k}",
                rows.len()
            )))
        }
    }
}

fn invariance(config: &Path, out: &Path, surface: bool) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config)?;
    let (rep, secs) = experiments::timed(|| {
        if surface {
            experiments::run_surface_invariance(&cfg)
        } else {
            experiments::run_invariance(&cfg)
        }
    })?;
    let rows: Vec<Vec<Cell>> = rep
        .modes
        .iter()
        .map(|m| {
            vec![
                m.k1.into(),
                m.k2.into(),
                m.theory.into(),
                m.second_moment_t0.mean.into(),
                m.second_moment_t0.se.into(),
                m.second_moment_t.mean.into(),
                m.second_moment_t.se.into(),
                m.z_drift.into(),
                m.z_theory.into(),
                m.ks_statistic.unwrap_or(f64::NAN).into(),
                m.ks_pvalue.unwrap_or(f64::NAN).into(),
                m.re_t0.mean.into(),
                m.re_t.mean.into(),
                m.z_re.into(),
            ]
        })
        .collect();
    let header = [
        "k1",
        "k2",
        "theory",
        "mean_t0",
        "se_t0",
        "mean_t",
        "se_t",
        "z_drift",
        "z_theory",
        "ks_d",
        "ks_p",
        "re_mean_t0",
        "re_mean_t",
        "z_re",
    ];
    format::write_csv(&out.join("modes.csv"), &header, &rows)?;
    if surface {
        let rows: Vec<Vec<Cell>> = rep
            .off_diagonal
            .iter()
            .map(|p| {
                vec![
                    p.k[0].into(),
                    p.k[1].into(),
                    p.k_prime[0].into(),
                    p.k_prime[1].into(),
                    p.re_t.mean.into(),
                    p.im_t.mean.into(),
                    p.z_re_t.into(),
                    p.z_im_t.into(),
                ]
            })
            .collect();
        format::write_csv(
            &out.join("off_diagonal.csv"),
            &[
                "k1",
                "k2",
                "kp1",
                "kp2",
                "re_mean_t",
                "im_mean_t",
                "z_re_t",
                "z_im_t",
            ],
            &rows,
        )?;
    }
    let name = if surface { "surface" } else { "invariance" };
    write_report(out, name, rep.passed, secs, &cfg, &rep)?;
    Ok(verdict(
        rep.passed,
        format!(
            "{name}: max |z| drift {:.2}, M = {}, N = {}, T = {}",
            rep.max_abs_z_drift, rep.m, rep.n, rep.t
        ),
    ))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let to_stderr = matches!(
        &cli.command,
        Command::Density { out: None, .. } | Command::Coeffs { out: None, .. }
    );
    let line = |msg: &str| {
        if to_stderr {
            eprintln!("{msg}");
        } else {
            let _ = writeln!(std::io::stdout(), "{msg}");
        }
    };
    match run(cli.command) {
        Ok(Outcome::Pass(msg)) => {
            line(&format!("PASS {msg}"));
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fail(msg)) => {
            line(&format!("FAIL {msg}"));
            ExitCode::from(2)
        }
        Err(e @ LabError::Conservation { .. }) => {
            eprintln!("FAIL {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
