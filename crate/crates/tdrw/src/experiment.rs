//! Subcommand pipelines: environment, simulation, kernel and analyses.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tdrw_core::analysis::{
    ballistic_speed_1d, csrw_speed_sign, decay_exponent, gaussian_bound_report, geometric_tail_fit_pooled, halfspace_csrw_speed, halfspace_speed,
    poincare_constant, recurrence_diagnostic, volume_doubling_constant, FitReport, GaussianOptions, SpeedReport, Verdict,
};
use tdrw_core::kernel::{duality_max_vsrw, kernel, ondiagonal_series, KernelSnapshot, PropagationConfig};
use tdrw_core::rng::StreamSeed;
use tdrw_core::walkers::{
    excursions, mean_and_se, off_floor_drift, return_counts, simulate_csrw, simulate_discrete, simulate_vsrw, summarize, BatchSummary, Dynamics,
    Trajectory, TrajectorySummary,
};
use tdrw_core::{Environment, Geometry};

use crate::config::{Analysis, EnvironmentConfig, EnvironmentDescriptor, ExperimentConfig};
use crate::error::{exit, CliError, Result};
use crate::io::{create_dir, write_json, write_snapshot_csv, write_trajectory_csv, SnapshotSummary};
use crate::runner::Runner;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Env,
    Simulate,
    Kernel,
    Analyze,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: Command,
    /// Resolved configuration, including the effective seed.
    pub config: ExperimentConfig,
    pub seeds: Value,
    pub threads: usize,
    pub artifacts: Vec<PathBuf>,
}

/// Outcome of a run: artifacts written and the exit code.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub exit_code: i32,
}

/// Reductions of one walk kept after the trajectory is dropped.
#[derive(Clone, Debug)]
pub struct WalkRecord {
    pub summary: TrajectorySummary,
    pub returns: Vec<u64>,
    pub durations: Vec<u64>,
    pub off_floor: Option<(f64, f64)>,
}

/// What to extract from each walk.
#[derive(Clone, Debug, Default)]
pub struct WalkRequest {
    pub return_horizons: Vec<f64>,
    pub excursions: bool,
    pub off_floor: bool,
    pub csv_dir: Option<PathBuf>,
}

pub fn simulate_one(env: &Environment, cfg: &ExperimentConfig, seed: StreamSeed) -> Result<Trajectory> {
    let x0 = cfg.start_vertex();
    Ok(match cfg.dynamics {
        Dynamics::Discrete => simulate_discrete(env, x0, 0, cfg.steps.unwrap_or(0), seed)?,
        Dynamics::Csrw => simulate_csrw(env, x0, 0.0, cfg.duration()?, seed)?,
        Dynamics::Vsrw => simulate_vsrw(env, x0, 0.0, cfg.duration()?, seed)?,
    })
}

/// Runs `environments x batch` walks; walk `i` of draw `e` uses walk stream
/// `e * batch + i`. Records are returned in that order.
pub fn simulate_batch(cfg: &ExperimentConfig, envs: &[Environment], runner: &Runner, req: &WalkRequest) -> Result<Vec<WalkRecord>> {
    let batch = cfg.batch;
    runner.map(envs.len() as u64 * batch, |k| {
        let env = &envs[(k / batch) as usize];
        let traj = simulate_one(env, cfg, StreamSeed::walk(cfg.seed, k))?;
        if let Some(dir) = &req.csv_dir {
            write_trajectory_csv(&dir.join(format!("trajectory_{:05}_{:06}.csv", k / batch, k % batch)), env, &traj)?;
        }
        let durations = if req.excursions {
            excursions(&traj)?.durations()
        } else {
            Vec::new()
        };
        Ok(WalkRecord {
            summary: TrajectorySummary::of(&traj),
            returns: return_counts(&traj, &req.return_horizons),
            durations,
            off_floor: if req.off_floor { Some(off_floor_drift(&traj)?) } else { None },
        })
    })
}

/// Formula speed for the preset, when one applies.
fn formula_speed(cfg: &ExperimentConfig, desc: &EnvironmentDescriptor) -> Result<Option<SpeedReport>> {
    let p = &desc.params;
    let f = |k: &str| p[k].as_f64().unwrap_or(f64::NAN);
    Ok(match (&cfg.environment, cfg.dynamics) {
        (EnvironmentConfig::Zigzag1d { eps, gamma, gamma_prime }, _) => Some(ballistic_speed_1d(*eps, *gamma, *gamma_prime)?),
        (EnvironmentConfig::Poisson1d { eps, c, .. }, Dynamics::Csrw) if f("intensity") == c - 1.0 => Some(csrw_speed_sign(*eps, *c)?),
        (EnvironmentConfig::HalfspaceDt { eps, .. }, _) => Some(halfspace_speed(*eps, f("b"), f("b_prime"))?),
        (EnvironmentConfig::HalfspaceCsrw { eps, c, .. }, Dynamics::Csrw) if f("intensity") == c - 1.0 => Some(halfspace_csrw_speed(*eps, *c)?),
        (EnvironmentConfig::Constant { .. }, _) => None,
        _ => None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedEstimate {
    /// 0 for the horizontal axis; 2 for the vertical drift off the floor.
    pub axis: usize,
    pub mean: f64,
    pub std_error: f64,
    pub trajectories: usize,
}

pub fn speed_estimate(geometry: Geometry, records: &[WalkRecord]) -> SpeedEstimate {
    let (axis, speeds): (usize, Vec<f64>) = if geometry == Geometry::HalfSpace {
        (2, records.iter().filter_map(|r| r.off_floor).filter(|o| o.1 > 0.0).map(|(d, t)| d / t).collect())
    } else {
        (0, records.iter().map(|r| r.summary.speed()[0]).collect())
    };
    let (mean, std_error) = mean_and_se(&speeds);
    SpeedEstimate {
        axis,
        mean,
        std_error,
        trajectories: speeds.len(),
    }
}

pub struct Experiment<'a> {
    pub cfg: &'a ExperimentConfig,
    pub runner: &'a Runner,
    pub out: PathBuf,
}

impl Experiment<'_> {
    fn environments(&self) -> Result<(Vec<Environment>, Vec<EnvironmentDescriptor>)> {
        let draws = self.runner.map(self.cfg.environments, |i| self.cfg.build_environment(i))?;
        Ok(draws.into_iter().unzip())
    }

    fn kernel_snapshots(&self, env: &Environment) -> Result<Vec<KernelSnapshot>> {
        let k = self.cfg.kernel.as_ref().ok_or_else(|| CliError::invalid("kernel", "missing kernel section"))?;
        Ok(kernel(env, self.cfg.dynamics, self.cfg.start_vertex(), self.cfg.duration()?, &k.propagation())?)
    }

    fn write_kernel(&self, snaps: &[KernelSnapshot], artifacts: &mut Vec<PathBuf>) -> Result<()> {
        let dir = self.out.join("kernel");
        create_dir(&dir)?;
        let mut summaries = Vec::new();
        for (i, s) in snaps.iter().enumerate() {
            let name = PathBuf::from("kernel").join(format!("snapshot_{i:04}.csv"));
            write_snapshot_csv(&self.out.join(&name), s)?;
            summaries.push(SnapshotSummary::of(s, name.clone()));
            artifacts.push(name);
        }
        self.json("kernel.json", &summaries, artifacts)
    }

    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T, artifacts: &mut Vec<PathBuf>) -> Result<()> {
        write_json(&self.out.join(name), value)?;
        artifacts.push(PathBuf::from(name));
        Ok(())
    }

    pub fn run(&self, command: Command) -> Result<RunOutcome> {
        self.cfg.validate()?;
        create_dir(&self.out)?;
        let mut artifacts = Vec::new();
        let mut verdicts = Vec::new();
        let (envs, descriptors) = self.environments()?;
        match command {
            Command::Env => {
                self.json("environment.json", &descriptors, &mut artifacts)?;
            }
            Command::Simulate => {
                let csv_dir = self.cfg.write_trajectories.then(|| self.out.join("trajectories"));
                if let Some(dir) = &csv_dir {
                    create_dir(dir)?;
                }
                let req = WalkRequest {
                    csv_dir,
                    ..WalkRequest::default()
                };
                let records = simulate_batch(self.cfg, &envs, self.runner, &req)?;
                let summaries: Vec<TrajectorySummary> = records.into_iter().map(|r| r.summary).collect();
                let batch: BatchSummary = summarize(&summaries)?;
                self.json("summary.json", &json!({"batch": batch, "trajectories": summaries}), &mut artifacts)?;
                if self.cfg.write_trajectories {
                    let n = self.cfg.environments * self.cfg.batch;
                    artifacts.extend((0..n).map(|k| {
                        PathBuf::from("trajectories").join(format!("trajectory_{:05}_{:06}.csv", k / self.cfg.batch, k % self.cfg.batch))
                    }));
                }
            }
            Command::Kernel => {
                let snaps = self.kernel_snapshots(&envs[0])?;
                self.write_kernel(&snaps, &mut artifacts)?;
            }
            Command::Analyze => self.analyze(&envs, &descriptors, &mut artifacts, &mut verdicts)?,
        }
        let manifest = Manifest {
            tool: "tdrw",
            version: env!("CARGO_PKG_VERSION"),
            core_version: tdrw_core::VERSION,
            command,
            config: self.cfg.clone(),
            seeds: json!({
                "master": self.cfg.seed,
                "generator": "chacha8",
                "environment_streams": (0..self.cfg.environments).collect::<Vec<u64>>(),
                "walk_streams": {"count": self.cfg.environments * self.cfg.batch, "index": "environment * batch + walk"},
            }),
            threads: self.runner.threads(),
            artifacts: artifacts.clone(),
        };
        write_json(&self.out.join("manifest.json"), &manifest)?;
        let exit_code = if verdicts.contains(&Verdict::Inconclusive) { exit::INCONCLUSIVE } else { exit::OK };
        Ok(RunOutcome { artifacts, exit_code })
    }

    fn analyze(&self, envs: &[Environment], descriptors: &[EnvironmentDescriptor], artifacts: &mut Vec<PathBuf>, verdicts: &mut Vec<Verdict>) -> Result<()> {
        let cfg = self.cfg;
        let env = &envs[0];
        let x0 = cfg.start_vertex();
        let mut record = |rep: &FitReport| verdicts.push(rep.verdict);

        if cfg.analyses.iter().any(Analysis::needs_trajectories) {
            let horizons = cfg
                .analyses
                .iter()
                .find_map(|a| match a {
                    Analysis::Returns { horizons } => Some(horizons.clone()),
                    _ => None,
                })
                .unwrap_or_default();
            let half_space = env.geometry == Geometry::HalfSpace;
            let req = WalkRequest {
                return_horizons: horizons.clone(),
                excursions: cfg.analyses.contains(&Analysis::ExcursionTail),
                off_floor: half_space,
                csv_dir: None,
            };
            let records = simulate_batch(cfg, envs, self.runner, &req)?;
            for a in &cfg.analyses {
                match a {
                    Analysis::Speed => {
                        let estimate = speed_estimate(env.geometry, &records);
                        let formula = formula_speed(cfg, &descriptors[0])?;
                        let target = formula.as_ref().map(|f| f.per_unit_time());
                        let within = target.map(|t| (estimate.mean - t).abs() <= 3.0 * estimate.std_error);
                        self.json("speed.json", &json!({"estimate": estimate, "formula": formula, "formula_value": target, "within_3se": within}), artifacts)?;
                    }
                    Analysis::Returns { horizons } => {
                        let counts: Vec<Vec<u64>> = records.iter().map(|r| r.returns.clone()).collect();
                        self.json("returns.json", &recurrence_diagnostic(horizons, &counts)?, artifacts)?;
                    }
                    Analysis::ExcursionTail => {
                        let walks: Vec<Vec<u64>> = records.iter().map(|r| r.durations.clone()).collect();
                        let rep = geometric_tail_fit_pooled(&walks)?;
                        record(&rep);
                        self.json("tail.json", &rep, artifacts)?;
                    }
                    _ => {}
                }
            }
        }

        let snaps = if cfg.analyses.iter().any(Analysis::needs_kernel) {
            let snaps = self.kernel_snapshots(env)?;
            self.write_kernel(&snaps, artifacts)?;
            snaps
        } else {
            Vec::new()
        };

        for a in &cfg.analyses {
            match a {
                Analysis::Gaussian => {
                    let geometry = env.geometry;
                    let (upper, lower) = gaussian_bound_report(&snaps, |r| geometry.ball_volume(x0, r) as f64, &GaussianOptions::default())?;
                    record(&upper);
                    record(&lower);
                    self.json("gaussian.json", &json!({"upper": upper, "lower": lower}), artifacts)?;
                }
                Analysis::Ondiagonal { times } => {
                    let k = cfg.kernel.as_ref().expect("validated");
                    let points = ondiagonal_series(env, cfg.dynamics, x0, times, &PropagationConfig::new(k.radius, k.tolerance))?;
                    let decay = if points.len() >= 2 { Some(decay_exponent(&points)?) } else { None };
                    self.json("ondiagonal.json", &json!({"points": points, "decay": decay}), artifacts)?;
                }
                Analysis::Poincare { radii, times } => {
                    let mut reports = Vec::new();
                    let mut ratios = Vec::new();
                    for &r in radii {
                        let row: Vec<FitReport> = times.iter().map(|&t| poincare_constant(env, t, x0, r)).collect::<tdrw_core::Result<_>>()?;
                        let c2: Vec<f64> = row.iter().filter_map(|rep| rep.constant("C2")).collect();
                        let (lo, hi) = c2.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
                        ratios.push(json!({"r": r, "max_over_min": hi / lo}));
                        row.iter().for_each(&mut record);
                        reports.extend(row);
                    }
                    self.json("poincare.json", &json!({"reports": reports, "ratios": ratios}), artifacts)?;
                }
                Analysis::VolumeDoubling { r_max } => {
                    let rep = volume_doubling_constant(env.geometry, x0, *r_max)?;
                    record(&rep);
                    self.json("volume_doubling.json", &rep, artifacts)?;
                }
                Analysis::Ellipticity { radius, times } => {
                    let rep = FitReport::from(&env.verify_ellipticity(times, &env.ball(x0, *radius))?);
                    record(&rep);
                    self.json("ellipticity.json", &rep, artifacts)?;
                }
                Analysis::Duality => {
                    let tol = cfg.kernel.as_ref().map_or(1e-13, |k| k.tolerance);
                    let horizon = cfg.duration()?;
                    let worst = duality_max_vsrw(env, horizon, &PropagationConfig::new(1, tol))?;
                    self.json("duality.json", &json!({"horizon": horizon, "max_difference": worst}), artifacts)?;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("tdrw-out"))
}
