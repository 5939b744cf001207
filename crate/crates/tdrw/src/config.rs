//! Experiment configuration: a single JSON document, validated up front.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tdrw_core::environments::{
    constant_env, halfspace_csrw, halfspace_discrete, poisson_shift_1d, poisson_times, random_cycle_schedule, zigzag_1d, HalfspaceCsrwParams,
    HalfspaceParams, PoissonShiftParams, ZigzagParams,
};
use tdrw_core::kernel::PropagationConfig;
use tdrw_core::rng::{stream_rng, Stream};
use tdrw_core::walkers::Dynamics;
use tdrw_core::{Breakpoints, Environment, Geometry, Vertex};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    #[serde(default = "default_dynamics")]
    pub dynamics: Dynamics,
    /// Start vertex; the line uses only the first coordinate.
    #[serde(default)]
    pub start: [i64; 3],
    /// Number of steps for discrete dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Horizon for continuous dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Walks per environment draw.
    #[serde(default = "one")]
    pub batch: u64,
    /// Independent environment draws (only random presets differ between draws).
    #[serde(default = "one")]
    pub environments: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Write one CSV per trajectory.
    #[serde(default)]
    pub write_trajectories: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_dynamics() -> Dynamics {
    Dynamics::Discrete
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Zigzag1d {
        #[serde(default = "half")]
        eps: f64,
        #[serde(default = "quarter")]
        gamma: f64,
        #[serde(default = "half")]
        gamma_prime: f64,
    },
    Poisson1d {
        #[serde(default = "half")]
        eps: f64,
        #[serde(default = "two")]
        c: f64,
        /// Rate of the environment clock; `c - 1` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intensity: Option<f64>,
        /// Fixed breakpoints; drawn from the environment stream when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breakpoints: Option<Vec<f64>>,
    },
    HalfspaceDt {
        #[serde(default = "half")]
        eps: f64,
        #[serde(default)]
        gamma: f64,
        #[serde(default)]
        gamma_prime: f64,
    },
    HalfspaceCsrw {
        #[serde(default = "half")]
        eps: f64,
        #[serde(default = "two")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intensity: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breakpoints: Option<Vec<f64>>,
    },
    Constant {
        #[serde(default = "line")]
        geometry: Geometry,
        #[serde(default = "unit")]
        weight: f64,
    },
    RandomCycle {
        #[serde(default = "twenty")]
        n: u32,
        #[serde(default = "five")]
        segments: usize,
        #[serde(default = "quarter")]
        c1: f64,
    },
}

fn half() -> f64 {
    0.5
}
fn quarter() -> f64 {
    0.25
}
fn two() -> f64 {
    2.0
}
fn unit() -> f64 {
    1.0
}
fn line() -> Geometry {
    Geometry::Line
}
fn twenty() -> u32 {
    20
}
fn five() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub radius: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Elapsed times of intermediate snapshots.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_tolerance() -> f64 {
    1e-10
}

impl KernelConfig {
    pub fn propagation(&self) -> PropagationConfig {
        PropagationConfig::new(self.radius, self.tolerance).with_snapshots(self.snapshot_times.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// Batch speed next to the formula for the preset.
    Speed,
    /// Return counts at the given elapsed times.
    Returns { horizons: Vec<f64> },
    /// Geometric tail of floor-to-floor excursion lengths.
    ExcursionTail,
    /// Two-sided Gaussian reports over the kernel snapshots.
    Gaussian,
    /// On-diagonal kernel values and their decay exponent.
    Ondiagonal { times: Vec<f64> },
    Poincare { radii: Vec<u64>, times: Vec<f64> },
    VolumeDoubling { r_max: u64 },
    Ellipticity { radius: u64, times: Vec<f64> },
    /// VSRW duality against the reversed schedule (cycle only).
    Duality,
}

impl Analysis {
    pub fn needs_trajectories(&self) -> bool {
        matches!(self, Analysis::Speed | Analysis::Returns { .. } | Analysis::ExcursionTail)
    }

    pub fn needs_kernel(&self) -> bool {
        matches!(self, Analysis::Gaussian)
    }
}

/// The JSON descriptor of a constructed environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub preset: String,
    pub geometry: Geometry,
    pub c1: f64,
    pub params: Value,
    /// Explicit breakpoints; empty for integer-clock and constant schedules.
    pub breakpoints: Vec<f64>,
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn field_error(prefix: &str, err: tdrw_core::Error) -> CliError {
    match err {
        tdrw_core::Error::Domain { field, message } => CliError::invalid(format!("{prefix}.{field}"), message),
        other => CliError::Core(other),
    }
}

impl ExperimentConfig {
    pub fn start_vertex(&self) -> Vertex {
        Vertex(self.start)
    }

    /// Elapsed time of a run: `steps` or `horizon`.
    pub fn duration(&self) -> Result<f64> {
        match (self.dynamics, self.steps, self.horizon) {
            (Dynamics::Discrete, Some(s), None) => Ok(s as f64),
            (Dynamics::Discrete, _, _) => Err(CliError::invalid("steps", "discrete dynamics take `steps` and no `horizon`")),
            (_, None, Some(h)) => Ok(h),
            (_, _, _) => Err(CliError::invalid("horizon", "continuous dynamics take `horizon` and no `steps`")),
        }
    }

    /// Checks every field and builds the first environment draw.
    pub fn validate(&self) -> Result<()> {
        let duration = self.duration()?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(CliError::invalid(if self.dynamics == Dynamics::Discrete { "steps" } else { "horizon" }, "must be positive and finite"));
        }
        if self.batch == 0 {
            return Err(CliError::invalid("batch", "must be at least 1"));
        }
        if self.environments == 0 {
            return Err(CliError::invalid("environments", "must be at least 1"));
        }
        let discrete_family = matches!(self.environment, EnvironmentConfig::Zigzag1d { .. } | EnvironmentConfig::HalfspaceDt { .. });
        if discrete_family && self.dynamics != Dynamics::Discrete {
            return Err(CliError::invalid("dynamics", "this preset is defined for discrete dynamics only"));
        }
        let continuous_family = matches!(
            self.environment,
            EnvironmentConfig::Poisson1d { .. } | EnvironmentConfig::HalfspaceCsrw { .. } | EnvironmentConfig::RandomCycle { .. }
        );
        if continuous_family && self.dynamics == Dynamics::Discrete {
            return Err(CliError::invalid("dynamics", "this preset has a continuous clock; use csrw or vsrw"));
        }
        let env = self.build_environment(0)?.0;
        env.geometry.check(self.start_vertex()).map_err(|e| field_error("start", e))?;
        if env.geometry == Geometry::Line && (self.start[1] != 0 || self.start[2] != 0) {
            return Err(CliError::invalid("start", "line vertices have zero second and third coordinates"));
        }
        if let Some(k) = &self.kernel {
            k.propagation().validate().map_err(|e| field_error("kernel", e))?;
            if k.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= duration)) {
                return Err(CliError::invalid("kernel.snapshot_times", "must lie in [0, duration]"));
            }
            if k.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::invalid("kernel.snapshot_times", "must be strictly increasing"));
            }
        }
        for a in &self.analyses {
            if a.needs_kernel() && self.kernel.is_none() {
                return Err(CliError::invalid("kernel", "required by the requested analyses"));
            }
            match a {
                Analysis::Returns { horizons } => {
                    if horizons.len() < 2 || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons.iter().any(|&h| !(h > 0.0 && h <= duration)) {
                        return Err(CliError::invalid("analyses.returns.horizons", "need at least two increasing horizons in (0, duration]"));
                    }
                }
                Analysis::ExcursionTail if env.geometry != Geometry::HalfSpace => {
                    return Err(CliError::invalid("analyses.excursion-tail", "needs a half-space preset"));
                }
                Analysis::Ondiagonal { times } => {
                    if self.kernel.is_none() {
                        return Err(CliError::invalid("kernel", "required by the requested analyses"));
                    }
                    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|&t| !(t > 0.0 && t <= duration)) {
                        return Err(CliError::invalid("analyses.ondiagonal.times", "need increasing times in (0, duration]"));
                    }
                }
                Analysis::Poincare { radii, times } => {
                    if radii.is_empty() || radii.contains(&0) || times.is_empty() {
                        return Err(CliError::invalid("analyses.poincare", "need positive radii and at least one time"));
                    }
                }
                Analysis::VolumeDoubling { r_max } if *r_max < 2 => {
                    return Err(CliError::invalid("analyses.volume-doubling.r_max", "must be at least 2"));
                }
                Analysis::Ellipticity { times, .. } if times.is_empty() => {
                    return Err(CliError::invalid("analyses.ellipticity.times", "need at least one time"));
                }
                Analysis::Duality if !matches!(env.geometry, Geometry::Cycle { .. }) || self.dynamics != Dynamics::Vsrw => {
                    return Err(CliError::invalid("analyses.duality", "needs a cycle geometry and vsrw dynamics"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Environment draw `index` and its descriptor. Random breakpoints and
    /// weights come from environment stream `index` of the master seed.
    pub fn build_environment(&self, index: u64) -> Result<(Environment, EnvironmentDescriptor)> {
        let horizon = self.duration()?;
        let mut rng = stream_rng(self.seed, Stream::Environment, index);
        let e = |err| field_error("environment", err);
        let (env, preset, params, breakpoints) = match &self.environment {
            EnvironmentConfig::Zigzag1d { eps, gamma, gamma_prime } => {
                let p = ZigzagParams::from_laziness(*eps, *gamma, *gamma_prime).map_err(e)?;
                let env = zigzag_1d(&p).map_err(e)?;
                (env, "zigzag1d", json!({"eps": eps, "gamma": gamma, "gamma_prime": gamma_prime, "b": p.b, "b_prime": p.b_prime}), vec![])
            }
            EnvironmentConfig::Poisson1d { eps, c, intensity, breakpoints } => {
                let rate = intensity.unwrap_or(c - 1.0);
                let times = match breakpoints {
                    Some(b) => b.clone(),
                    None => poisson_times(rate, horizon, &mut rng).map_err(e)?,
                };
                let env = poisson_shift_1d(&PoissonShiftParams {
                    eps: *eps,
                    c: *c,
                    breakpoints: times.clone(),
                })
                .map_err(e)?;
                (env, "poisson1d", json!({"eps": eps, "c": c, "intensity": rate}), times)
            }
            EnvironmentConfig::HalfspaceDt { eps, gamma, gamma_prime } => {
                let p = if *gamma == 0.0 && *gamma_prime == 0.0 {
                    HalfspaceParams::non_lazy(*eps)
                } else {
                    HalfspaceParams::from_laziness(*eps, *gamma, *gamma_prime).map_err(e)?
                };
                let env = halfspace_discrete(&p).map_err(e)?;
                let params = json!({"eps": eps, "gamma": gamma, "gamma_prime": gamma_prime, "b": p.b, "b_prime": p.b_prime, "f": p.f, "f_prime": p.f_prime});
                (env, "halfspace-dt", params, vec![])
            }
            EnvironmentConfig::HalfspaceCsrw { eps, c, intensity, breakpoints } => {
                if !(*c > 1.0 && c.is_finite()) {
                    return Err(CliError::invalid("environment.c", "must exceed 1"));
                }
                let rate = intensity.unwrap_or(c - 1.0);
                let times = match breakpoints {
                    Some(b) => b.clone(),
                    None => poisson_times(rate, horizon, &mut rng).map_err(e)?,
                };
                let env = halfspace_csrw(&HalfspaceCsrwParams {
                    eps: *eps,
                    breakpoints: times.clone(),
                })
                .map_err(e)?;
                (env, "halfspace-csrw", json!({"eps": eps, "c": c, "intensity": rate}), times)
            }
            EnvironmentConfig::Constant { geometry, weight } => {
                let env = constant_env(*geometry, *weight).map_err(e)?;
                (env, "constant", json!({"weight": weight}), vec![])
            }
            EnvironmentConfig::RandomCycle { n, segments, c1 } => {
                if *n < 3 {
                    return Err(CliError::invalid("environment.n", "cycle needs at least 3 vertices"));
                }
                if !(*c1 > 0.0 && *c1 <= 1.0) {
                    return Err(CliError::invalid("environment.c1", "must lie in (0, 1]"));
                }
                let env = random_cycle_schedule(*n, *segments, horizon, *c1, &mut rng).map_err(e)?;
                let times = match env.breakpoints() {
                    Breakpoints::Explicit(v) => v.clone(),
                    _ => vec![],
                };
                (env, "random-cycle", json!({"n": n, "segments": segments}), times)
            }
        };
        let descriptor = EnvironmentDescriptor {
            preset: preset.to_string(),
            geometry: env.geometry,
            c1: env.ellipticity,
            params,
            breakpoints,
        };
        Ok((env, descriptor))
    }
}
