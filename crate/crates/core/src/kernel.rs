//! Heat kernels by time-ordered propagation on a finite box.
//!
//! Mass leaving the box is absorbed and booked as truncation loss, so the
//! reported masses are lower bounds and `sum + truncation_loss = 1`.
//! Continuous dynamics are propagated by uniformization on each interval
//! where the conductances are constant.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{Breakpoints, ConductanceSchedule, Environment, Geometry, Vertex, WeightRule};
use crate::walkers::Dynamics;

/// Largest number of sites a box may hold.
pub const MAX_BOX_SITES: usize = 1 << 26;

/// A finite box of sites: an interval on the line, an L-infinity box cut at
/// the floor on the half-space, the whole cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBox {
    pub geometry: Geometry,
    pub center: Vertex,
    pub radius: u64,
    /// Lowest coordinate along each axis.
    pub lo: [i64; 3],
    /// Extent along each axis.
    pub shape: [usize; 3],
}

impl KernelBox {
    pub fn new(geometry: Geometry, center: Vertex, radius: u64) -> Result<Self> {
        geometry.check(center)?;
        if radius == 0 {
            return Err(domain("radius", "box radius must be at least 1"));
        }
        let r = radius as i64;
        let side = 2 * radius as usize + 1;
        let (lo, shape) = match geometry {
            Geometry::Line => ([center.x() - r, 0, 0], [side, 1, 1]),
            Geometry::Cycle { n } => ([0, 0, 0], [n as usize, 1, 1]),
            Geometry::HalfSpace => {
                let z0 = (center.z() - r).max(0);
                let depth = (center.z() + r - z0 + 1) as usize;
                ([center.x() - r, center.y() - r, z0], [side, side, depth])
            }
        };
        let sites = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        match sites {
            Some(s) if s <= MAX_BOX_SITES => Ok(KernelBox {
                geometry,
                center,
                radius,
                lo,
                shape,
            }),
            _ => Err(Error::Resource(alloc::format!("box of radius {radius} exceeds {MAX_BOX_SITES} sites"))),
        }
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, v: Vertex) -> Option<usize> {
        if !self.geometry.contains(v) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..3 {
            let off = v.0[a] - self.lo[a];
            if off < 0 || off as usize >= self.shape[a] {
                return None;
            }
            idx = idx * self.shape[a] + off as usize;
        }
        Some(idx)
    }

    pub fn vertex(&self, mut idx: usize) -> Vertex {
        let mut c = [0i64; 3];
        for a in (0..3).rev() {
            c[a] = self.lo[a] + (idx % self.shape[a]) as i64;
            idx /= self.shape[a];
        }
        Vertex(c)
    }

    /// Minimal number of jumps needed to leave the box from its center.
    fn exit_distance(&self) -> Option<u64> {
        match self.geometry {
            Geometry::Cycle { .. } => None,
            _ => Some(self.radius + 1),
        }
    }
}

/// Box radius, uniformization tolerance and the elapsed times at which
/// snapshots are taken (the horizon itself is always included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub radius: u64,
    pub tolerance: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl PropagationConfig {
    pub fn new(radius: u64, tolerance: f64) -> Self {
        PropagationConfig {
            radius,
            tolerance,
            snapshot_times: Vec::new(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(domain("radius", "box radius must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(domain("tolerance", "must lie in (0, 1e-6]"));
        }
        Ok(())
    }

    /// Sorted snapshot times in `[0, horizon]`, ending at `horizon`.
    fn schedule(&self, horizon: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.snapshot_times.len() + 1);
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= horizon) {
                return Err(domain("snapshot_times", "must lie in [0, horizon]"));
            }
            if out.last().is_some_and(|&last| t <= last) {
                return Err(domain("snapshot_times", "must be strictly increasing"));
            }
            out.push(t);
        }
        if out.last() != Some(&horizon) {
            out.push(horizon);
        }
        Ok(out)
    }
}

/// Kernel masses `p(t0, x0; t, .)` on a box at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSnapshot {
    /// Absolute time of the snapshot.
    pub time: f64,
    pub start: Vertex,
    pub domain: KernelBox,
    pub mass: Vec<f64>,
    /// Mass absorbed at the box boundary.
    pub truncation_loss: f64,
    /// Bound on the L1 error from truncating uniformization series.
    pub series_error: f64,
    /// Larger of the truncation loss and the analytic Poisson-tail bound.
    pub loss_bound: f64,
}

impl KernelSnapshot {
    pub fn mass_at(&self, v: Vertex) -> f64 {
        self.domain.index(v).map_or(0.0, |i| self.mass[i])
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Error bound on any single mass: `loss_bound + series_error`.
    pub fn error_bound(&self) -> f64 {
        self.loss_bound + self.series_error
    }

    pub fn sites(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.mass.iter().enumerate().map(|(i, &m)| (self.domain.vertex(i), m))
    }

    /// Mean displacement from the start along each axis, normalised by the
    /// mass remaining in the box. On the cycle coordinates are not unwrapped.
    pub fn mean(&self) -> [f64; 3] {
        let total = self.total_mass();
        let mut m = [0.0; 3];
        for (v, p) in self.sites().filter(|s| s.1 > 0.0) {
            for a in 0..3 {
                m[a] += (v.0[a] - self.start.0[a]) as f64 * p;
            }
        }
        m.map(|s| s / total)
    }

    pub fn variance(&self) -> [f64; 3] {
        let total = self.total_mass();
        let mean = self.mean();
        let mut s = [0.0; 3];
        for (v, p) in self.sites().filter(|s| s.1 > 0.0) {
            for a in 0..3 {
                let d = (v.0[a] - self.start.0[a]) as f64 - mean[a];
                s[a] += d * d * p;
            }
        }
        s.map(|x| x / total)
    }
}

/// `ln Gamma(x)`.
fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn poisson_log_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0)
}

/// `P(Pois(lambda) >= n)`.
pub fn poisson_upper_tail(lambda: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if (n as f64) <= lambda {
        let below: f64 = (0..n).map(|k| poisson_log_pmf(lambda, k).exp()).sum();
        return (1.0 - below).max(0.0);
    }
    let mut sum = 0.0;
    let mut k = n;
    loop {
        let term = poisson_log_pmf(lambda, k).exp();
        sum += term;
        if term <= sum * 1e-18 || term == 0.0 {
            return sum;
        }
        k += 1;
    }
}

/// Poisson weights `w_0..=w_K` for the smallest `K` whose tail is below
/// `budget`; the tail is folded into `w_K` so the weights sum to one.
/// Returns the weights and the folded tail mass.
fn truncated_poisson(lambda: f64, budget: f64) -> (Vec<f64>, f64) {
    if lambda == 0.0 {
        return (vec![1.0], 0.0);
    }
    let kmax = (lambda + 12.0 * lambda.sqrt() + 40.0).ceil() as usize;
    let w: Vec<f64> = (0..=kmax as u64).map(|k| poisson_log_pmf(lambda, k).exp()).collect();
    let mut tail = vec![0.0; kmax + 2];
    for k in (0..=kmax).rev() {
        tail[k] = tail[k + 1] + w[k];
    }
    let big_k = (0..=kmax).find(|&k| tail[k + 1] < budget).unwrap_or(kmax);
    let mut weights = w[..=big_k].to_vec();
    let head: f64 = weights[..big_k].iter().sum();
    weights[big_k] = 1.0 - head;
    (weights, tail[big_k + 1])
}

/// How one step redistributes mass on a constant segment.
#[derive(Copy, Clone)]
enum StepLaw {
    /// `P(x, y) = mu(x, y) / mu(x)`.
    Conductance,
    /// `I + L^V / rate`.
    Uniformized { rate: f64 },
}

struct Propagator<'a> {
    env: &'a Environment,
    domain: KernelBox,
}

impl Propagator<'_> {
    /// One application `dst = src * M`; returns the mass that left the box.
    fn step(&self, seg: usize, law: StepLaw, src: &[f64], dst: &mut [f64]) -> f64 {
        dst.iter_mut().for_each(|d| *d = 0.0);
        let mut lost = 0.0;
        for (i, &m) in src.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let star = self.env.star_in_segment(seg, self.domain.vertex(i));
            let (scale, stay) = match law {
                StepLaw::Conductance => (1.0 / star.total, star.loop_weight / star.total),
                StepLaw::Uniformized { rate } => (1.0 / rate, 1.0 - star.off_diagonal() / rate),
            };
            dst[i] += m * stay;
            for (y, w) in star.edges() {
                let p = m * w * scale;
                match self.domain.index(y) {
                    Some(j) => dst[j] += p,
                    None => lost += p,
                }
            }
        }
        lost
    }

    fn max_jump_rate(&self, seg: usize) -> f64 {
        (0..self.domain.len())
            .map(|i| self.env.star_in_segment(seg, self.domain.vertex(i)).off_diagonal())
            .fold(0.0, f64::max)
    }
}

struct Piece {
    seg: usize,
    duration: f64,
}

/// Constant-conductance pieces of `[a, b)`.
fn pieces(breakpoints: &Breakpoints, a: f64, b: f64) -> Vec<Piece> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.interior(a, b));
    cuts.push(b);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Piece {
            seg: breakpoints.segment_at(w[0]),
            duration: w[1] - w[0],
        })
        .collect()
}

fn start_mass(domain: &KernelBox, x0: Vertex) -> Vec<f64> {
    let mut mass = vec![0.0; domain.len()];
    mass[domain.index(x0).expect("start lies in its own box")] = 1.0;
    mass
}

/// Discrete-time kernel from `(t0, x0)` over `steps` unit steps. Snapshot
/// times are elapsed step counts.
pub fn discrete_kernel(env: &Environment, x0: Vertex, t0: u64, steps: u64, cfg: &PropagationConfig) -> Result<Vec<KernelSnapshot>> {
    cfg.validate()?;
    let times = cfg.schedule(steps as f64)?;
    if times.iter().any(|t| t.fract() != 0.0) {
        return Err(domain("snapshot_times", "discrete snapshots must be integers"));
    }
    let domain = KernelBox::new(env.geometry, x0, cfg.radius)?;
    let prop = Propagator { env, domain };
    let mut mass = start_mass(&prop.domain, x0);
    let mut next = vec![0.0; mass.len()];
    let mut loss = 0.0;
    let mut done = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &target in &times {
        while done < target as u64 {
            let seg = env.segment_at((t0 + done) as f64);
            loss += prop.step(seg, StepLaw::Conductance, &mass, &mut next);
            core::mem::swap(&mut mass, &mut next);
            done += 1;
        }
        out.push(KernelSnapshot {
            time: (t0 + done) as f64,
            start: x0,
            domain: prop.domain.clone(),
            mass: mass.clone(),
            truncation_loss: loss,
            series_error: 0.0,
            loss_bound: loss,
        });
    }
    Ok(out)
}

fn continuous_kernel(env: &Environment, dynamics: Dynamics, x0: Vertex, horizon: f64, cfg: &PropagationConfig) -> Result<Vec<KernelSnapshot>> {
    cfg.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", "must be finite and nonnegative"));
    }
    let times = cfg.schedule(horizon)?;
    let domain = KernelBox::new(env.geometry, x0, cfg.radius)?;
    let prop = Propagator { env, domain };

    let mut plan = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in &times {
        plan.push(pieces(env.breakpoints(), prev, t));
        prev = t;
    }
    let n_pieces = plan.iter().map(Vec::len).sum::<usize>().max(1);
    let budget = cfg.tolerance / n_pieces as f64;

    let mut mass = start_mass(&prop.domain, x0);
    let mut scratch = vec![0.0; mass.len()];
    let mut acc = vec![0.0; mass.len()];
    let (mut loss, mut series_error, mut mean_jumps) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(times.len());
    for (&t, chunk) in times.iter().zip(&plan) {
        for piece in chunk {
            let (law, rate) = match dynamics {
                Dynamics::Vsrw => {
                    let rate = prop.max_jump_rate(piece.seg);
                    (StepLaw::Uniformized { rate }, rate)
                }
                _ => (StepLaw::Conductance, 1.0),
            };
            if rate == 0.0 {
                continue;
            }
            let lambda = rate * piece.duration;
            mean_jumps += lambda;
            let (weights, tail) = truncated_poisson(lambda, budget);
            let inside: f64 = mass.iter().sum();
            series_error += 2.0 * tail * inside;

            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut lost_so_far = 0.0;
            for (k, &w) in weights.iter().enumerate() {
                for (a, &m) in acc.iter_mut().zip(&mass) {
                    *a += w * m;
                }
                loss += w * lost_so_far;
                if k + 1 < weights.len() {
                    lost_so_far += prop.step(piece.seg, law, &mass, &mut scratch);
                    core::mem::swap(&mut mass, &mut scratch);
                }
            }
            core::mem::swap(&mut mass, &mut acc);
            for m in mass.iter_mut() {
                debug_assert!(*m >= -1e-15);
                *m = m.max(0.0);
            }
        }
        let analytic = prop.domain.exit_distance().map_or(0.0, |r| poisson_upper_tail(mean_jumps, r));
        out.push(KernelSnapshot {
            time: t,
            start: x0,
            domain: prop.domain.clone(),
            mass: mass.clone(),
            truncation_loss: loss,
            series_error,
            loss_bound: loss.max(analytic),
        });
    }
    Ok(out)
}

/// CSRW kernel from `(0, x0)` as raw probabilities `P(Y_t = y)`; divide by
/// `mu^(t)(y)` for the density.
pub fn csrw_kernel(env: &Environment, x0: Vertex, horizon: f64, cfg: &PropagationConfig) -> Result<Vec<KernelSnapshot>> {
    continuous_kernel(env, Dynamics::Csrw, x0, horizon, cfg)
}

/// VSRW kernel from `(0, x0)`.
pub fn vsrw_kernel(env: &Environment, x0: Vertex, horizon: f64, cfg: &PropagationConfig) -> Result<Vec<KernelSnapshot>> {
    continuous_kernel(env, Dynamics::Vsrw, x0, horizon, cfg)
}

/// Kernel for any dynamics started at time 0. Discrete horizons must be
/// integers.
pub fn kernel(env: &Environment, dynamics: Dynamics, x0: Vertex, horizon: f64, cfg: &PropagationConfig) -> Result<Vec<KernelSnapshot>> {
    match dynamics {
        Dynamics::Discrete => {
            if !(horizon >= 0.0 && horizon.fract() == 0.0) {
                return Err(domain("horizon", "discrete horizon must be a nonnegative integer"));
            }
            discrete_kernel(env, x0, 0, horizon as u64, cfg)
        }
        _ => continuous_kernel(env, dynamics, x0, horizon, cfg),
    }
}

/// The schedule `u -> mu^((T-u)-)` on `[0, T]`: breakpoints are mirrored
/// and segments listed in reverse order. After `T` it keeps the value of
/// the original first segment.
pub fn reversed_environment(env: &Environment, horizon: f64) -> Result<Environment> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", "must be finite and positive"));
    }
    if *env.breakpoints() == Breakpoints::None {
        return Ok(env.clone());
    }
    let interior = env.breakpoints().interior(0.0, horizon);
    let mut original = vec![env.segment_at(0.0)];
    original.extend(interior.iter().map(|&tau| env.segment_at(tau)));
    let mut times = vec![0.0];
    times.extend(interior.iter().rev().map(|&tau| horizon - tau));
    let mut map: Vec<usize> = original.into_iter().rev().collect();
    let inner = match env.rule() {
        WeightRule::Remapped { inner, map: prior } => {
            map = map.iter().map(|&s| prior[s.min(prior.len() - 1)]).collect();
            inner.clone()
        }
        rule => alloc::boxed::Box::new(rule.clone()),
    };
    Environment::new(
        env.geometry,
        ConductanceSchedule {
            breakpoints: Breakpoints::explicit(times)?,
            rule: WeightRule::Remapped { inner, map },
        },
        env.ellipticity,
    )
}

fn require_cycle(env: &Environment) -> Result<u32> {
    match env.geometry {
        Geometry::Cycle { n } => Ok(n),
        _ => Err(Error::Unsupported("duality check needs a finite cycle".into())),
    }
}

/// `|p(0,x;T,y) - p*(0,y;T,x)|` for the VSRW, `p*` built on the reversed
/// schedule.
pub fn duality_check_vsrw(env: &Environment, x: Vertex, y: Vertex, horizon: f64, cfg: &PropagationConfig) -> Result<f64> {
    require_cycle(env)?;
    let reversed = reversed_environment(env, horizon)?;
    let cfg = PropagationConfig::new(cfg.radius, cfg.tolerance);
    let forward = vsrw_kernel(env, x, horizon, &cfg)?;
    let backward = vsrw_kernel(&reversed, y, horizon, &cfg)?;
    Ok((forward.last().unwrap().mass_at(y) - backward.last().unwrap().mass_at(x)).abs())
}

/// Maximum of [`duality_check_vsrw`] over all pairs of cycle sites.
pub fn duality_max_vsrw(env: &Environment, horizon: f64, cfg: &PropagationConfig) -> Result<f64> {
    let n = require_cycle(env)?;
    let reversed = reversed_environment(env, horizon)?;
    let cfg = PropagationConfig::new(cfg.radius, cfg.tolerance);
    let mut forward = Vec::with_capacity(n as usize);
    let mut backward = Vec::with_capacity(n as usize);
    for i in 0..n as i64 {
        forward.push(vsrw_kernel(env, Vertex::line(i), horizon, &cfg)?.pop().unwrap());
        backward.push(vsrw_kernel(&reversed, Vertex::line(i), horizon, &cfg)?.pop().unwrap());
    }
    let mut worst: f64 = 0.0;
    for x in 0..n as usize {
        for y in 0..n as usize {
            let p = forward[x].mass_at(Vertex::line(y as i64));
            let q = backward[y].mass_at(Vertex::line(x as i64));
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

/// One on-diagonal value `p(0, x0; t, x0)` with its error bound.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnDiagonalPoint {
    pub t: f64,
    pub p: f64,
    pub error_bound: f64,
}

pub fn ondiagonal_series(env: &Environment, dynamics: Dynamics, x0: Vertex, times: &[f64], cfg: &PropagationConfig) -> Result<Vec<OnDiagonalPoint>> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("times", "must be strictly increasing"));
    }
    let Some(&horizon) = times.last() else {
        return Ok(Vec::new());
    };
    let cfg = PropagationConfig::new(cfg.radius, cfg.tolerance).with_snapshots(times.to_vec());
    let snaps = kernel(env, dynamics, x0, horizon, &cfg)?;
    Ok(snaps
        .iter()
        .map(|s| OnDiagonalPoint {
            t: s.time,
            p: s.mass_at(x0),
            error_bound: s.truncation_loss + s.series_error,
        })
        .collect())
}
