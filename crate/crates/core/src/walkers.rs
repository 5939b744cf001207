//! Trajectory sampling for the three dynamics and the statistics extracted
//! from trajectories: state traces, excursions to the floor, return counts
//! and batch speeds.

use alloc::string::ToString;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{Edge, Environment, Geometry, Vertex, WeightRule};
use crate::rng::StreamSeed;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Unit-time steps with law `P^(t)(x, .)`.
    Discrete,
    /// Rate-1 exponential holding times.
    Csrw,
    /// Holding rate `mu^(t)(x)`.
    Vsrw,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub vertex: Vertex,
}

/// A sampled path. For discrete dynamics there is one event per unit step
/// (stays included); for continuous dynamics one event per jump, self-jumps
/// included. The first event is always `(t0, x0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dynamics: Dynamics,
    pub geometry: Geometry,
    pub start: Vertex,
    pub events: Vec<Event>,
    /// Time at which observation stopped (last event time for discrete walks).
    pub end_time: f64,
    pub seed: StreamSeed,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.events[0].time
    }

    pub fn final_vertex(&self) -> Vertex {
        self.events.last().unwrap().vertex
    }

    pub fn elapsed(&self) -> f64 {
        self.end_time - self.start_time()
    }

    /// Position at time `t` (right-continuous path).
    pub fn position_at(&self, t: f64) -> Vertex {
        let idx = self.events.partition_point(|e| e.time <= t);
        self.events[idx.saturating_sub(1)].vertex
    }
}

/// Step-by-step sampler for the discrete-time walk.
pub struct DiscreteWalker<'a> {
    env: &'a Environment,
    pub time: u64,
    pub position: Vertex,
}

impl<'a> DiscreteWalker<'a> {
    pub fn new(env: &'a Environment, x0: Vertex, t0: u64) -> Result<Self> {
        env.geometry.check(x0)?;
        Ok(DiscreteWalker {
            env,
            time: t0,
            position: x0,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vertex {
        let star = self.env.star_in_segment(self.env.segment_at(self.time as f64), self.position);
        self.position = star.sample(rng.random::<f64>());
        self.time += 1;
        self.position
    }
}

pub fn simulate_discrete(env: &Environment, x0: Vertex, t0: u64, steps: u64, seed: StreamSeed) -> Result<Trajectory> {
    let mut rng = seed.rng();
    let mut walker = DiscreteWalker::new(env, x0, t0)?;
    let mut events = Vec::with_capacity(steps as usize + 1);
    events.push(Event {
        time: t0 as f64,
        vertex: x0,
    });
    for _ in 0..steps {
        let v = walker.step(&mut rng);
        events.push(Event {
            time: walker.time as f64,
            vertex: v,
        });
    }
    Ok(Trajectory {
        dynamics: Dynamics::Discrete,
        geometry: env.geometry,
        start: x0,
        events,
        end_time: (t0 + steps) as f64,
        seed,
    })
}

fn check_span(t0: f64, horizon: f64) -> Result<()> {
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(domain("t0", "must be finite and nonnegative"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", "must be finite and nonnegative"));
    }
    Ok(())
}

/// CSRW on `[t0, t0 + horizon]`: rate-1 Poisson jump clock, targets drawn
/// from the schedule value at the jump instant.
pub fn simulate_csrw(env: &Environment, x0: Vertex, t0: f64, horizon: f64, seed: StreamSeed) -> Result<Trajectory> {
    check_span(t0, horizon)?;
    env.geometry.check(x0)?;
    let mut rng = seed.rng();
    let end = t0 + horizon;
    let mut events = alloc::vec![Event { time: t0, vertex: x0 }];
    let (mut t, mut x) = (t0, x0);
    loop {
        let hold: f64 = Exp1.sample(&mut rng);
        t += hold;
        if t > end {
            break;
        }
        x = env.star(t, x).sample(rng.random::<f64>());
        events.push(Event { time: t, vertex: x });
    }
    Ok(Trajectory {
        dynamics: Dynamics::Csrw,
        geometry: env.geometry,
        start: x0,
        events,
        end_time: end,
        seed,
    })
}

/// Probability that a thinning proposal at `(t, x)` is accepted:
/// `mu^(t)(x) / Lambda`, with `Lambda` the rate bound of the segment.
pub fn thinning_acceptance(env: &Environment, t: f64, x: Vertex) -> f64 {
    let seg = env.segment_at(t);
    env.star_in_segment(seg, x).total / env.rate_bound(seg)
}

/// VSRW on `[t0, t0 + horizon]` by thinning a rate-`Lambda` proposal stream;
/// `Lambda` is recomputed at every segment boundary.
pub fn simulate_vsrw(env: &Environment, x0: Vertex, t0: f64, horizon: f64, seed: StreamSeed) -> Result<Trajectory> {
    check_span(t0, horizon)?;
    env.geometry.check(x0)?;
    let mut rng = seed.rng();
    let end = t0 + horizon;
    let mut events = alloc::vec![Event { time: t0, vertex: x0 }];
    let (mut t, mut x) = (t0, x0);
    'segments: while t < end {
        let seg = env.segment_at(t);
        let seg_end = env.breakpoints().segment_end(seg);
        let bound = env.rate_bound(seg);
        let proposals = Exp::new(bound).map_err(|_| Error::Unsupported("zero rate bound".to_string()))?;
        loop {
            let cand = t + proposals.sample(&mut rng);
            if cand >= seg_end {
                // memoryless: restart the clock at the boundary
                t = seg_end;
                continue 'segments;
            }
            if cand > end {
                break 'segments;
            }
            t = cand;
            let star = env.star_in_segment(seg, x);
            if rng.random::<f64>() * bound < star.total {
                x = star.sample(rng.random::<f64>());
                events.push(Event { time: t, vertex: x });
            }
        }
    }
    Ok(Trajectory {
        dynamics: Dynamics::Vsrw,
        geometry: env.geometry,
        start: x0,
        events,
        end_time: end,
        seed,
    })
}

/// Local environment state of a walker.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateLabel {
    /// Right (or upper) edge carries `1 + eps`.
    APlus,
    /// Right (or upper) edge carries `1 - eps`.
    AMinus,
    /// Left/right conductances `(1+eps, 1-eps)`.
    A1,
    /// Left/right conductances `(1-eps, 1)`.
    A2,
    /// Left/right conductances `(1, 1+eps)`.
    A3,
}

impl StateLabel {
    pub const ALL: [StateLabel; 5] = [StateLabel::APlus, StateLabel::AMinus, StateLabel::A1, StateLabel::A2, StateLabel::A3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            StateLabel::APlus => "A+",
            StateLabel::AMinus => "A-",
            StateLabel::A1 => "A1",
            StateLabel::A2 => "A2",
            StateLabel::A3 => "A3",
        }
    }
}

/// Label of site `x` at time `t`, read off the conductances.
pub fn classify_state(env: &Environment, t: f64, x: Vertex) -> Result<StateLabel> {
    let seg = env.segment_at(t);
    let rule = env.rule();
    let edge_up = |axis: usize| env.segment_edge_weight(seg, Edge { base: x, axis });
    match rule {
        WeightRule::Zigzag { .. } => Ok(if edge_up(0) > 1.0 { StateLabel::APlus } else { StateLabel::AMinus }),
        WeightRule::HalfspaceDiscrete { .. } | WeightRule::HalfspaceCsrw { .. } => {
            Ok(if edge_up(2) > 1.0 { StateLabel::APlus } else { StateLabel::AMinus })
        }
        WeightRule::PoissonShift { eps } if *eps != 0.0 => {
            let right = edge_up(0);
            Ok(if right == 1.0 - eps {
                StateLabel::A1
            } else if right == 1.0 {
                StateLabel::A2
            } else {
                StateLabel::A3
            })
        }
        _ => Err(Error::Unsupported("state classification needs a zigzag, Poisson-shift or half-space environment".to_string())),
    }
}

/// State labels along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTrace {
    pub epochs: Vec<(f64, StateLabel)>,
    /// Number of epochs spent in each label, indexed by [`StateLabel::index`].
    pub occupation: [u64; 5],
    /// Times at which the label changed.
    pub change_times: Vec<f64>,
}

impl StateTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn occupation_fraction(&self, label: StateLabel) -> f64 {
        self.occupation[label.index()] as f64 / self.epochs.len() as f64
    }

    /// Counts of consecutive label pairs `(from, to)`.
    pub fn transition_counts(&self) -> [[u64; 5]; 5] {
        let mut counts = [[0u64; 5]; 5];
        for w in self.epochs.windows(2) {
            counts[w[0].1.index()][w[1].1.index()] += 1;
        }
        counts
    }

    /// Empirical `q(from, to)` and its binomial standard error.
    pub fn empirical_transition(&self, from: StateLabel, to: StateLabel) -> (f64, f64) {
        let counts = self.transition_counts();
        let row: u64 = counts[from.index()].iter().sum();
        if row == 0 {
            return (f64::NAN, f64::NAN);
        }
        let p = counts[from.index()][to.index()] as f64 / row as f64;
        (p, (p * (1.0 - p) / row as f64).sqrt())
    }
}

/// Labels every epoch of `traj`. For continuous dynamics the epochs are the
/// jump times together with the schedule breakpoints crossed in between.
pub fn classify_states(env: &Environment, traj: &Trajectory) -> Result<StateTrace> {
    let mut epochs = Vec::with_capacity(traj.events.len());
    match traj.dynamics {
        Dynamics::Discrete => {
            for e in &traj.events {
                epochs.push((e.time, classify_state(env, e.time, e.vertex)?));
            }
        }
        Dynamics::Csrw | Dynamics::Vsrw => {
            for (i, e) in traj.events.iter().enumerate() {
                epochs.push((e.time, classify_state(env, e.time, e.vertex)?));
                let next = traj.events.get(i + 1).map_or(traj.end_time, |n| n.time);
                for tau in env.breakpoints().interior(e.time, next) {
                    epochs.push((tau, classify_state(env, tau, e.vertex)?));
                }
            }
        }
    }
    let mut occupation = [0u64; 5];
    let mut change_times = Vec::new();
    for (i, &(t, label)) in epochs.iter().enumerate() {
        occupation[label.index()] += 1;
        if i > 0 && epochs[i - 1].1 != label {
            change_times.push(t);
        }
    }
    Ok(StateTrace {
        epochs,
        occupation,
        change_times,
    })
}

/// Returns of the vertical coordinate to the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    /// Epoch indices `sigma_n`; `sigma_0 = 0`.
    pub sigma: Vec<usize>,
    /// Times of the epochs `sigma_n`.
    pub sigma_times: Vec<f64>,
    /// Floor positions `M_n`.
    pub floor_positions: Vec<[i64; 2]>,
    /// `D_n = M_{n+1} - M_n`.
    pub increments: Vec<[i64; 2]>,
    /// Vertical path `R` per epoch.
    pub vertical: Vec<i64>,
}

impl ExcursionRecord {
    /// `sigma_{n+1} - sigma_n` in epochs, one per completed excursion.
    pub fn durations(&self) -> Vec<u64> {
        self.sigma.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }
}

pub fn excursions(traj: &Trajectory) -> Result<ExcursionRecord> {
    if traj.geometry != Geometry::HalfSpace {
        return Err(Error::Unsupported("excursions need a half-space trajectory".to_string()));
    }
    let vertical: Vec<i64> = traj.events.iter().map(|e| e.vertex.z()).collect();
    let mut sigma = alloc::vec![0usize];
    sigma.extend((1..vertical.len()).filter(|&i| vertical[i] == 0));
    let sigma_times = sigma.iter().map(|&i| traj.events[i].time).collect();
    let floor_positions: Vec<[i64; 2]> = sigma
        .iter()
        .map(|&i| {
            let v = traj.events[i].vertex;
            [v.x(), v.y()]
        })
        .collect();
    let increments = floor_positions.windows(2).map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
    Ok(ExcursionRecord {
        sigma,
        sigma_times,
        floor_positions,
        increments,
        vertical,
    })
}

/// Vertical displacement accumulated over epochs that start above the
/// floor, and the time spent in those epochs. Their ratio estimates the
/// drift away from the floor.
pub fn off_floor_drift(traj: &Trajectory) -> Result<(f64, f64)> {
    if traj.geometry != Geometry::HalfSpace {
        return Err(Error::Unsupported("off-floor drift needs a half-space trajectory".to_string()));
    }
    let mut displacement = 0.0;
    let mut time = 0.0;
    for (i, e) in traj.events.iter().enumerate() {
        if e.vertex.z() == 0 {
            continue;
        }
        match traj.events.get(i + 1) {
            Some(next) => {
                displacement += (next.vertex.z() - e.vertex.z()) as f64;
                time += next.time - e.time;
            }
            None => time += traj.end_time - e.time,
        }
    }
    Ok((displacement, time))
}

/// Visits to the start after the initial epoch with elapsed time at most
/// each horizon. Discrete walks count every epoch spent at the start;
/// continuous walks count arrivals (self-jumps excluded).
pub fn return_counts(traj: &Trajectory, horizons: &[f64]) -> Vec<u64> {
    let t0 = traj.start_time();
    let mut visit_times = Vec::new();
    for (i, e) in traj.events.iter().enumerate().skip(1) {
        let is_visit = e.vertex == traj.start
            && match traj.dynamics {
                Dynamics::Discrete => true,
                _ => traj.events[i - 1].vertex != traj.start,
            };
        if is_visit {
            visit_times.push(e.time - t0);
        }
    }
    horizons.iter().map(|&h| visit_times.partition_point(|&s| s <= h) as u64).collect()
}

/// Per-trajectory reductions used by batch statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub displacement: [f64; 3],
    pub elapsed: f64,
    pub returns: u64,
    /// Largest graph distance from the start.
    pub max_excursion: u64,
    pub jumps: u64,
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory) -> Self {
        let last = traj.final_vertex();
        let mut displacement = [0.0; 3];
        for (a, d) in displacement.iter_mut().enumerate() {
            *d = (last.0[a] - traj.start.0[a]) as f64;
        }
        TrajectorySummary {
            displacement,
            elapsed: traj.elapsed(),
            returns: return_counts(traj, &[f64::INFINITY])[0],
            max_excursion: traj.events.iter().map(|e| traj.geometry.distance(traj.start, e.vertex)).max().unwrap_or(0),
            jumps: traj.events.len() as u64 - 1,
        }
    }

    pub fn speed(&self) -> [f64; 3] {
        self.displacement.map(|d| d / self.elapsed)
    }
}

/// Batch means with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trajectories: usize,
    pub speed_mean: [f64; 3],
    pub speed_se: [f64; 3],
    pub mean_returns: f64,
    pub median_returns: f64,
    pub max_excursion: u64,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summarize(summaries: &[TrajectorySummary]) -> Result<BatchSummary> {
    if summaries.is_empty() {
        return Err(domain("trajs", "batch must be nonempty"));
    }
    let mut speed_mean = [0.0; 3];
    let mut speed_se = [0.0; 3];
    for a in 0..3 {
        let speeds: Vec<f64> = summaries.iter().map(|s| s.speed()[a]).collect();
        (speed_mean[a], speed_se[a]) = mean_and_se(&speeds);
    }
    let returns: Vec<f64> = summaries.iter().map(|s| s.returns as f64).collect();
    Ok(BatchSummary {
        trajectories: summaries.len(),
        speed_mean,
        speed_se,
        mean_returns: returns.iter().sum::<f64>() / returns.len() as f64,
        median_returns: median(&returns),
        max_excursion: summaries.iter().map(|s| s.max_excursion).max().unwrap_or(0),
    })
}

pub fn trajectory_stats(trajs: &[Trajectory]) -> Result<BatchSummary> {
    if let Some(first) = trajs.first() {
        if trajs.iter().any(|t| t.dynamics != first.dynamics) {
            return Err(domain("trajs", "batch must share one dynamics"));
        }
    }
    let summaries: Vec<TrajectorySummary> = trajs.iter().map(TrajectorySummary::of).collect();
    summarize(&summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{constant_env, halfspace_discrete, zigzag_1d, HalfspaceParams, ZigzagParams};

    fn nonlazy_zigzag() -> Environment {
        zigzag_1d(&ZigzagParams {
            eps: 0.5,
            b: 0.0,
            b_prime: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn non_lazy_zigzag_drifts_at_eps() {
        let env = nonlazy_zigzag();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 100_000, StreamSeed::walk(5, 0)).unwrap();
        let steps: Vec<f64> = traj.events.windows(2).map(|w| (w[1].vertex.x() - w[0].vertex.x()) as f64).collect();
        assert!(steps.iter().all(|s| s.abs() == 1.0));
        let (mean, se) = mean_and_se(&steps);
        // Bernoulli oracle: (1+eps)/2 - (1-eps)/2 = eps
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn off_floor_drift_of_non_lazy_halfspace() {
        let env = halfspace_discrete(&HalfspaceParams::non_lazy(0.5)).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 200_000, StreamSeed::walk(2, 0)).unwrap();
        let (disp, time) = off_floor_drift(&traj).unwrap();
        // up (1-eps)/6, down (1+eps)/6 away from the floor
        assert!((disp / time + 0.5 / 3.0).abs() < 0.01, "{}", disp / time);
        assert!(off_floor_drift(&simulate_discrete(&nonlazy_zigzag(), Vertex::ORIGIN, 0, 3, StreamSeed::walk(0, 0)).unwrap()).is_err());
    }

    #[test]
    fn non_lazy_zigzag_never_leaves_a_plus() {
        let env = nonlazy_zigzag();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 5_000, StreamSeed::walk(9, 3)).unwrap();
        let trace = classify_states(&env, &traj).unwrap();
        assert_eq!(trace.occupation[StateLabel::APlus.index()], trace.len() as u64);
        assert!(trace.change_times.is_empty());
    }

    #[test]
    fn stay_put_flips_state() {
        let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
        assert_eq!(classify_state(&env, 0.0, Vertex::ORIGIN).unwrap(), StateLabel::APlus);
        assert_eq!(classify_state(&env, 1.0, Vertex::ORIGIN).unwrap(), StateLabel::AMinus);
        // a move keeps the state
        assert_eq!(classify_state(&env, 1.0, Vertex::line(1)).unwrap(), StateLabel::APlus);
    }

    #[test]
    fn symmetric_walk_has_no_drift() {
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 100_000, StreamSeed::walk(1, 0)).unwrap();
        let steps: Vec<f64> = traj.events.windows(2).map(|w| (w[1].vertex.x() - w[0].vertex.x()) as f64).collect();
        let (mean, se) = mean_and_se(&steps);
        assert!(mean.abs() < 3.0 * se);
    }

    #[test]
    fn adjacency_along_paths() {
        let env = halfspace_discrete(&HalfspaceParams::from_laziness(0.5, 0.25, 0.125).unwrap()).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 20_000, StreamSeed::walk(2, 0)).unwrap();
        for w in traj.events.windows(2) {
            let (a, b) = (w[0].vertex, w[1].vertex);
            assert!(a == b || env.geometry.edge(a, b).is_some());
            assert!(b.z() >= 0);
        }
    }

    #[test]
    fn csrw_jump_count_is_poisson() {
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        let traj = simulate_csrw(&env, Vertex::ORIGIN, 0.0, 10_000.0, StreamSeed::walk(4, 0)).unwrap();
        let jumps = (traj.events.len() - 1) as f64;
        assert!((jumps - 1e4).abs() < 3.0 * 100.0, "jumps {jumps}");
        assert!(traj.events.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn csrw_holding_uncorrelated_with_step_sign() {
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        let traj = simulate_csrw(&env, Vertex::ORIGIN, 0.0, 20_000.0, StreamSeed::walk(8, 0)).unwrap();
        let pairs: Vec<(f64, f64)> = traj
            .events
            .windows(2)
            .map(|w| (w[1].time - w[0].time, (w[1].vertex.x() - w[0].vertex.x()) as f64))
            .collect();
        let n = pairs.len() as f64;
        let mh = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let ms = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = pairs.iter().map(|p| (p.0 - mh) * (p.1 - ms)).sum::<f64>() / n;
        let sh = (pairs.iter().map(|p| (p.0 - mh).powi(2)).sum::<f64>() / n).sqrt();
        let ss = (pairs.iter().map(|p| (p.1 - ms).powi(2)).sum::<f64>() / n).sqrt();
        let corr = cov / (sh * ss);
        // null standard error is 1/sqrt(n)
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr {corr}");
    }

    #[test]
    fn vsrw_holding_mean_matches_total_rate() {
        let w = 1.5;
        let env = constant_env(Geometry::Line, w).unwrap();
        let traj = simulate_vsrw(&env, Vertex::ORIGIN, 0.0, 4_000.0, StreamSeed::walk(6, 0)).unwrap();
        let holds: Vec<f64> = traj.events.windows(2).map(|w| w[1].time - w[0].time).collect();
        assert!(holds.len() > 10_000);
        let (mean, se) = mean_and_se(&holds);
        assert!((mean - 1.0 / (2.0 * w)).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn thinning_acceptance_is_mu_over_bound() {
        let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
        let x = Vertex::line(3);
        for t in [0.0, 1.0, 2.5] {
            let expect = env.mu_total(t, x).unwrap() / env.rate_bound(env.segment_at(t));
            assert_eq!(thinning_acceptance(&env, t, x), expect);
            assert!(thinning_acceptance(&env, t, x) <= 1.0);
        }
    }

    #[test]
    fn reproducible_from_seed() {
        let env = nonlazy_zigzag();
        let a = simulate_vsrw(&env, Vertex::ORIGIN, 0.0, 50.0, StreamSeed::walk(1, 2)).unwrap();
        let b = simulate_vsrw(&env, Vertex::ORIGIN, 0.0, 50.0, StreamSeed::walk(1, 2)).unwrap();
        assert_eq!(a, b);
        let s1 = trajectory_stats(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s1.speed_se[0], 0.0);
        assert_eq!(s1.trajectories, 2);
    }

    #[test]
    fn excursions_on_floor_only_path() {
        let events = (0..5)
            .map(|t| Event {
                time: t as f64,
                vertex: Vertex::space(2, -1, 0),
            })
            .collect();
        let traj = Trajectory {
            dynamics: Dynamics::Discrete,
            geometry: Geometry::HalfSpace,
            start: Vertex::space(2, -1, 0),
            events,
            end_time: 4.0,
            seed: StreamSeed::walk(0, 0),
        };
        let rec = excursions(&traj).unwrap();
        assert_eq!(rec.sigma, alloc::vec![0, 1, 2, 3, 4]);
        assert!(rec.increments.iter().all(|d| *d == [0, 0]));
        assert_eq!(rec.durations(), alloc::vec![1, 1, 1, 1]);
    }

    #[test]
    fn excursion_invariants() {
        let env = halfspace_discrete(&HalfspaceParams::non_lazy(0.5)).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 10_000, StreamSeed::walk(3, 1)).unwrap();
        let rec = excursions(&traj).unwrap();
        assert_eq!(rec.sigma[0], 0);
        assert!(rec.sigma.windows(2).all(|w| w[1] > w[0]));
        assert!(rec.sigma.iter().skip(1).all(|&i| rec.vertical[i] == 0));
        assert_eq!(rec.increments.len(), rec.sigma.len() - 1);
    }

    #[test]
    fn excursions_reject_line() {
        let env = nonlazy_zigzag();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 10, StreamSeed::walk(0, 0)).unwrap();
        assert!(excursions(&traj).is_err());
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(trajectory_stats(&[]).is_err());
    }

    #[test]
    fn return_counts_by_horizon() {
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 10_000, StreamSeed::walk(12, 0)).unwrap();
        let counts = return_counts(&traj, &[10.0, 100.0, 10_000.0]);
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        let brute = traj.events.iter().skip(1).filter(|e| e.vertex == Vertex::ORIGIN).count() as u64;
        assert_eq!(counts[2], brute);
    }

    #[test]
    fn unsupported_family_for_classification() {
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        assert!(matches!(classify_state(&env, 0.0, Vertex::ORIGIN), Err(Error::Unsupported(_))));
    }
}
