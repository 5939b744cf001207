//! Acceptance criteria as canned desk-scale experiments.
//!
//! Each function runs its experiment on the given runner and returns one
//! [`CriterionReport`] with a check per clause.

use std::time::Instant;

use serde::Serialize;
use tdrw_core::analysis::{
    ballistic_speed_1d, csrw_speed_sign, gaussian_bound_report, geometric_tail_fit_pooled, halfspace_csrw_speed, halfspace_speed,
    poincare_constant, recurrence_diagnostic, volume_doubling_constant, GaussianOptions,
};
use tdrw_core::environments::{
    constant_env, halfspace_csrw, halfspace_discrete, poisson_shift_1d, poisson_times, random_cycle_schedule, zigzag_1d, HalfspaceCsrwParams,
    HalfspaceParams, PoissonShiftParams, ZigzagParams,
};
use tdrw_core::kernel::{csrw_kernel, discrete_kernel, duality_max_vsrw, vsrw_kernel, PropagationConfig};
use tdrw_core::rng::{stream_rng, Stream, StreamSeed};
use tdrw_core::walkers::{excursions, mean_and_se, off_floor_drift, return_counts, simulate_csrw, simulate_discrete, TrajectorySummary};
use tdrw_core::{Environment, Geometry, Vertex};

use crate::error::{CliError, Result};
use crate::runner::Runner;

/// Master seed of every canned experiment.
pub const SEED: u64 = 20_240_601;

pub const SPEED_SIGMAS: f64 = 3.0;
pub const FORMULA_TOL: f64 = 1e-14;
pub const KERNEL_MEAN_REL: f64 = 0.01;
pub const DIAGONAL_DROP: f64 = 1e3;
pub const RETURN_GROWTH: f64 = 1.5;
pub const TAIL_T_STAT: f64 = -3.0;
pub const SANDWICH_RATIO: f64 = 20.0;
pub const FIT_R_SQUARED: f64 = 0.95;
pub const DUALITY_TOL: f64 = 1e-9;
pub const DOUBLING_MAX: f64 = 2.0;
pub const POINCARE_SLACK: f64 = 1.01;
pub const BINOMIAL_TOL: f64 = 1e-12;
pub const POISSONIZATION_TOL: f64 = 1e-8;
pub const SCALING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    /// Human-readable threshold.
    pub target: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    /// Criterion number, or 0 for checks outside the numbered list.
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(id: u8, name: &'static str) -> Self {
        CriterionReport {
            id,
            name,
            checks: Vec::new(),
            seconds: 0.0,
        }
    }

    fn check(&mut self, label: impl Into<String>, value: f64, target: impl Into<String>, pass: bool) {
        self.checks.push(Check {
            label: label.into(),
            value,
            target: target.into(),
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// `PASS|FAIL [id] name: label=value (target); ...`
    pub fn line(&self) -> String {
        let detail: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{}={:.6e} ({})", if c.pass { "" } else { "!" }, c.label, c.value, c.target))
            .collect();
        format!(
            "{} [{}] {} ({:.1}s): {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            detail.join("; ")
        )
    }
}

fn timed(id: u8, name: &'static str, body: impl FnOnce(&mut CriterionReport) -> Result<()>) -> Result<CriterionReport> {
    let start = Instant::now();
    let mut report = CriterionReport::new(id, name);
    body(&mut report)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn canonical_zigzag() -> Result<Environment> {
    Ok(zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5)?)?)
}

/// Zigzag walk, 200 walks of 1e5 steps: batch speed within three standard
/// errors of the formula, and the formula equal to its stationary
/// decomposition.
pub fn ballistic_speed(runner: &Runner) -> Result<CriterionReport> {
    timed(1, "ballistic speed", |rep| {
        let formula = ballistic_speed_1d(0.5, 0.25, 0.5)?;
        let closed = formula.closed_form.unwrap_or(f64::NAN);
        rep.check("formula-vs-stationary", (formula.beta - closed).abs(), format!("<= {FORMULA_TOL:e}"), (formula.beta - closed).abs() <= FORMULA_TOL);
        rep.check("formula-vs-1/6", (formula.beta - 1.0 / 6.0).abs(), format!("<= {FORMULA_TOL:e}"), (formula.beta - 1.0 / 6.0).abs() <= FORMULA_TOL);
        let env = canonical_zigzag()?;
        let speeds = runner.map(200, |i| {
            let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 100_000, StreamSeed::walk(SEED, i))?;
            Ok(TrajectorySummary::of(&traj).speed()[0])
        })?;
        let (mean, se) = mean_and_se(&speeds);
        rep.check("speed", mean, format!("1/6 +- {SPEED_SIGMAS} se (se {se:.2e})"), (mean - formula.beta).abs() <= SPEED_SIGMAS * se);
        Ok(())
    })
}

/// Exact zigzag kernel to t = 2000 in a box of radius 2100: mean within 1%
/// of t/6, and `p(0,0;t,0) sqrt(t)` at 2000 below its value at 200 by 1e3.
pub fn kernel_violation(_runner: &Runner) -> Result<CriterionReport> {
    timed(2, "discrete kernel violates the lower bound", |rep| {
        let env = canonical_zigzag()?;
        let cfg = PropagationConfig::new(2100, 1e-12).with_snapshots(vec![200.0]);
        let snaps = discrete_kernel(&env, Vertex::ORIGIN, 0, 2000, &cfg)?;
        let (early, late) = (&snaps[0], &snaps[1]);
        let mean = late.mean()[0];
        let target = 2000.0 / 6.0;
        rep.check("mean", mean, format!("t/6 +- {}%", KERNEL_MEAN_REL * 100.0), (mean - target).abs() <= KERNEL_MEAN_REL * target);
        let scaled = |s: &tdrw_core::kernel::KernelSnapshot| s.mass_at(Vertex::ORIGIN) * s.time.sqrt();
        let drop = scaled(early) / scaled(late);
        rep.check("diagonal-drop", drop, format!(">= {DIAGONAL_DROP:e}"), drop >= DIAGONAL_DROP);
        Ok(())
    })
}

/// Batch CSRW speed on the Poisson-shift environment: environment draw `e`
/// uses environment stream `e`; walk `i` of draw `e` uses walk stream
/// `e * walks + i`. The standard error is taken over per-draw means.
pub fn poisson_shift_mc(runner: &Runner, eps: f64, c: f64, draws: u64, walks: u64, horizon: f64, seed: u64) -> Result<(f64, f64)> {
    let per_draw = runner.map(draws, |e| {
        let times = poisson_times(c - 1.0, horizon, &mut stream_rng(seed, Stream::Environment, e))?;
        let env = poisson_shift_1d(&PoissonShiftParams { eps, c, breakpoints: times })?;
        let mut sum = 0.0;
        for i in 0..walks {
            let traj = simulate_csrw(&env, Vertex::ORIGIN, 0.0, horizon, StreamSeed::walk(seed, e * walks + i))?;
            sum += TrajectorySummary::of(&traj).speed()[0];
        }
        Ok(sum / walks as f64)
    })?;
    Ok(mean_and_se(&per_draw))
}

/// CSRW speed signs at (0.5, 2) positive and (-0.3, 2) negative, both from
/// the formula and from 50 environment draws x 20 walks to time 1e4.
pub fn csrw_signs(runner: &Runner) -> Result<CriterionReport> {
    timed(3, "CSRW speed signs", |rep| {
        for (eps, expected) in [(0.5, 1i8), (-0.3, -1i8)] {
            let formula = csrw_speed_sign(eps, 2.0)?;
            let v = formula.per_unit_time();
            rep.check(format!("formula-sign(eps={eps})"), v, format!("sign {expected:+}"), formula.sign() == expected);
            let (mean, se) = poisson_shift_mc(runner, eps, 2.0, 50, 20, 1e4, SEED)?;
            let sign_ok = mean.signum() as i8 == expected;
            rep.check(format!("mc-speed(eps={eps})"), mean, format!("sign {expected:+}, |mean| > 3 se (se {se:.2e})"), sign_ok && mean.abs() > 3.0 * se);
        }
        Ok(())
    })
}

/// Non-lazy half-space walk, 200 walks to 1e5: median return count grows by
/// 1.5 from 1e4 to 1e5, the excursion tail is geometric, and the drift off
/// the floor is `-eps/3`.
pub fn halfspace_recurrence(runner: &Runner) -> Result<CriterionReport> {
    timed(4, "half-space recurrence", |rep| {
        let eps = 0.5;
        let env = halfspace_discrete(&HalfspaceParams::non_lazy(eps))?;
        let horizons = [1e4, 1e5];
        let walks = runner.map(200, |i| {
            let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 100_000, StreamSeed::walk(SEED, i))?;
            let (disp, time) = off_floor_drift(&traj)?;
            Ok((return_counts(&traj, &horizons), excursions(&traj)?.durations(), disp / time))
        })?;
        let counts: Vec<Vec<u64>> = walks.iter().map(|w| w.0.clone()).collect();
        let growth = recurrence_diagnostic(&horizons, &counts)?;
        rep.check(
            "median-return-growth",
            growth.growth_ratio,
            format!(">= {RETURN_GROWTH} (medians {:?})", growth.median_returns),
            growth.growth_ratio >= RETURN_GROWTH,
        );
        let durations: Vec<Vec<u64>> = walks.iter().map(|w| w.1.clone()).collect();
        let tail = geometric_tail_fit_pooled(&durations)?;
        let t_stat = tail.constant("t_stat").unwrap_or(f64::NAN);
        let slope = tail.constant("slope").unwrap_or(f64::NAN);
        rep.check("tail-t-stat", t_stat, format!("slope < 0 (slope {slope:.3e}), t < {TAIL_T_STAT}"), slope < 0.0 && t_stat < TAIL_T_STAT);
        let drifts: Vec<f64> = walks.iter().map(|w| w.2).collect();
        let (mean, se) = mean_and_se(&drifts);
        let target = halfspace_speed(eps, 0.0, 0.0)?.beta;
        rep.check("vertical-drift", mean, format!("-eps/3 +- {SPEED_SIGMAS} se (se {se:.2e})"), (mean - target).abs() <= SPEED_SIGMAS * se);
        Ok(())
    })
}

/// Zigzag VSRW kernel at t = 100 .. 1600: the on-diagonal product stays in
/// a band of ratio 20, and `ln p` is linear in `d^2/t` with R^2 >= 0.95.
pub fn vsrw_sandwich(_runner: &Runner) -> Result<CriterionReport> {
    timed(5, "VSRW Gaussian sandwich", |rep| {
        let env = canonical_zigzag()?;
        let times = [100.0, 200.0, 400.0, 800.0, 1600.0];
        let cfg = PropagationConfig::new(5600, 1e-12).with_snapshots(times[..4].to_vec());
        let snaps = vsrw_kernel(&env, Vertex::ORIGIN, 1600.0, &cfg)?;
        let volume = |r: u64| Geometry::Line.ball_volume(Vertex::ORIGIN, r) as f64;
        let products: Vec<f64> = snaps.iter().map(|s| s.mass_at(Vertex::ORIGIN) * volume(s.time.sqrt().floor() as u64)).collect();
        let (lo, hi) = products.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        rep.check("diagonal-band", hi / lo, format!("<= {SANDWICH_RATIO}"), hi / lo <= SANDWICH_RATIO);
        let (upper, _) = gaussian_bound_report(&snaps, volume, &GaussianOptions::default())?;
        let r2 = upper.constant("r_squared").unwrap_or(f64::NAN);
        rep.check("offdiagonal-r2", r2, format!(">= {FIT_R_SQUARED}"), r2 >= FIT_R_SQUARED);
        Ok(())
    })
}

/// VSRW duality on a seeded random 5-segment schedule on the 20-cycle.
pub fn duality(_runner: &Runner) -> Result<CriterionReport> {
    timed(6, "VSRW duality", |rep| {
        let env = random_cycle_schedule(20, 5, 10.0, 0.25, &mut stream_rng(SEED, Stream::Environment, 0))?;
        let worst = duality_max_vsrw(&env, 10.0, &PropagationConfig::new(1, 1e-14))?;
        rep.check("max-difference", worst, format!("<= {DUALITY_TOL:e}"), worst <= DUALITY_TOL);
        Ok(())
    })
}

/// Volume doubling on `Z` and time-uniform Poincaré constants for the
/// zigzag: the two time parities differ by at most the ellipticity ratio
/// `(1+eps)/(1-eps)` (with 1% slack), per radius and over all radii.
pub fn stability(runner: &Runner) -> Result<CriterionReport> {
    timed(7, "volume doubling and Poincare stability", |rep| {
        let c1 = volume_doubling_constant(Geometry::Line, Vertex::ORIGIN, 1 << 12)?.constant("C1").unwrap_or(f64::NAN);
        rep.check("doubling-C1", c1, format!("<= {DOUBLING_MAX}"), c1 <= DOUBLING_MAX);
        let eps = 0.5;
        let bound = (1.0 + eps) / (1.0 - eps) * POINCARE_SLACK;
        let env = canonical_zigzag()?;
        let radii = [4u64, 8, 16, 32];
        let constants = runner.map(8, |k| {
            let (r, t) = (radii[(k / 2) as usize], (k % 2) as f64);
            poincare_constant(&env, t, Vertex::ORIGIN, r)?
                .constant("C2")
                .ok_or_else(|| CliError::invalid("C2", "missing from report"))
        })?;
        for (i, &r) in radii.iter().enumerate() {
            let (a, b) = (constants[2 * i], constants[2 * i + 1]);
            let ratio = a.max(b) / a.min(b);
            rep.check(format!("poincare-ratio(r={r})"), ratio, format!("<= {bound:.4}"), ratio <= bound);
        }
        let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        rep.check("poincare-ratio(all)", hi / lo, format!("<= {bound:.4}"), hi / lo <= bound);
        Ok(())
    })
}

fn binomial_law(n: u64, y: i64) -> f64 {
    if (n as i64 + y) % 2 != 0 || y.unsigned_abs() > n {
        return 0.0;
    }
    let k = ((n as i64 + y) / 2) as u64;
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64 / 2f64.powi(n as i32)
}

/// `sum_k Pois(t)(k) * (law of k simple steps)(y)` by convolution.
fn poissonized_law(t: f64, kmax: usize, ys: std::ops::RangeInclusive<i64>) -> Vec<f64> {
    let width = 2 * kmax + 1;
    let mut law = vec![0.0; width];
    law[kmax] = 1.0;
    let mut weight = (-t).exp();
    let mut out = vec![0.0; width];
    for k in 0..=kmax {
        for (o, l) in out.iter_mut().zip(&law) {
            *o += weight * l;
        }
        let mut next = vec![0.0; width];
        for i in 1..width - 1 {
            next[i] = 0.5 * (law[i - 1] + law[i + 1]);
        }
        law = next;
        weight *= t / (k + 1) as f64;
    }
    ys.map(|y| out[(kmax as i64 + y) as usize]).collect()
}

/// Kernels against independent oracles: binomial path counts, the
/// Poissonized simple walk, and the constant-multiple time change.
pub fn oracles(_runner: &Runner) -> Result<CriterionReport> {
    timed(8, "oracle equivalence", |rep| {
        let unit = constant_env(Geometry::Line, 1.0)?;
        let snap = discrete_kernel(&unit, Vertex::ORIGIN, 0, 20, &PropagationConfig::new(20, 1e-12))?.remove(0);
        let worst = (-20i64..=20).map(|y| (snap.mass_at(Vertex::line(y)) - binomial_law(20, y)).abs()).fold(0.0, f64::max);
        rep.check("binomial(t=20)", worst, format!("<= {BINOMIAL_TOL:e}"), worst <= BINOMIAL_TOL);

        let snap = csrw_kernel(&unit, Vertex::ORIGIN, 50.0, &PropagationConfig::new(200, 1e-12))?.remove(0);
        let oracle = poissonized_law(50.0, 200, -200..=200);
        let worst = (-200i64..=200)
            .zip(&oracle)
            .map(|(y, o)| (snap.mass_at(Vertex::line(y)) - o).abs())
            .fold(0.0, f64::max);
        rep.check("poissonization(T=50)", worst, format!("<= {POISSONIZATION_TOL:e}"), worst <= POISSONIZATION_TOL);

        let cfg = PropagationConfig::new(150, 1e-13);
        let fast = vsrw_kernel(&constant_env(Geometry::Line, 3.0)?, Vertex::ORIGIN, 10.0, &cfg)?.remove(0);
        let slow = vsrw_kernel(&unit, Vertex::ORIGIN, 30.0, &cfg)?.remove(0);
        let worst = fast.mass.iter().zip(&slow.mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rep.check("time-change(M=3)", worst, format!("<= {SCALING_TOL:e}"), worst <= SCALING_TOL);
        Ok(())
    })
}

/// Half-space CSRW with environment clock `c - 1`: the formula drift off the
/// floor is negative, the simulated drift matches it, and floor returns keep
/// accumulating.
pub fn halfspace_csrw_recurrence(runner: &Runner) -> Result<CriterionReport> {
    timed(0, "half-space CSRW recurrence", |rep| {
        let (eps, c, horizon) = (0.5, 2.0, 2000.0);
        let formula = halfspace_csrw_speed(eps, c)?.per_unit_time();
        rep.check("formula-drift", formula, "< 0", formula < 0.0);
        let (draws, walks) = (40u64, 5u64);
        let per_walk = runner.map(draws * walks, |k| {
            let e = k / walks;
            let times = poisson_times(c - 1.0, horizon, &mut stream_rng(SEED, Stream::Environment, e))?;
            let env = halfspace_csrw(&HalfspaceCsrwParams { eps, breakpoints: times })?;
            let traj = simulate_csrw(&env, Vertex::ORIGIN, 0.0, horizon, StreamSeed::walk(SEED, k))?;
            let (disp, time) = off_floor_drift(&traj)?;
            let floor = excursions(&traj)?;
            let arrivals = |h: f64| floor.sigma_times[1..].partition_point(|&s| s <= h) as u64;
            Ok((disp / time, vec![arrivals(horizon / 10.0), arrivals(horizon)]))
        })?;
        let (mean, se) = mean_and_se(&per_walk.iter().map(|w| w.0).collect::<Vec<_>>());
        rep.check("mc-drift", mean, format!("< 0, |mean| > 3 se (se {se:.2e})"), mean < 0.0 && mean.abs() > 3.0 * se);
        rep.check("mc-drift-vs-formula", mean, format!("formula +- {SPEED_SIGMAS} se"), (mean - formula).abs() <= SPEED_SIGMAS * se);
        let counts: Vec<Vec<u64>> = per_walk.into_iter().map(|w| w.1).collect();
        let growth = recurrence_diagnostic(&[horizon / 10.0, horizon], &counts)?;
        rep.check("floor-return-growth", growth.growth_ratio, format!(">= {RETURN_GROWTH}"), growth.growth_ratio >= RETURN_GROWTH);
        Ok(())
    })
}

pub type CriterionFn = fn(&Runner) -> Result<CriterionReport>;

/// Acceptance criteria 1 to 8 in order.
pub const ACCEPTANCE: [CriterionFn; 8] = [ballistic_speed, kernel_violation, csrw_signs, halfspace_recurrence, vsrw_sandwich, duality, stability, oracles];

/// Criteria run by `reproduce <id>`.
pub fn for_claim(id: &str) -> Result<Vec<CriterionFn>> {
    Ok(match id {
        "2.1i" => vec![ballistic_speed, kernel_violation],
        "2.1ii" => vec![csrw_signs],
        "2.2i" => vec![halfspace_recurrence],
        "2.2ii" => vec![halfspace_csrw_recurrence],
        "thm1.4-vsrw" => vec![vsrw_sandwich, duality, stability, oracles],
        other => return Err(CliError::UnknownId(other.to_string())),
    })
}
