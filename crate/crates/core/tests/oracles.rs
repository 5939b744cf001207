//! Kernel and chain results checked against independently computed values.

use tdrw_core::analysis::{ballistic_speed_1d, decay_exponent, stationary, two_state_chain};
use tdrw_core::environments::{constant_env, piecewise, poisson_shift_1d, poisson_times, random_cycle_schedule, zigzag_1d, PoissonShiftParams, ZigzagParams};
use tdrw_core::graph::SegmentWeights;
use tdrw_core::kernel::{csrw_kernel, discrete_kernel, duality_max_vsrw, ondiagonal_series, vsrw_kernel, PropagationConfig};
use tdrw_core::rng::{stream_rng, Stream, StreamSeed};
use tdrw_core::walkers::{classify_states, mean_and_se, simulate_discrete, Dynamics, StateLabel, TrajectorySummary};
use tdrw_core::{Geometry, Vertex};

fn binomial(n: u64, k: u64) -> f64 {
    // exact in u128 for the sizes used here
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// k-step law of the simple symmetric walk, by repeated convolution.
fn srw_laws(kmax: usize) -> Vec<Vec<f64>> {
    let width = 2 * kmax + 1;
    let mut laws = vec![vec![0.0; width]];
    laws[0][kmax] = 1.0;
    for k in 1..=kmax {
        let prev = &laws[k - 1];
        let mut next = vec![0.0; width];
        for i in 1..width - 1 {
            next[i] = 0.5 * (prev[i - 1] + prev[i + 1]);
        }
        laws.push(next);
    }
    laws
}

fn poisson_pmf(lambda: f64, kmax: usize) -> Vec<f64> {
    let mut w = vec![(-lambda).exp()];
    for k in 1..=kmax {
        let last = w[k - 1];
        w.push(last * lambda / k as f64);
    }
    w
}

#[test]
fn discrete_matches_binomial_path_counts() {
    let env = constant_env(Geometry::Line, 1.0).unwrap();
    let snap = discrete_kernel(&env, Vertex::ORIGIN, 0, 20, &PropagationConfig::new(20, 1e-12)).unwrap().pop().unwrap();
    assert_eq!(snap.truncation_loss, 0.0);
    for y in -20i64..=20 {
        let expect = if (20 + y) % 2 == 0 { binomial(20, ((20 + y) / 2) as u64) / 2f64.powi(20) } else { 0.0 };
        assert!((snap.mass_at(Vertex::line(y)) - expect).abs() <= 1e-12, "y = {y}");
    }
}

#[test]
fn csrw_matches_poissonization() {
    let env = constant_env(Geometry::Line, 1.0).unwrap();
    let t = 50.0;
    let snap = csrw_kernel(&env, Vertex::ORIGIN, t, &PropagationConfig::new(160, 1e-12)).unwrap().pop().unwrap();
    let kmax = 160;
    let laws = srw_laws(kmax);
    let w = poisson_pmf(t, kmax);
    for y in -60i64..=60 {
        let expect: f64 = (0..=kmax).map(|k| w[k] * laws[k][(kmax as i64 + y) as usize]).sum();
        assert!((snap.mass_at(Vertex::line(y)) - expect).abs() <= 1e-8, "y = {y}");
    }
}

#[test]
fn vsrw_runs_twice_as_fast_as_csrw_on_unit_weights() {
    let env = constant_env(Geometry::Line, 1.0).unwrap();
    let cfg = PropagationConfig::new(120, 1e-12);
    let v = vsrw_kernel(&env, Vertex::ORIGIN, 15.0, &cfg).unwrap().pop().unwrap();
    let c = csrw_kernel(&env, Vertex::ORIGIN, 30.0, &cfg).unwrap().pop().unwrap();
    let worst = v.mass.iter().zip(&c.mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn constant_multiple_is_a_time_change() {
    let m = 3.0;
    let cfg = PropagationConfig::new(150, 1e-13);
    let fast = constant_env(Geometry::Line, m).unwrap();
    let slow = constant_env(Geometry::Line, 1.0).unwrap();
    let a = vsrw_kernel(&fast, Vertex::ORIGIN, 10.0, &cfg).unwrap().pop().unwrap();
    let b = vsrw_kernel(&slow, Vertex::ORIGIN, 30.0, &cfg).unwrap().pop().unwrap();
    let worst = a.mass.iter().zip(&b.mass).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn cycle_kernel_is_matrix_power() {
    let n = 9usize;
    let weights: Vec<f64> = (0..n).map(|i| 0.5 + 0.15 * i as f64).collect();
    let env = piecewise(Geometry::Cycle { n: n as u32 }, vec![0.0], vec![SegmentWeights::CycleEdges(weights.clone())], 0.5).unwrap();
    // dense transition matrix
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let left = weights[(i + n - 1) % n];
        let right = weights[i];
        p[i][(i + 1) % n] += right / (left + right);
        p[i][(i + n - 1) % n] += left / (left + right);
    }
    let mut v = vec![0.0; n];
    v[2] = 1.0;
    for _ in 0..30 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += v[i] * p[i][j];
            }
        }
        v = next;
    }
    let snap = discrete_kernel(&env, Vertex::line(2), 0, 30, &PropagationConfig::new(1, 1e-12)).unwrap().pop().unwrap();
    for (j, &expect) in v.iter().enumerate() {
        assert!((snap.mass_at(Vertex::line(j as i64)) - expect).abs() <= 1e-12);
    }
}

#[test]
fn duality_on_random_schedules() {
    for seed in 0..3 {
        let mut rng = stream_rng(seed, Stream::Environment, 0);
        let env = random_cycle_schedule(20, 5, 10.0, 0.25, &mut rng).unwrap();
        let d = duality_max_vsrw(&env, 10.0, &PropagationConfig::new(1, 1e-13)).unwrap();
        assert!(d <= 1e-9, "seed {seed}: {d}");
    }
}

#[test]
fn simple_walk_local_limit() {
    // period 2: p(t, 0) sqrt(t) tends to 2 / sqrt(2 pi) along even t
    let env = constant_env(Geometry::Line, 1.0).unwrap();
    let t = 2000.0;
    let series = ondiagonal_series(&env, Dynamics::Discrete, Vertex::ORIGIN, &[t], &PropagationConfig::new(2000, 1e-12)).unwrap();
    let p = series[0].p;
    let exact = (stirling_ln_gamma(2001.0) - 2.0 * stirling_ln_gamma(1001.0) - 2000.0 * 2f64.ln()).exp();
    assert!((p - exact).abs() / exact < 1e-10);
    let clt = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((p * t.sqrt() - clt).abs() / clt < 0.05);
}

fn stirling_ln_gamma(x: f64) -> f64 {
    // Stirling series, adequate for x >= 1000
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

#[test]
fn simple_walk_decay_exponent() {
    let env = constant_env(Geometry::Line, 1.0).unwrap();
    let times: Vec<f64> = (1..=20).map(|i| (100 * i) as f64).collect();
    let series = ondiagonal_series(&env, Dynamics::Discrete, Vertex::ORIGIN, &times, &PropagationConfig::new(2000, 1e-12)).unwrap();
    let fit = decay_exponent(&series).unwrap();
    assert!((fit.alpha - 0.5).abs() < 0.05, "alpha {}", fit.alpha);
}

#[test]
fn zigzag_ondiagonal_decays_faster_than_diffusive() {
    let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
    let times: Vec<f64> = (5..=12).map(|i| (100 * i) as f64).collect();
    let series = ondiagonal_series(&env, Dynamics::Discrete, Vertex::ORIGIN, &times, &PropagationConfig::new(1300, 1e-12)).unwrap();
    let scaled: Vec<f64> = series.iter().map(|p| p.p * p.t.sqrt()).collect();
    assert!(scaled.windows(2).all(|w| w[1] < w[0]), "{scaled:?}");
}

#[test]
fn poisson_shift_kernel_moves_right() {
    let mut rng = stream_rng(3, Stream::Environment, 0);
    let times = poisson_times(1.0, 500.0, &mut rng).unwrap();
    let env = poisson_shift_1d(&PoissonShiftParams {
        eps: 0.5,
        c: 2.0,
        breakpoints: times,
    })
    .unwrap();
    let snap = csrw_kernel(&env, Vertex::ORIGIN, 500.0, &PropagationConfig::new(400, 1e-10)).unwrap().pop().unwrap();
    assert!(snap.mean()[0] > 0.0);
}

#[test]
fn zigzag_vsrw_is_not_ballistic() {
    let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
    let snap = vsrw_kernel(&env, Vertex::ORIGIN, 400.0, &PropagationConfig::new(300, 1e-10)).unwrap().pop().unwrap();
    assert!(snap.mean()[0].abs() <= 0.5, "{:?}", snap.mean());
}

#[test]
fn speed_formula_matches_monte_carlo_grid() {
    let mut grid = Vec::new();
    for eps in [0.2, 0.5, 0.8] {
        for gamma in [0.25, 0.5] {
            for gamma_prime in [0.25, 0.5] {
                grid.push((eps, gamma, gamma_prime));
            }
        }
    }
    for (g, &(eps, gamma, gamma_prime)) in grid.iter().enumerate() {
        let formula = ballistic_speed_1d(eps, gamma, gamma_prime).unwrap();
        let env = zigzag_1d(&ZigzagParams::from_laziness(eps, gamma, gamma_prime).unwrap()).unwrap();
        let speeds: Vec<f64> = (0..20)
            .map(|i| {
                let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 20_000, StreamSeed::walk(100 + g as u64, i)).unwrap();
                TrajectorySummary::of(&traj).speed()[0]
            })
            .collect();
        let (mean, se) = mean_and_se(&speeds);
        assert!((mean - formula.beta).abs() <= 3.0 * se, "{eps} {gamma} {gamma_prime}: {mean} vs {}", formula.beta);
    }
}

#[test]
fn occupation_fraction_tends_to_pi() {
    let chain = two_state_chain(0.25, 0.5).unwrap();
    let pi = stationary(&chain).unwrap();
    let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
    let traj = simulate_discrete(&env, Vertex::ORIGIN, 0, 200_000, StreamSeed::walk(77, 0)).unwrap();
    let trace = classify_states(&env, &traj).unwrap();
    assert!((trace.occupation_fraction(StateLabel::APlus) - pi[0]).abs() < 0.01);
    let (q, se) = trace.empirical_transition(StateLabel::APlus, StateLabel::AMinus);
    assert!((q - 0.25).abs() < 4.0 * se);
}
