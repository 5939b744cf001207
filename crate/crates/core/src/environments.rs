//! The counterexample conductance schedules and baseline environments.
//!
//! * [`zigzag_1d`]: discrete-time walk on `Z`, two-phase pattern in `t + i`.
//! * [`poisson_shift_1d`]: period-3 pattern on `Z` shifted right at every
//!   breakpoint.
//! * [`halfspace_discrete`]: discrete-time walk on `Z^2 x Z_{>=0}` whose
//!   vertical drift pushes it back to the floor.
//! * [`halfspace_csrw`]: piecewise-constant analogue for the CSRW.
//! * [`constant_env`]: time-independent baseline.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::{validate_breakpoints, Breakpoints, ConductanceSchedule, Environment, Geometry, SegmentWeights, WeightRule};

/// Relative tolerance for the laziness relations between loop weights.
const RELATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZigzagParams {
    pub eps: f64,
    /// Loop weight when `t + i` is even.
    pub b: f64,
    /// Loop weight when `t + i` is odd.
    pub b_prime: f64,
}

impl ZigzagParams {
    /// Loop weights realizing laziness `gamma = b/(b+2)` and `gamma' = b'/(b'+2)`.
    pub fn from_laziness(eps: f64, gamma: f64, gamma_prime: f64) -> Result<Self> {
        Ok(ZigzagParams {
            eps,
            b: loop_for_laziness(gamma, 2.0, "gamma")?,
            b_prime: loop_for_laziness(gamma_prime, 2.0, "gamma_prime")?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.b / (self.b + 2.0)
    }

    pub fn gamma_prime(&self) -> f64 {
        self.b_prime / (self.b_prime + 2.0)
    }
}

/// Loop weight `w` with `w / (w + rest) = gamma`.
fn loop_for_laziness(gamma: f64, rest: f64, field: &'static str) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(domain(field, "laziness must lie in [0, 1)"));
    }
    Ok(rest * gamma / (1.0 - gamma))
}

fn check_eps_unit(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(domain("eps", "must lie in (0, 1)"))
    }
}

fn check_loop(w: f64, field: &'static str) -> Result<()> {
    if w >= 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(domain(field, "loop weight must be finite and nonnegative"))
    }
}

pub fn zigzag_1d(params: &ZigzagParams) -> Result<Environment> {
    check_eps_unit(params.eps)?;
    check_loop(params.b, "b")?;
    check_loop(params.b_prime, "b_prime")?;
    Environment::new(
        Geometry::Line,
        ConductanceSchedule {
            breakpoints: Breakpoints::Unit,
            rule: WeightRule::Zigzag {
                eps: params.eps,
                b: params.b,
                b_prime: params.b_prime,
            },
        },
        1.0 - params.eps,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonShiftParams {
    /// Nonzero, in `(-1, 1)`; negative values are used for the sign study.
    pub eps: f64,
    /// `c > 1`; the environment clock runs at intensity `c - 1`.
    pub c: f64,
    /// `tau_0 = 0 < tau_1 < ...`
    pub breakpoints: Vec<f64>,
}

pub fn poisson_shift_1d(params: &PoissonShiftParams) -> Result<Environment> {
    if !(params.eps > -1.0 && params.eps < 1.0) {
        return Err(domain("eps", "must lie in (-1, 1)"));
    }
    if !(params.c > 1.0) {
        return Err(domain("c", "must exceed 1"));
    }
    validate_breakpoints(&params.breakpoints)?;
    Environment::new(
        Geometry::Line,
        ConductanceSchedule {
            breakpoints: Breakpoints::Explicit(params.breakpoints.clone()),
            rule: WeightRule::PoissonShift { eps: params.eps },
        },
        1.0 - params.eps.abs(),
    )
}

/// Arrival times of a rate-`intensity` Poisson process on `[0, horizon)`,
/// prefixed with `tau_0 = 0`.
pub fn poisson_times<R: Rng + ?Sized>(intensity: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(domain("intensity", "must be positive and finite"));
    }
    if !(horizon > 0.0) {
        return Err(domain("horizon", "must be positive"));
    }
    let gaps = Exp::new(intensity).map_err(|_| domain("intensity", "invalid exponential rate"))?;
    let mut times = alloc::vec![0.0];
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t >= horizon {
            break;
        }
        // a zero gap would break strict monotonicity
        if t > *times.last().unwrap() {
            times.push(t);
        }
    }
    Ok(times)
}

/// Loop weights of the discrete half-space walk. Interior loops `b`
/// (phase `t+i+j+k` odd) and `b'` (even), floor loops `f` (`t+i+j` odd)
/// and `f'` (even). They must satisfy `b/(b+6) = f/(f+1+eps) = gamma` and
/// `b'/(b'+6) = f'/(f'+1-eps) = gamma'` with `gamma' < gamma`, unless all
/// four vanish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceParams {
    pub eps: f64,
    pub b: f64,
    pub b_prime: f64,
    pub f: f64,
    pub f_prime: f64,
}

impl HalfspaceParams {
    pub fn non_lazy(eps: f64) -> Self {
        HalfspaceParams {
            eps,
            b: 0.0,
            b_prime: 0.0,
            f: 0.0,
            f_prime: 0.0,
        }
    }

    /// Loop weights matching laziness `gamma` (state with up-weight `1+eps`)
    /// and `gamma'`.
    pub fn from_laziness(eps: f64, gamma: f64, gamma_prime: f64) -> Result<Self> {
        Ok(HalfspaceParams {
            eps,
            b: loop_for_laziness(gamma, 6.0, "gamma")?,
            b_prime: loop_for_laziness(gamma_prime, 6.0, "gamma_prime")?,
            f: loop_for_laziness(gamma, 1.0 + eps, "gamma")?,
            f_prime: loop_for_laziness(gamma_prime, 1.0 - eps, "gamma_prime")?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.b / (self.b + 6.0)
    }

    pub fn gamma_prime(&self) -> f64 {
        self.b_prime / (self.b_prime + 6.0)
    }

    pub fn is_non_lazy(&self) -> bool {
        self.b == 0.0 && self.b_prime == 0.0 && self.f == 0.0 && self.f_prime == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        check_eps_unit(self.eps)?;
        check_loop(self.b, "b")?;
        check_loop(self.b_prime, "b_prime")?;
        check_loop(self.f, "f")?;
        check_loop(self.f_prime, "f_prime")?;
        if self.is_non_lazy() {
            return Ok(());
        }
        // cross-multiplied forms of b/(b+6) = f/(f+1+eps) and the primed pair
        let close = |lhs: f64, rhs: f64| (lhs - rhs).abs() <= RELATION_TOL * lhs.abs().max(rhs.abs()).max(1.0);
        if !close(self.b * (self.f + 1.0 + self.eps), self.f * (self.b + 6.0)) {
            return Err(domain("f", "b/(b+6) must equal f/(f+1+eps)"));
        }
        if !close(self.b_prime * (self.f_prime + 1.0 - self.eps), self.f_prime * (self.b_prime + 6.0)) {
            return Err(domain("f_prime", "b'/(b'+6) must equal f'/(f'+1-eps)"));
        }
        if !(self.gamma_prime() < self.gamma()) {
            return Err(domain("b_prime", "laziness gamma' must be smaller than gamma"));
        }
        Ok(())
    }
}

pub fn halfspace_discrete(params: &HalfspaceParams) -> Result<Environment> {
    params.validate()?;
    Environment::new(
        Geometry::HalfSpace,
        ConductanceSchedule {
            breakpoints: Breakpoints::Unit,
            rule: WeightRule::HalfspaceDiscrete {
                eps: params.eps,
                b: params.b,
                b_prime: params.b_prime,
                f: params.f,
                f_prime: params.f_prime,
            },
        },
        1.0 - params.eps,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCsrwParams {
    pub eps: f64,
    pub breakpoints: Vec<f64>,
}

pub fn halfspace_csrw(params: &HalfspaceCsrwParams) -> Result<Environment> {
    check_eps_unit(params.eps)?;
    validate_breakpoints(&params.breakpoints)?;
    Environment::new(
        Geometry::HalfSpace,
        ConductanceSchedule {
            breakpoints: Breakpoints::Explicit(params.breakpoints.clone()),
            rule: WeightRule::HalfspaceCsrw { eps: params.eps },
        },
        1.0 - params.eps,
    )
}

/// All edges carry weight `w` at all times; no loops.
pub fn constant_env(geometry: Geometry, w: f64) -> Result<Environment> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(domain("w", "must be positive and finite"));
    }
    Environment::new(
        geometry,
        ConductanceSchedule {
            breakpoints: Breakpoints::None,
            rule: WeightRule::Constant { w },
        },
        w.min(1.0 / w),
    )
}

/// Piecewise-constant schedule given segment by segment.
pub fn piecewise(geometry: Geometry, breakpoints: Vec<f64>, segments: Vec<SegmentWeights>, c1: f64) -> Result<Environment> {
    validate_breakpoints(&breakpoints)?;
    if segments.len() != breakpoints.len() {
        return Err(domain("segments", "need one weight table per breakpoint"));
    }
    for s in &segments {
        match s {
            SegmentWeights::Uniform(w) if !(*w > 0.0) => return Err(domain("segments", "weights must be positive")),
            SegmentWeights::CycleEdges(ws) => {
                let Geometry::Cycle { n } = geometry else {
                    return Err(domain("segments", "per-edge tables are only defined on cycles"));
                };
                if ws.len() != n as usize || ws.iter().any(|w| !(*w > 0.0)) {
                    return Err(domain("segments", "need n positive edge weights"));
                }
            }
            _ => {}
        }
    }
    Environment::new(
        geometry,
        ConductanceSchedule {
            breakpoints: Breakpoints::Explicit(breakpoints),
            rule: WeightRule::Piecewise { segments },
        },
        c1,
    )
}

/// A random elliptic schedule on the `n`-cycle: `segments` pieces with
/// uniformly drawn interior breakpoints in `(0, horizon)` and edge weights
/// uniform on `[c1, 1/c1]`.
pub fn random_cycle_schedule<R: Rng + ?Sized>(n: u32, segments: usize, horizon: f64, c1: f64, rng: &mut R) -> Result<Environment> {
    if segments == 0 {
        return Err(domain("segments", "need at least one segment"));
    }
    let mut cuts: Vec<f64> = (1..segments).map(|_| rng.random::<f64>() * horizon).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut breakpoints = alloc::vec![0.0];
    breakpoints.extend(cuts.into_iter().filter(|&c| c > 0.0));
    let (lo, hi) = (c1, 1.0 / c1);
    let tables = breakpoints
        .iter()
        .map(|_| SegmentWeights::CycleEdges((0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()))
        .collect();
    piecewise(Geometry::Cycle { n }, breakpoints, tables, c1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Vertex;
    use crate::rng::{stream_rng, Stream};
    use alloc::vec;

    #[test]
    fn zigzag_laziness_roundtrip() {
        let p = ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap();
        assert!((p.b - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.b_prime - 2.0).abs() < 1e-15);
        assert!((p.gamma() - 0.25).abs() < 1e-15);
        assert!((p.gamma_prime() - 0.5).abs() < 1e-15);
        let env = zigzag_1d(&p).unwrap();
        let x = Vertex::line(3);
        assert!((env.transition_prob(1.0, x, x).unwrap() - 0.25).abs() < 1e-15);
        assert!((env.transition_prob(0.0, x, x).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zigzag_weights_at_even_phase() {
        let env = zigzag_1d(&ZigzagParams { eps: 0.5, b: 0.3, b_prime: 0.9 }).unwrap();
        let star = env.star(2.0, Vertex::line(4));
        assert_eq!(star.weight_to(Vertex::line(3)), 0.5);
        assert_eq!(star.loop_weight, 0.3);
        assert_eq!(star.weight_to(Vertex::line(5)), 1.5);
    }

    #[test]
    fn zigzag_rejects_bad_eps() {
        assert!(zigzag_1d(&ZigzagParams { eps: 1.5, b: 0.0, b_prime: 0.0 }).is_err());
        assert!(zigzag_1d(&ZigzagParams { eps: 0.0, b: 0.0, b_prime: 0.0 }).is_err());
    }

    #[test]
    fn poisson_shift_segments() {
        let env = poisson_shift_1d(&PoissonShiftParams {
            eps: 0.5,
            c: 2.0,
            breakpoints: vec![0.0, 1.0, 2.5, 3.0],
        })
        .unwrap();
        let (a, b) = (Vertex::line(0), Vertex::line(1));
        assert_eq!(env.conductance(0.5, a, b).unwrap(), 0.5);
        assert_eq!(env.conductance(1.0, a, b).unwrap(), 1.5);
        assert_eq!(env.conductance(2.6, a, b).unwrap(), 1.0);
        // period 3 in the segment index
        assert_eq!(env.conductance(3.0, a, b).unwrap(), 0.5);
        assert!(poisson_shift_1d(&PoissonShiftParams {
            eps: 0.5,
            c: 2.0,
            breakpoints: vec![0.0, 2.0, 1.0],
        })
        .is_err());
    }

    #[test]
    fn poisson_shift_zero_eps_is_simple_walk() {
        let env = poisson_shift_1d(&PoissonShiftParams {
            eps: 0.0,
            c: 2.0,
            breakpoints: vec![0.0, 0.7],
        })
        .unwrap();
        for t in [0.0, 0.5, 1.0] {
            for i in -4..4 {
                assert_eq!(env.conductance(t, Vertex::line(i), Vertex::line(i + 1)).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn poisson_times_mean_gap() {
        let mut rng = stream_rng(7, Stream::Environment, 0);
        let times = poisson_times(2.0, 5_000.0, &mut rng).unwrap();
        let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).take(10_000).collect();
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        // exponential(2): mean 1/2, standard deviation 1/2
        let se = 0.5 / n.sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean gap {mean}");
        let tau_n = times[10_000];
        assert!((tau_n / 10_000.0 - 0.5).abs() < 0.05 * 0.5);
    }

    #[test]
    fn poisson_times_is_deterministic() {
        let a = poisson_times(1.0, 100.0, &mut stream_rng(3, Stream::Environment, 1)).unwrap();
        let b = poisson_times(1.0, 100.0, &mut stream_rng(3, Stream::Environment, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn halfspace_laziness_relations() {
        let p = HalfspaceParams {
            eps: 0.5,
            b: 2.0,
            b_prime: 6.0 / 7.0,
            f: 0.5,
            f_prime: 1.0 / 14.0,
        };
        p.validate().unwrap();
        assert!((p.gamma() - 0.25).abs() < 1e-15);
        assert!((p.gamma_prime() - 0.125).abs() < 1e-15);
        let q = HalfspaceParams::from_laziness(0.5, 0.25, 0.125).unwrap();
        assert!((q.b - 2.0).abs() < 1e-14 && (q.f - 0.5).abs() < 1e-14);
        assert!((q.b_prime - 6.0 / 7.0).abs() < 1e-14 && (q.f_prime - 1.0 / 14.0).abs() < 1e-14);

        let mut broken = p.clone();
        broken.f = 0.6;
        assert!(halfspace_discrete(&broken).is_err());
        // gamma' must stay below gamma
        let swapped = HalfspaceParams::from_laziness(0.5, 0.125, 0.25).unwrap();
        assert!(halfspace_discrete(&swapped).is_err());
    }

    #[test]
    fn halfspace_floor_moves_only_up_or_stay() {
        let env = halfspace_discrete(&HalfspaceParams::from_laziness(0.5, 0.25, 0.125).unwrap()).unwrap();
        for t in 0..4 {
            let x = Vertex::space(1, 2, 0);
            let star = env.star(t as f64, x);
            let targets: Vec<Vertex> = star.edges().map(|(v, _)| v).collect();
            assert_eq!(targets, vec![Vertex::space(1, 2, 1)]);
            for dx in [Vertex::space(0, 2, 0), Vertex::space(2, 2, 0), Vertex::space(1, 1, 0)] {
                assert_eq!(env.transition_prob(t as f64, x, dx).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn halfspace_floor_mu_total() {
        let p = HalfspaceParams::from_laziness(0.5, 0.25, 0.125).unwrap();
        let env = halfspace_discrete(&p).unwrap();
        // t + i + j odd
        let mu = env.mu_total(1.0, Vertex::space(0, 0, 0)).unwrap();
        assert!((mu - (p.f + 1.5)).abs() < 1e-15);
        let mu = env.mu_total(0.0, Vertex::space(0, 0, 0)).unwrap();
        assert!((mu - (p.f_prime + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn halfspace_csrw_branches() {
        let env = halfspace_csrw(&HalfspaceCsrwParams {
            eps: 0.5,
            breakpoints: vec![0.0, 1.0],
        })
        .unwrap();
        let x = Vertex::space(0, 0, 1);
        assert_eq!(env.conductance(0.0, x, Vertex::space(0, 0, 2)).unwrap(), 1.5);
        assert_eq!(env.conductance(0.0, x, Vertex::space(0, 0, 0)).unwrap(), 0.5);
        assert_eq!(env.conductance(0.0, x, Vertex::space(1, 0, 1)).unwrap(), 1.25);
        let floor = Vertex::ORIGIN;
        assert_eq!(env.conductance(0.0, floor, Vertex::space(1, 0, 0)).unwrap(), 0.75);
        assert_eq!(env.conductance(1.5, floor, Vertex::space(1, 0, 0)).unwrap(), 1.25);
        let report = env.verify_ellipticity(&[0.0, 1.0], &env.ball(Vertex::space(0, 0, 2), 3)).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn rate_bounds_dominate_mu() {
        let envs = [
            zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap(),
            poisson_shift_1d(&PoissonShiftParams {
                eps: -0.3,
                c: 2.0,
                breakpoints: vec![0.0, 1.0, 2.0],
            })
            .unwrap(),
            halfspace_discrete(&HalfspaceParams::from_laziness(0.5, 0.25, 0.125).unwrap()).unwrap(),
            halfspace_csrw(&HalfspaceCsrwParams {
                eps: 0.5,
                breakpoints: vec![0.0, 1.0],
            })
            .unwrap(),
            constant_env(Geometry::Line, 3.0).unwrap(),
        ];
        for env in &envs {
            for t in [0.0, 1.0, 2.0] {
                let bound = env.rate_bound(env.segment_at(t));
                for x in env.ball(Vertex::ORIGIN, 3).members {
                    assert!(env.mu_total(t, x).unwrap() <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_cycle_schedule_is_elliptic() {
        let mut rng = stream_rng(11, Stream::Environment, 0);
        let env = random_cycle_schedule(20, 5, 10.0, 0.5, &mut rng).unwrap();
        let report = env.verify_ellipticity(&[0.0, 2.0, 4.0, 6.0, 8.0, 9.99], &env.ball(Vertex::ORIGIN, 10)).unwrap();
        assert!(report.pass);
    }
}
