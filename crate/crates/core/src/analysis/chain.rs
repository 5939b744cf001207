//! Finite state chains of the local environment and the speeds they imply.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::walkers::StateLabel;

/// A row-stochastic matrix over labelled states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteChain {
    pub labels: Vec<StateLabel>,
    pub q: Vec<Vec<f64>>,
    pub pi: Option<Vec<f64>>,
}

impl FiniteChain {
    pub fn new(labels: Vec<StateLabel>, q: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(domain("q", "matrix must be square and match the labels"));
        }
        for row in &q {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(domain("q", "entries must lie in [0, 1]"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(domain("q", "rows must sum to 1"));
            }
        }
        Ok(FiniteChain { labels, q, pi: None })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `max_j |(pi q)_j - pi_j|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| ((0..self.len()).map(|i| pi[i] * self.q[i][j]).sum::<f64>() - pi[j]).abs())
            .fold(0.0, f64::max)
    }

    fn reaches_all(&self, forward: bool) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let p = if forward { self.q[i][j] } else { self.q[j][i] };
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_irreducible(&self) -> bool {
        self.reaches_all(true) && self.reaches_all(false)
    }
}

/// The unique stationary vector of an irreducible chain.
pub fn stationary(chain: &FiniteChain) -> Result<Vec<f64>> {
    if !chain.is_irreducible() {
        return Err(Error::Reducible);
    }
    let n = chain.len();
    // (q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = chain.q[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let solution = a.lu().solve(&rhs).ok_or(Error::Reducible)?;
    Ok(solution.iter().copied().collect())
}

fn with_stationary(mut chain: FiniteChain) -> Result<FiniteChain> {
    chain.pi = Some(stationary(&chain)?);
    Ok(chain)
}

fn check_laziness(gamma: f64, gamma_prime: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(domain("gamma", "must lie in [0, 1)"));
    }
    if !(0.0..1.0).contains(&gamma_prime) {
        return Err(domain("gamma_prime", "must lie in [0, 1)"));
    }
    if gamma == 0.0 && gamma_prime == 0.0 {
        return Err(Error::DegenerateChain("gamma = gamma' = 0; use the non-lazy case".into()));
    }
    Ok(())
}

/// States `[A+, A-]` with `q = [[1-g, g], [g', 1-g']]`; `pi` is the closed
/// form `(g', g) / (g + g')`.
pub fn two_state_chain(gamma: f64, gamma_prime: f64) -> Result<FiniteChain> {
    check_laziness(gamma, gamma_prime)?;
    let mut chain = FiniteChain::new(
        vec![StateLabel::APlus, StateLabel::AMinus],
        vec![vec![1.0 - gamma, gamma], vec![gamma_prime, 1.0 - gamma_prime]],
    )?;
    let s = gamma + gamma_prime;
    chain.pi = Some(vec![gamma_prime / s, gamma / s]);
    Ok(chain)
}

fn check_three_state(eps: f64, c: f64) -> Result<()> {
    if !(eps > -1.0 && eps < 1.0) {
        return Err(domain("eps", "must lie in (-1, 1)"));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(domain("c", "must exceed 1"));
    }
    Ok(())
}

/// State chain `[A1, A2, A3]` of the CSRW in the Poisson-shift environment,
/// observed at the state-change times; `pi` is solved numerically.
pub fn three_state_chain(eps: f64, c: f64) -> Result<FiniteChain> {
    check_three_state(eps, c)?;
    let q12 = (1.0 - eps) / (2.0 * c);
    let q23 = 1.0 / ((2.0 - eps) * c);
    let q31 = (1.0 + eps) / ((2.0 + eps) * c);
    let chain = FiniteChain::new(
        vec![StateLabel::A1, StateLabel::A2, StateLabel::A3],
        vec![vec![0.0, q12, 1.0 - q12], vec![1.0 - q23, 0.0, q23], vec![q31, 1.0 - q31, 0.0]],
    )?;
    with_stationary(chain)
}

/// The closed-form vector printed alongside the three-state chain, up to
/// scale and unnormalised. It is not stationary for the chain above; it is
/// kept for comparison only.
pub fn displayed_invariant_vector(eps: f64, c: f64) -> [f64; 3] {
    let base = 4.0 * c * c - 2.0 * c + 1.0;
    [
        2.0 * (-base + (c - 1.0) * eps + c * c * eps * eps),
        (2.0 - eps) * (base + (2.0 * c * c - 2.0 * c) * eps - eps * eps),
        (2.0 + eps) * (base + (-2.0 * c * c + 3.0 * c - 1.0) * eps - c * eps * eps),
    ]
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedSource {
    Formula,
    MonteCarlo,
    KernelMean,
}

/// Contribution `drift * weight` of one state.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedTerm {
    pub state: StateLabel,
    pub drift: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    /// Speed per epoch of the state chain.
    pub beta: f64,
    pub terms: Vec<SpeedTerm>,
    /// Closed-form value when one exists.
    pub closed_form: Option<f64>,
    /// State changes per unit time, when epochs are not unit steps.
    pub epochs_per_unit_time: Option<f64>,
    pub std_error: Option<f64>,
    pub source: SpeedSource,
}

impl SpeedReport {
    fn from_terms(terms: Vec<SpeedTerm>, closed_form: Option<f64>) -> Self {
        SpeedReport {
            beta: terms.iter().map(|t| t.drift * t.weight).sum(),
            terms,
            closed_form,
            epochs_per_unit_time: None,
            std_error: None,
            source: SpeedSource::Formula,
        }
    }

    /// An empirical estimate with its standard error.
    pub fn empirical(beta: f64, std_error: f64, source: SpeedSource) -> Self {
        SpeedReport {
            beta,
            terms: Vec::new(),
            closed_form: None,
            epochs_per_unit_time: None,
            std_error: Some(std_error),
            source,
        }
    }

    pub fn per_unit_time(&self) -> f64 {
        self.beta * self.epochs_per_unit_time.unwrap_or(1.0)
    }

    pub fn sign(&self) -> i8 {
        if self.beta > 0.0 {
            1
        } else if self.beta < 0.0 {
            -1
        } else {
            0
        }
    }
}

fn terms_from(chain: &FiniteChain, drifts: &[f64]) -> Result<Vec<SpeedTerm>> {
    let pi = stationary(chain)?;
    Ok(chain
        .labels
        .iter()
        .zip(drifts)
        .zip(&pi)
        .map(|((&state, &drift), &weight)| SpeedTerm { state, drift, weight })
        .collect())
}

/// Speed of the discrete zigzag walk: `Delta(A+) pi(A+) + Delta(A-) pi(A-)`
/// with `pi` from [`stationary`], next to the closed form
/// `eps (g' - g) / (g' + g)`. With `g = g' = 0` the walk never leaves `A+`
/// and the speed is `eps`.
pub fn ballistic_speed_1d(eps: f64, gamma: f64, gamma_prime: f64) -> Result<SpeedReport> {
    if !(eps > -1.0 && eps < 1.0) {
        return Err(domain("eps", "must lie in (-1, 1)"));
    }
    if gamma == 0.0 && gamma_prime == 0.0 {
        let terms = vec![SpeedTerm {
            state: StateLabel::APlus,
            drift: eps,
            weight: 1.0,
        }];
        return Ok(SpeedReport::from_terms(terms, Some(eps)));
    }
    let chain = two_state_chain(gamma, gamma_prime)?;
    let drifts = [eps * (1.0 - gamma), -eps * (1.0 - gamma_prime)];
    let closed = eps * (gamma_prime - gamma) / (gamma_prime + gamma);
    Ok(SpeedReport::from_terms(terms_from(&chain, &drifts)?, Some(closed)))
}

/// Drift per state change of the Poisson-shift CSRW, from the solved
/// stationary vector. State changes occur at rate `c`.
pub fn csrw_speed_sign(eps: f64, c: f64) -> Result<SpeedReport> {
    let chain = three_state_chain(eps, c)?;
    let drifts = [-eps / c, eps / ((2.0 - eps) * c), eps / ((2.0 + eps) * c)];
    let mut report = SpeedReport::from_terms(terms_from(&chain, &drifts)?, None);
    report.epochs_per_unit_time = Some(c);
    Ok(report)
}

/// Vertical speed of the discrete half-space walk away from the floor.
/// Loops `b, b'` give laziness `g = b/(b+6)`, `g' = b'/(b'+6)`; the
/// construction needs `g' < g`. With `b = b' = 0` the walk stays in `A-`.
pub fn halfspace_speed(eps: f64, b: f64, b_prime: f64) -> Result<SpeedReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain("eps", "must lie in (0, 1)"));
    }
    if b < 0.0 || b_prime < 0.0 {
        return Err(domain("b", "loop weights must be nonnegative"));
    }
    if b == 0.0 && b_prime == 0.0 {
        let drift = -eps / 3.0;
        let terms = vec![SpeedTerm {
            state: StateLabel::AMinus,
            drift,
            weight: 1.0,
        }];
        return Ok(SpeedReport::from_terms(terms, Some(drift)));
    }
    let (gamma, gamma_prime) = (b / (b + 6.0), b_prime / (b_prime + 6.0));
    if gamma_prime >= gamma {
        return Err(domain("b_prime", format!("need gamma' < gamma, got {gamma_prime} >= {gamma}")));
    }
    let chain = two_state_chain(gamma, gamma_prime)?;
    let drifts = [2.0 * eps / (6.0 + b), -2.0 * eps / (6.0 + b_prime)];
    Ok(SpeedReport::from_terms(terms_from(&chain, &drifts)?, None))
}

/// Vertical speed of the half-space CSRW away from the floor when the
/// environment flips at rate `c - 1`: states `[A+, A-]` observed at state
/// changes or horizontal jumps (rate `c` in total).
pub fn halfspace_csrw_speed(eps: f64, c: f64) -> Result<SpeedReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain("eps", "must lie in (0, 1)"));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(domain("c", "must exceed 1"));
    }
    let stay_plus = (2.0 + eps) / ((3.0 + eps) * c);
    let stay_minus = (2.0 - eps) / ((3.0 - eps) * c);
    let chain = FiniteChain::new(
        vec![StateLabel::APlus, StateLabel::AMinus],
        vec![vec![stay_plus, 1.0 - stay_plus], vec![1.0 - stay_minus, stay_minus]],
    )?;
    let drifts = [2.0 * eps / ((6.0 + 2.0 * eps) * c), -2.0 * eps / ((6.0 - 2.0 * eps) * c)];
    let mut report = SpeedReport::from_terms(terms_from(&with_stationary(chain)?, &drifts)?, None);
    report.epochs_per_unit_time = Some(c);
    Ok(report)
}
