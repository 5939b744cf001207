//! Closed-form chain computations, bound fits and diagnostics.

pub mod chain;
pub mod gaussian;
pub mod poincare;
pub mod recurrence;
pub mod tail;
pub mod volume;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EllipticityReport;

pub use chain::{
    ballistic_speed_1d, csrw_speed_sign, displayed_invariant_vector, halfspace_csrw_speed, halfspace_speed, stationary, three_state_chain,
    two_state_chain, FiniteChain, SpeedReport, SpeedSource, SpeedTerm,
};
pub use gaussian::{gaussian_bound_report, GaussianOptions};
pub use poincare::{poincare_constant, poincare_constant_on, MAX_POINCARE_SITES};
pub use recurrence::{decay_exponent, recurrence_diagnostic, DecayFit, Growth, RecurrenceReport};
pub use tail::{geometric_tail_fit, geometric_tail_fit_pooled};
pub use volume::volume_doubling_constant;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    GaussianUpper,
    GaussianLower,
    Poincare,
    Doubling,
    Ellipticity,
    Tail,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Violated,
    Inconclusive,
}

/// One evidence row. The meaning of `d` depends on the report kind (graph
/// distance, radius, or tail index); `bound` is what `value` was compared to.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub t: f64,
    pub d: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: FitKind,
    pub constants: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub evidence: Vec<EvidenceRow>,
}

impl FitReport {
    pub(crate) fn new(kind: FitKind, verdict: Verdict) -> Self {
        FitReport {
            kind,
            constants: BTreeMap::new(),
            verdict,
            evidence: Vec::new(),
        }
    }

    pub(crate) fn with(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl From<&EllipticityReport> for FitReport {
    fn from(r: &EllipticityReport) -> Self {
        let mut report = FitReport::new(FitKind::Ellipticity, if r.pass { Verdict::Pass } else { Verdict::Violated })
            .with("c1", r.c1)
            .with("min_weight", r.min_weight)
            .with("max_weight", r.max_weight);
        report.evidence.push(EvidenceRow {
            t: 0.0,
            d: 0.0,
            value: r.min_weight,
            bound: r.c1,
        });
        report.evidence.push(EvidenceRow {
            t: 0.0,
            d: 0.0,
            value: r.max_weight,
            bound: 1.0 / r.c1,
        });
        if let Some(v) = &r.first_violation {
            report.evidence.push(EvidenceRow {
                t: v.t,
                d: 1.0,
                value: v.weight,
                bound: r.c1,
            });
        }
        report
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; zero for an exact fit.
    pub slope_se: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InsufficientData { needed: 2, got: n.min(ys.len()) });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Unsupported("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_se = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }
}
