//! Two-sided Gaussian bound fits for `p(0, x0; t, y) nu(B(x0, sqrt t))`.
//!
//! Evidence rows are sites with `d(x0, y) <= t` whose mass is well above the
//! snapshot error bound. The exponent is fitted by regressing the log of the
//! normalised mass on `d^2 / t`; the prefactors are calibrated on the
//! earliest snapshot and the rest of the window is checked against them.

use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use super::{linear_fit, EvidenceRow, FitKind, FitReport, Verdict};
use crate::error::{Error, Result};
use crate::kernel::KernelSnapshot;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianOptions {
    /// A mass enters the evidence only if it is at least this multiple of
    /// the snapshot error bound.
    pub mass_to_error: f64,
    /// Factor by which a row must exit the calibrated band to count as a
    /// violation.
    pub band: f64,
    /// Masses below this floor are left out of the fit; the on-diagonal
    /// value is still checked against the lower band.
    pub min_mass: f64,
}

impl Default for GaussianOptions {
    fn default() -> Self {
        GaussianOptions {
            mass_to_error: 100.0,
            band: 10.0,
            min_mass: 1e-12,
        }
    }
}

/// Upper and lower reports over the snapshots with `t > 0`.
/// `volume(r)` is `nu(B(x0, r))`, evaluated at `r = floor(sqrt t)`.
pub fn gaussian_bound_report(snapshots: &[KernelSnapshot], volume: impl Fn(u64) -> f64, opts: &GaussianOptions) -> Result<(FitReport, FitReport)> {
    let snaps: Vec<&KernelSnapshot> = snapshots.iter().filter(|s| s.time > 0.0).collect();
    let Some(first) = snaps.first() else {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    };
    let t_first = first.time;

    let mut rows = Vec::new();
    let mut far_max: f64 = 0.0;
    let mut inconclusive = false;
    for s in &snaps {
        let t = s.time;
        let vol = volume(t.sqrt().floor() as u64);
        let threshold = opts.mass_to_error * s.error_bound();
        if s.error_bound() > 0.0 && s.mass_at(s.start) < threshold {
            inconclusive = true;
        }
        for (y, p) in s.sites() {
            let d = s.domain.geometry.distance(s.start, y) as f64;
            if d > t {
                far_max = far_max.max(p);
                continue;
            }
            if p > 0.0 && p >= threshold && p >= opts.min_mass {
                rows.push(EvidenceRow { t, d, value: p * vol, bound: 0.0 });
            }
        }
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.d * r.d / r.t).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    let fit = match linear_fit(&xs, &ys) {
        Ok(fit) => fit,
        // every candidate row drowned in the error bound
        Err(_) if inconclusive => {
            let empty = |kind| FitReport::new(kind, Verdict::Inconclusive).with("rows", rows.len() as f64);
            return Ok((empty(FitKind::GaussianUpper), empty(FitKind::GaussianLower)));
        }
        Err(e) => return Err(e),
    };
    let c5 = (-fit.slope).max(0.0);

    let at_first = || rows.iter().filter(|r| r.t == t_first);
    let c4 = at_first().map(|r| r.value * (c5 * r.d * r.d / r.t).exp()).fold(0.0, f64::max);
    let c6 = at_first()
        .filter(|r| r.d * r.d <= r.t)
        .map(|r| r.value * (c5 * r.d * r.d / r.t).exp())
        .fold(f64::INFINITY, f64::min);

    let mut upper_rows = Vec::with_capacity(rows.len());
    let mut lower_rows = Vec::new();
    let mut upper_violated = false;
    let mut lower_violated = false;
    for r in &rows {
        let gauss = (-c5 * r.d * r.d / r.t).exp();
        let ub = opts.band * c4 * gauss;
        upper_violated |= r.value > ub;
        upper_rows.push(EvidenceRow { bound: ub, ..*r });
        if r.d * r.d <= r.t {
            let lb = c6 * gauss / opts.band;
            lower_violated |= r.value < lb;
            lower_rows.push(EvidenceRow { bound: lb, ..*r });
        }
    }
    // on-diagonal masses below the fitting floor still count for the lower band
    for s in &snaps {
        let p0 = s.mass_at(s.start);
        if p0 < opts.min_mass && p0 >= opts.mass_to_error * s.error_bound() {
            let lb = c6 / opts.band;
            let value = p0 * volume(s.time.sqrt().floor() as u64);
            lower_violated |= value < lb;
            lower_rows.push(EvidenceRow { t: s.time, d: 0.0, value, bound: lb });
        }
    }

    let verdict = |violated: bool| {
        if inconclusive {
            Verdict::Inconclusive
        } else if violated {
            Verdict::Violated
        } else {
            Verdict::Pass
        }
    };
    let mut upper = FitReport::new(FitKind::GaussianUpper, verdict(upper_violated))
        .with("C4", c4)
        .with("C5", c5)
        .with("r_squared", fit.r_squared)
        .with("band", opts.band)
        .with("far_branch_max", far_max);
    upper.evidence = upper_rows;
    let mut lower = FitReport::new(FitKind::GaussianLower, verdict(lower_violated))
        .with("c6", c6)
        .with("c7", c5)
        .with("r_squared", fit.r_squared)
        .with("band", opts.band);
    lower.evidence = lower_rows;
    Ok((upper, lower))
}
