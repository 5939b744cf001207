//! Geometric tail fit for excursion durations.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use super::{linear_fit, EvidenceRow, FitKind, FitReport, Verdict};
use crate::error::{Error, Result};

/// Excursions discarded before fitting.
pub const BURN_IN: usize = 5;
/// Completed excursions required after burn-in.
pub const MIN_EXCURSIONS: usize = 1000;
/// Survival points need at least this many exceedances.
pub const MIN_EXCEEDANCES: usize = 20;

/// Least-squares fit of `ln P(duration > k) = a - rate * k`. Passes when the
/// slope is negative with t-statistic below -3. A tail with a single usable
/// point (all durations equal) gets the sentinel slope `-inf` and passes.
pub fn geometric_tail_fit(durations: &[u64]) -> Result<FitReport> {
    geometric_tail_fit_pooled(core::slice::from_ref(&durations.to_vec()))
}

/// As [`geometric_tail_fit`] over several walks, each with its own burn-in.
pub fn geometric_tail_fit_pooled(walks: &[Vec<u64>]) -> Result<FitReport> {
    let mut sample: Vec<u64> = walks.iter().flat_map(|w| w.iter().skip(BURN_IN).copied()).collect();
    if sample.len() < MIN_EXCURSIONS {
        return Err(Error::InsufficientData {
            needed: MIN_EXCURSIONS,
            got: sample.len(),
        });
    }
    sample.sort_unstable();
    let n = sample.len() as f64;

    let mut ks = Vec::new();
    let mut ln_s = Vec::new();
    let mut counts = Vec::new();
    let max_k = *sample.last().unwrap();
    for k in 0..=max_k {
        let exceed = sample.len() - sample.partition_point(|&d| d <= k);
        if exceed < MIN_EXCEEDANCES {
            break;
        }
        ks.push(k as f64);
        ln_s.push((exceed as f64 / n).ln());
        counts.push(exceed);
    }
    // drop leading points where the survival is still 1 (below the support)
    let start = ln_s.iter().rposition(|&v| v == 0.0).unwrap_or(0);
    let (ks, ln_s, counts) = (&ks[start..], &ln_s[start..], &counts[start..]);

    if ks.len() < 2 {
        let mut rep = FitReport::new(FitKind::Tail, Verdict::Pass)
            .with("slope", f64::NEG_INFINITY)
            .with("rate", f64::INFINITY)
            .with("t_stat", f64::NEG_INFINITY)
            .with("excursions", n);
        rep.evidence = ks
            .iter()
            .zip(ln_s)
            .map(|(&k, &l)| EvidenceRow { t: k, d: 0.0, value: l.exp(), bound: 1.0 })
            .collect();
        return Ok(rep);
    }
    let fit = linear_fit(ks, ln_s)?;
    let t_stat = if fit.slope_se > 0.0 {
        fit.slope / fit.slope_se
    } else if fit.slope < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let verdict = if fit.slope < 0.0 && t_stat < -3.0 { Verdict::Pass } else { Verdict::Violated };
    let mut rep = FitReport::new(FitKind::Tail, verdict)
        .with("slope", fit.slope)
        .with("intercept", fit.intercept)
        .with("rate", -fit.slope)
        .with("t_stat", t_stat)
        .with("r_squared", fit.r_squared)
        .with("excursions", n);
    rep.evidence = ks
        .iter()
        .zip(ln_s)
        .zip(counts)
        .map(|((&k, &l), &c)| EvidenceRow {
            t: k,
            d: c as f64,
            value: l.exp(),
            bound: (fit.intercept + fit.slope * k).exp(),
        })
        .collect();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use rand::Rng;

    #[test]
    fn constant_durations_hit_sentinel() {
        let rep = geometric_tail_fit(&[1; 2000]).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.constant("slope"), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn synthetic_geometric_rate() {
        let p = 0.3;
        let mut rng = stream_rng(17, Stream::Walk, 0);
        let sample: Vec<u64> = (0..20_000)
            .map(|_| {
                let mut k = 1;
                while rng.random::<f64>() >= p {
                    k += 1;
                }
                k
            })
            .collect();
        let rep = geometric_tail_fit(&sample).unwrap();
        let rate = rep.constant("rate").unwrap();
        let truth = -(0.7f64).ln();
        assert!((rate - truth).abs() < 0.1 * truth, "rate {rate} vs {truth}");
        assert!(rep.passed());
    }

    #[test]
    fn too_few() {
        assert!(matches!(geometric_tail_fit(&[3; 500]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn pooled_burn_in_is_per_walk() {
        let walks: Vec<Vec<u64>> = (0..3).map(|_| (0..400u64).map(|i| 1 + i % 7).collect()).collect();
        let rep = geometric_tail_fit_pooled(&walks).unwrap();
        assert_eq!(rep.constant("excursions").unwrap(), 3.0 * 395.0);
        let flat: Vec<u64> = walks.concat();
        assert_eq!(geometric_tail_fit(&flat).unwrap().constant("excursions").unwrap(), 1195.0);
    }
}
