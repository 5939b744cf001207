//! Empirical recurrence diagnostics: growth of return counts and decay of
//! the on-diagonal kernel.

use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use super::linear_fit;
use crate::error::{domain, Result};
use crate::kernel::OnDiagonalPoint;
use crate::walkers::median;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// The median return count keeps growing with the horizon.
    Growing,
    /// The median return count levels off.
    Saturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub horizons: Vec<f64>,
    pub median_returns: Vec<f64>,
    pub mean_returns: Vec<f64>,
    /// Median at the last horizon over the median at the first.
    pub growth_ratio: f64,
    pub verdict: Growth,
}

/// Ratio of last to first median needed for a `Growing` verdict.
pub const GROWTH_FACTOR: f64 = 1.5;

/// `counts[i][h]` is the number of returns of trajectory `i` by
/// `horizons[h]`. Growth means nondecreasing medians with the last at least
/// [`GROWTH_FACTOR`] times the first (and positive).
pub fn recurrence_diagnostic(horizons: &[f64], counts: &[Vec<u64>]) -> Result<RecurrenceReport> {
    if horizons.len() < 2 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("horizons", "need at least two increasing horizons"));
    }
    if counts.is_empty() || counts.iter().any(|c| c.len() != horizons.len()) {
        return Err(domain("counts", "one count per horizon for every trajectory"));
    }
    let column = |h: usize| counts.iter().map(|c| c[h] as f64).collect::<Vec<f64>>();
    let median_returns: Vec<f64> = (0..horizons.len()).map(|h| median(&column(h))).collect();
    let mean_returns: Vec<f64> = (0..horizons.len())
        .map(|h| column(h).iter().sum::<f64>() / counts.len() as f64)
        .collect();
    let (first, last) = (median_returns[0], *median_returns.last().unwrap());
    let growth_ratio = if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let monotone = median_returns.windows(2).all(|w| w[1] >= w[0]);
    let verdict = if monotone && last > 0.0 && growth_ratio >= GROWTH_FACTOR {
        Growth::Growing
    } else {
        Growth::Saturating
    };
    Ok(RecurrenceReport {
        horizons: horizons.to_vec(),
        median_returns,
        mean_returns,
        growth_ratio,
        verdict,
    })
}

/// Fit of `p(t, x0) ~ t^(-alpha)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Log-log regression over points with `t > 0` and `p > 0`; zero masses
/// (periodicity) are skipped.
pub fn decay_exponent(series: &[OnDiagonalPoint]) -> Result<DecayFit> {
    let usable: Vec<&OnDiagonalPoint> = series.iter().filter(|p| p.t > 0.0 && p.p > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.p.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        alpha: -fit.slope,
        r_squared: fit.r_squared,
        points: fit.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn growth_verdicts() {
        let grow = recurrence_diagnostic(&[10.0, 100.0], &[vec![1, 3], vec![2, 4], vec![2, 5]]).unwrap();
        assert_eq!(grow.verdict, Growth::Growing);
        assert_eq!(grow.median_returns, vec![2.0, 4.0]);
        let flat = recurrence_diagnostic(&[10.0, 100.0], &[vec![1, 1], vec![2, 2], vec![0, 0]]).unwrap();
        assert_eq!(flat.verdict, Growth::Saturating);
        assert!(recurrence_diagnostic(&[10.0], &[vec![1]]).is_err());
    }

    #[test]
    fn exact_power_law() {
        let series: Vec<OnDiagonalPoint> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&t: &f64| OnDiagonalPoint { t, p: 3.0 * t.powf(-0.5), error_bound: 0.0 })
            .collect();
        let fit = decay_exponent(&series).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
    }
}
