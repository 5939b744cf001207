//! Volume doubling constant of the counting measure.

use super::{EvidenceRow, FitKind, FitReport, Verdict};
use crate::error::{domain, Result};
use crate::graph::{Geometry, Vertex};

/// `C1 = max_{1 <= r <= r_max/2} nu(B(x0, 2r)) / nu(B(x0, r))`. Each ratio is
/// compared with `2^dim`, which it never exceeds on these geometries.
pub fn volume_doubling_constant(geometry: Geometry, x0: Vertex, r_max: u64) -> Result<FitReport> {
    if r_max < 2 {
        return Err(domain("r_max", "must be at least 2"));
    }
    geometry.check(x0)?;
    let cap = (1u64 << geometry.dimension()) as f64;
    let mut report = FitReport::new(FitKind::Doubling, Verdict::Pass);
    let mut c1: f64 = 0.0;
    for r in 1..=r_max / 2 {
        let ratio = geometry.ball_volume(x0, 2 * r) as f64 / geometry.ball_volume(x0, r) as f64;
        c1 = c1.max(ratio);
        if ratio > cap {
            report.verdict = Verdict::Violated;
        }
        report.evidence.push(EvidenceRow {
            t: 0.0,
            d: r as f64,
            value: ratio,
            bound: cap,
        });
    }
    Ok(report.with("C1", c1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_ratios() {
        let rep = volume_doubling_constant(Geometry::Line, Vertex::ORIGIN, 2).unwrap();
        assert_eq!(rep.constant("C1").unwrap(), 5.0 / 3.0);
        let rep = volume_doubling_constant(Geometry::Line, Vertex::ORIGIN, 200).unwrap();
        assert!(rep.constant("C1").unwrap() <= 2.0);
        for row in &rep.evidence {
            let r = row.d;
            assert_eq!(row.value, (4.0 * r + 1.0) / (2.0 * r + 1.0));
        }
    }

    #[test]
    fn halfspace_origin() {
        let rep = volume_doubling_constant(Geometry::HalfSpace, Vertex::ORIGIN, 32).unwrap();
        assert!(rep.constant("C1").unwrap() <= 8.0);
        assert!(rep.passed());
        // closed form at the origin: (r+1)(2r^2+4r+3)/3
        for r in [1u64, 5, 16] {
            let v = Geometry::HalfSpace.ball_volume(Vertex::ORIGIN, r);
            assert_eq!(v, (r + 1) * (2 * r * r + 4 * r + 3) / 3);
        }
    }

    #[test]
    fn small_r_max() {
        assert!(volume_doubling_constant(Geometry::Line, Vertex::ORIGIN, 1).is_err());
    }
}
