//! Optimal Poincaré constant on a ball at a fixed time.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

use super::{EvidenceRow, FitKind, FitReport, Verdict};
use crate::error::{domain, Error, Result};
use crate::graph::{Environment, Vertex};

/// Largest `B(x0, 2r)` accepted by [`poincare_constant`].
pub const MAX_POINCARE_SITES: usize = 4000;

/// `C2 = lambda_max / r^2` where `lambda_max` is the largest ratio of
/// `sum_{B(x0,r)} |f - f_B|^2` to `sum_{x,y in B(x0,2r)} (f(x)-f(y))^2 mu^(t)(x,y)`
/// (ordered pairs) over nonconstant `f`.
///
/// Both forms vanish on constants, so `f` is pinned to zero at `x0`; the
/// maximum is then the top eigenvalue of `A D^{-1} A^T`, with `A` the
/// centred restriction to the inner ball and `D` the pinned Dirichlet form.
pub fn poincare_constant(env: &Environment, t: f64, x0: Vertex, r: u64) -> Result<FitReport> {
    poincare_constant_on(env, t, x0, r, 2 * r)
}

/// As [`poincare_constant`] with the Dirichlet form taken over
/// `B(x0, outer)`, `outer >= r`.
pub fn poincare_constant_on(env: &Environment, t: f64, x0: Vertex, r: u64, outer: u64) -> Result<FitReport> {
    if r == 0 {
        return Err(domain("r", "radius must be at least 1"));
    }
    if outer < r {
        return Err(domain("outer", "outer radius must be at least r"));
    }
    env.geometry.check(x0)?;
    let outer_radius = outer;
    let outer = env.ball(x0, outer_radius);
    if outer.volume() > MAX_POINCARE_SITES {
        return Err(Error::Resource(format!(
            "B(x0, {outer_radius}) has {} sites, limit {MAX_POINCARE_SITES}",
            outer.volume()
        )));
    }
    let index: BTreeMap<Vertex, usize> = outer.members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = outer.volume();

    let mut laplacian = DMatrix::<f64>::zeros(n, n);
    for (i, &x) in outer.members.iter().enumerate() {
        for &y in env.geometry.neighbors(x).as_slice() {
            let Some(&j) = index.get(&y) else { continue };
            let w = env.conductance(t, x, y)?;
            // ordered pairs count every edge twice
            laplacian[(i, i)] += 2.0 * w;
            laplacian[(i, j)] -= 2.0 * w;
        }
    }

    // sites connected to x0 through positive weights inside the outer ball
    let pin = index[&x0];
    let mut reached = vec![false; n];
    let mut stack = vec![pin];
    reached[pin] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !reached[j] && laplacian[(i, j)] < 0.0 {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    let inner = env.ball(x0, r);
    let report = |c2: f64, lambda: f64| {
        let mut rep = FitReport::new(FitKind::Poincare, if c2.is_finite() { Verdict::Pass } else { Verdict::Violated })
            .with("C2", c2)
            .with("lambda_max", lambda)
            .with("r", r as f64)
            .with("outer", outer_radius as f64)
            .with("t", t);
        rep.evidence.push(EvidenceRow {
            t,
            d: r as f64,
            value: c2,
            bound: f64::MAX,
        });
        rep
    };
    if inner.members.iter().any(|v| !reached[index[v]]) {
        return Ok(report(f64::INFINITY, f64::INFINITY));
    }

    // free coordinates: reached sites other than the pinned one
    let free: Vec<usize> = (0..n).filter(|&i| reached[i] && i != pin).collect();
    let m = free.len();
    let mut dirichlet = DMatrix::<f64>::zeros(m, m);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            dirichlet[(a, b)] = laplacian[(i, j)];
        }
    }
    let column: BTreeMap<usize, usize> = free.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    let k = inner.volume();
    let mut centred = DMatrix::<f64>::zeros(k, m);
    for (row, v) in inner.members.iter().enumerate() {
        let Some(&col) = column.get(&index[v]) else { continue };
        for rr in 0..k {
            centred[(rr, col)] -= 1.0 / k as f64;
        }
        centred[(row, col)] += 1.0;
    }
    let chol = dirichlet
        .cholesky()
        .ok_or_else(|| Error::Unsupported("Dirichlet form is singular on the connected component".into()))?;
    let solved = chol.solve(&centred.transpose());
    let gram = &centred * solved;
    let sym = (&gram + gram.transpose()) * 0.5;
    let lambda = SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(0.0, f64::max);
    let rr = (r * r) as f64;
    Ok(report(lambda / rr, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{constant_env, zigzag_1d, ZigzagParams};
    use crate::graph::Geometry;

    #[test]
    fn path_segment_spectral_gap() {
        // on B(0, 2r) with unit weights the inner variance is bounded by the
        // full variance, so C2 r^2 <= 1 / (2 * lambda_1) of the path
        let env = constant_env(Geometry::Line, 1.0).unwrap();
        for r in [2u64, 4, 8] {
            let rep = poincare_constant(&env, 0.0, Vertex::ORIGIN, r).unwrap();
            let n = (4 * r + 1) as f64;
            let gap = 2.0 * (1.0 - (core::f64::consts::PI / n).cos());
            let c2r2 = rep.constant("C2").unwrap() * (r * r) as f64;
            assert!(c2r2 <= 1.0 / (2.0 * gap) + 1e-9, "r {r}: {c2r2}");
            assert!(c2r2 > 0.0);
        }
    }

    #[test]
    fn two_point_ball_closed_form() {
        // r = 1 on the cycle of 5 sites: brute force over a dense grid of f
        let env = constant_env(Geometry::Cycle { n: 5 }, 1.0).unwrap();
        let rep = poincare_constant(&env, 0.0, Vertex::line(0), 1).unwrap();
        let c2 = rep.constant("C2").unwrap();
        let mut best: f64 = 0.0;
        let grid: Vec<f64> = (-4..=4).map(|i| i as f64 / 2.0).collect();
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        let f = [0.0, a, b, c, d];
                        let inner = [f[4], f[0], f[1]];
                        let mean = inner.iter().sum::<f64>() / 3.0;
                        let var: f64 = inner.iter().map(|x| (x - mean) * (x - mean)).sum();
                        let energy: f64 = (0..5).map(|i| 2.0 * (f[i] - f[(i + 1) % 5]).powi(2)).sum();
                        if energy > 0.0 {
                            best = best.max(var / energy);
                        }
                    }
                }
            }
        }
        assert!(best <= c2 + 1e-12);
        assert!(best >= 0.9 * c2);
    }

    #[test]
    fn zigzag_parities_within_form_ratio() {
        let env = zigzag_1d(&ZigzagParams::from_laziness(0.5, 0.25, 0.5).unwrap()).unwrap();
        let a = poincare_constant(&env, 0.0, Vertex::ORIGIN, 4).unwrap().constant("C2").unwrap();
        let b = poincare_constant(&env, 1.0, Vertex::ORIGIN, 4).unwrap().constant("C2").unwrap();
        assert!(a.max(b) / a.min(b) <= 3.0 + 1e-12);
    }

    #[test]
    fn too_large_ball() {
        let env = constant_env(Geometry::HalfSpace, 1.0).unwrap();
        assert!(matches!(poincare_constant(&env, 0.0, Vertex::ORIGIN, 20), Err(Error::Resource(_))));
    }

    #[test]
    fn halfspace_small_ball() {
        let env = constant_env(Geometry::HalfSpace, 1.0).unwrap();
        let rep = poincare_constant(&env, 0.0, Vertex::space(0, 0, 3), 2).unwrap();
        assert!(rep.constant("C2").unwrap().is_finite());
    }
}
