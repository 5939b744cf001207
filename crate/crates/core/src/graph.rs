//! Time-dependent weighted graphs.
//!
//! Geometries are implicit coordinate rules; nothing is materialized. An
//! [`Environment`] couples a geometry with a [`ConductanceSchedule`]: a
//! partition of time into right-continuous segments (the [`Breakpoints`])
//! and a [`WeightRule`] mapping `(segment, edge)` to a conductance.
//! Loop weights take part in `mu(x)` and `P(x, x)` but not in the
//! ellipticity band.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A lattice site. Unused coordinates are zero: the line uses `x`, the
/// half-space `Z^2 x Z_{>=0}` uses all three, the cycle uses `x` in `0..n`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub [i64; 3]);

impl Vertex {
    pub const ORIGIN: Vertex = Vertex([0, 0, 0]);

    pub const fn line(i: i64) -> Self {
        Vertex([i, 0, 0])
    }

    pub const fn space(i: i64, j: i64, k: i64) -> Self {
        Vertex([i, j, k])
    }

    pub const fn x(&self) -> i64 {
        self.0[0]
    }

    pub const fn y(&self) -> i64 {
        self.0[1]
    }

    /// Vertical coordinate on the half-space.
    pub const fn z(&self) -> i64 {
        self.0[2]
    }

    fn shifted(self, axis: usize, delta: i64) -> Self {
        let mut c = self.0;
        c[axis] += delta;
        Vertex(c)
    }

    fn parity(&self) -> i64 {
        (self.0[0] + self.0[1] + self.0[2]).rem_euclid(2)
    }
}

/// Vertex geometry: the infinite line, the half-space `Z^2 x Z_{>=0}`,
/// or a cycle with `n >= 3` sites.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    Line,
    HalfSpace,
    Cycle { n: u32 },
}

/// An unordered nearest-neighbour edge, stored as its lower endpoint and
/// the axis it points along. On the cycle the edge `(n-1, 0)` has base
/// `n-1`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub base: Vertex,
    pub axis: usize,
}

/// Up to six neighbours of a site.
#[derive(Copy, Clone, Debug)]
pub struct Neighbors {
    len: usize,
    items: [Vertex; 6],
}

impl Neighbors {
    fn new() -> Self {
        Neighbors {
            len: 0,
            items: [Vertex::ORIGIN; 6],
        }
    }

    fn push(&mut self, v: Vertex) {
        self.items[self.len] = v;
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.items[..self.len]
    }
}

impl Geometry {
    pub fn dimension(&self) -> usize {
        match self {
            Geometry::Line | Geometry::Cycle { .. } => 1,
            Geometry::HalfSpace => 3,
        }
    }

    /// Maximal vertex degree (6 in the half-space interior).
    pub fn max_degree(&self) -> usize {
        match self {
            Geometry::Line | Geometry::Cycle { .. } => 2,
            Geometry::HalfSpace => 6,
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        match *self {
            Geometry::Line => v.0[1] == 0 && v.0[2] == 0,
            Geometry::HalfSpace => v.0[2] >= 0,
            Geometry::Cycle { n } => v.0[1] == 0 && v.0[2] == 0 && (0..n as i64).contains(&v.0[0]),
        }
    }

    pub fn check(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(domain("vertex", alloc::format!("{v:?} is not a site of {self:?}")))
        }
    }

    pub fn neighbors(&self, v: Vertex) -> Neighbors {
        let mut out = Neighbors::new();
        match *self {
            Geometry::Line => {
                out.push(v.shifted(0, -1));
                out.push(v.shifted(0, 1));
            }
            Geometry::Cycle { n } => {
                let n = n as i64;
                out.push(Vertex::line((v.x() - 1).rem_euclid(n)));
                out.push(Vertex::line((v.x() + 1).rem_euclid(n)));
            }
            Geometry::HalfSpace => {
                out.push(v.shifted(0, -1));
                out.push(v.shifted(0, 1));
                out.push(v.shifted(1, -1));
                out.push(v.shifted(1, 1));
                out.push(v.shifted(2, 1));
                if v.z() > 0 {
                    out.push(v.shifted(2, -1));
                }
            }
        }
        out
    }

    /// The edge joining `x` and `y`, or `None` when they are not adjacent.
    pub fn edge(&self, x: Vertex, y: Vertex) -> Option<Edge> {
        match *self {
            Geometry::Line | Geometry::HalfSpace => {
                let mut axis = None;
                for a in 0..3 {
                    let d = y.0[a] - x.0[a];
                    if d == 0 {
                        continue;
                    }
                    if d.abs() != 1 || axis.is_some() {
                        return None;
                    }
                    axis = Some(a);
                }
                let axis = axis?;
                if *self == Geometry::Line && axis != 0 {
                    return None;
                }
                let base = if x.0[axis] < y.0[axis] { x } else { y };
                if *self == Geometry::HalfSpace && base.z() < 0 {
                    return None;
                }
                Some(Edge { base, axis })
            }
            Geometry::Cycle { n } => {
                let n = n as i64;
                let (a, b) = (x.x(), y.x());
                if (a + 1).rem_euclid(n) == b {
                    Some(Edge { base: x, axis: 0 })
                } else if (b + 1).rem_euclid(n) == a {
                    Some(Edge { base: y, axis: 0 })
                } else {
                    None
                }
            }
        }
    }

    /// Graph distance. On the half-space this is the L1 distance.
    pub fn distance(&self, x: Vertex, y: Vertex) -> u64 {
        match *self {
            Geometry::Line => x.x().abs_diff(y.x()),
            Geometry::HalfSpace => (0..3).map(|a| x.0[a].abs_diff(y.0[a])).sum(),
            Geometry::Cycle { n } => {
                let d = x.x().abs_diff(y.x());
                d.min(n as u64 - d)
            }
        }
    }

    /// Counting-measure volume of `B(x0, r)` without enumerating it.
    pub fn ball_volume(&self, x0: Vertex, r: u64) -> u64 {
        match *self {
            Geometry::Line => 2 * r + 1,
            Geometry::Cycle { n } => (2 * r + 1).min(n as u64),
            Geometry::HalfSpace => {
                let k0 = x0.z().max(0) as u64;
                let lo = k0.saturating_sub(r);
                (lo..=k0 + r)
                    .map(|k| {
                        let s = r - k.abs_diff(k0);
                        2 * s * s + 2 * s + 1
                    })
                    .sum()
            }
        }
    }

    /// All sites at graph distance at most `r` from `x0`.
    pub fn ball(&self, x0: Vertex, r: u64) -> Ball {
        let mut members = Vec::new();
        let ri = r as i64;
        match *self {
            Geometry::Line => members.extend((-ri..=ri).map(|d| Vertex::line(x0.x() + d))),
            Geometry::Cycle { n } => {
                if 2 * r + 1 >= n as u64 {
                    members.extend((0..n as i64).map(Vertex::line));
                } else {
                    members.extend((-ri..=ri).map(|d| Vertex::line((x0.x() + d).rem_euclid(n as i64))));
                    members.sort();
                }
            }
            Geometry::HalfSpace => {
                for k in (x0.z() - ri).max(0)..=x0.z() + ri {
                    let s = ri - (k - x0.z()).abs();
                    for di in -s..=s {
                        let t = s - di.abs();
                        for dj in -t..=t {
                            members.push(Vertex::space(x0.x() + di, x0.y() + dj, k));
                        }
                    }
                }
            }
        }
        Ball {
            center: x0,
            radius: r,
            members,
        }
    }
}

/// A graph-distance ball together with its members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vertex,
    pub radius: u64,
    pub members: Vec<Vertex>,
}

impl Ball {
    /// Counting measure of the ball.
    pub fn volume(&self) -> usize {
        self.members.len()
    }
}

/// Times at which the conductances may change.
///
/// Segment `k` is the half-open interval `[tau_k, tau_{k+1})`; the value
/// at a breakpoint belongs to the segment that starts there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "times", rename_all = "kebab-case")]
pub enum Breakpoints {
    /// A single segment covering all time.
    None,
    /// Integer breakpoints: segment `k` is `[k, k+1)`. Used by discrete-time
    /// environments, which therefore ignore fractional time.
    Unit,
    /// `tau_0 = 0 < tau_1 < ...`; the last segment extends to infinity.
    Explicit(Vec<f64>),
}

impl Breakpoints {
    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        validate_breakpoints(&times)?;
        Ok(Breakpoints::Explicit(times))
    }

    /// Segment containing `t` (right-continuous).
    pub fn segment_at(&self, t: f64) -> usize {
        match self {
            Breakpoints::None => 0,
            Breakpoints::Unit => t.max(0.0).floor() as usize,
            Breakpoints::Explicit(v) => v.partition_point(|&tau| tau <= t).saturating_sub(1),
        }
    }

    /// Segment whose closure contains `t` from the left, i.e. the segment in
    /// force just before `t`. For `t <= 0` this is segment 0.
    pub fn segment_before(&self, t: f64) -> usize {
        match self {
            Breakpoints::None => 0,
            Breakpoints::Unit => (t.ceil() as i64 - 1).max(0) as usize,
            Breakpoints::Explicit(v) => v.partition_point(|&tau| tau < t).saturating_sub(1),
        }
    }

    pub fn segment_start(&self, k: usize) -> f64 {
        match self {
            Breakpoints::None => 0.0,
            Breakpoints::Unit => k as f64,
            Breakpoints::Explicit(v) => v.get(k).copied().unwrap_or(f64::INFINITY),
        }
    }

    /// End of segment `k`; infinite for the last segment.
    pub fn segment_end(&self, k: usize) -> f64 {
        match self {
            Breakpoints::None => f64::INFINITY,
            Breakpoints::Unit => (k + 1) as f64,
            Breakpoints::Explicit(v) => v.get(k + 1).copied().unwrap_or(f64::INFINITY),
        }
    }

    /// Breakpoints strictly inside `(a, b)`, in increasing order.
    pub fn interior(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Breakpoints::None => Vec::new(),
            Breakpoints::Unit => {
                let first = a.floor() as i64 + 1;
                (first.max(0)..)
                    .map(|k| k as f64)
                    .take_while(|&tau| tau < b)
                    .collect()
            }
            Breakpoints::Explicit(v) => v.iter().copied().filter(|&tau| tau > a && tau < b).collect(),
        }
    }
}

pub(crate) fn validate_breakpoints(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(domain("breakpoints", "must contain tau_0 = 0")),
        Some(&t0) if t0 != 0.0 => return Err(domain("breakpoints", "first breakpoint must be 0")),
        _ => {}
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(domain("breakpoints", "must be finite and strictly increasing"));
        }
    }
    Ok(())
}

/// Per-segment edge weights for explicitly tabulated schedules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "weights", rename_all = "kebab-case")]
pub enum SegmentWeights {
    /// Every edge carries the same weight.
    Uniform(f64),
    /// Cycle edges `(i, i+1 mod n)` indexed by `i`.
    CycleEdges(Vec<f64>),
}

/// Maps `(segment, edge)` to a conductance and `(segment, site)` to a loop
/// weight. Segment indices for discrete-time families are integer times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightRule {
    Constant {
        w: f64,
    },
    Zigzag {
        eps: f64,
        b: f64,
        b_prime: f64,
    },
    PoissonShift {
        eps: f64,
    },
    HalfspaceDiscrete {
        eps: f64,
        b: f64,
        b_prime: f64,
        f: f64,
        f_prime: f64,
    },
    HalfspaceCsrw {
        eps: f64,
    },
    Piecewise {
        segments: Vec<SegmentWeights>,
    },
    /// Reindexes segments of another rule; used by time reversal.
    Remapped {
        inner: Box<WeightRule>,
        map: Vec<usize>,
    },
}

fn odd(v: i64) -> bool {
    v.rem_euclid(2) == 1
}

impl WeightRule {
    /// Conductance of `edge` during segment `seg`.
    pub fn edge_weight(&self, seg: usize, edge: Edge) -> f64 {
        let b = edge.base;
        let s = seg as i64;
        match self {
            WeightRule::Constant { w } => *w,
            WeightRule::Zigzag { eps, .. } => {
                // right edge of site i: 1+eps when t+i is even
                if odd(s + b.x()) {
                    1.0 - eps
                } else {
                    1.0 + eps
                }
            }
            WeightRule::PoissonShift { eps } => match (b.x() - s).rem_euclid(3) {
                0 => 1.0 - eps,
                1 => 1.0,
                _ => 1.0 + eps,
            },
            WeightRule::HalfspaceDiscrete { eps, .. } => {
                if edge.axis == 2 {
                    if odd(s + b.x() + b.y() + b.z()) {
                        1.0 + eps
                    } else {
                        1.0 - eps
                    }
                } else if b.z() > 0 {
                    1.0
                } else {
                    0.0
                }
            }
            WeightRule::HalfspaceCsrw { eps } => {
                let up = odd(s + b.z());
                match (edge.axis == 2, up) {
                    (true, true) => 1.0 + eps,
                    (true, false) => 1.0 - eps,
                    (false, true) => 1.0 + eps / 2.0,
                    (false, false) => 1.0 - eps / 2.0,
                }
            }
            WeightRule::Piecewise { segments } => match &segments[seg.min(segments.len() - 1)] {
                SegmentWeights::Uniform(w) => *w,
                SegmentWeights::CycleEdges(ws) => ws[b.x() as usize],
            },
            WeightRule::Remapped { inner, map } => inner.edge_weight(map[seg.min(map.len() - 1)], edge),
        }
    }

    /// Loop weight `mu(x, x)` during segment `seg`.
    pub fn loop_weight(&self, seg: usize, x: Vertex) -> f64 {
        let s = seg as i64;
        match self {
            WeightRule::Zigzag { b, b_prime, .. } => {
                if odd(s + x.x()) {
                    *b_prime
                } else {
                    *b
                }
            }
            WeightRule::HalfspaceDiscrete {
                b, b_prime, f, f_prime, ..
            } => {
                let odd_phase = odd(s + x.parity());
                match (x.z() > 0, odd_phase) {
                    (true, true) => *b,
                    (true, false) => *b_prime,
                    (false, true) => *f,
                    (false, false) => *f_prime,
                }
            }
            WeightRule::Remapped { inner, map } => inner.loop_weight(map[seg.min(map.len() - 1)], x),
            _ => 0.0,
        }
    }

    /// Whether `edge` belongs to the graph for this family. The discrete
    /// half-space construction removes the horizontal floor edges.
    pub fn is_structural(&self, edge: Edge) -> bool {
        match self {
            WeightRule::HalfspaceDiscrete { .. } => edge.axis == 2 || edge.base.z() > 0,
            WeightRule::Remapped { inner, .. } => inner.is_structural(edge),
            _ => true,
        }
    }

    /// Supremum over all sites of `mu(x)` (loops included) in segment `seg`.
    pub fn rate_bound(&self, seg: usize, geometry: Geometry) -> f64 {
        match self {
            WeightRule::Constant { w } => geometry.max_degree() as f64 * w,
            WeightRule::Zigzag { b, b_prime, .. } => 2.0 + b.max(*b_prime),
            WeightRule::PoissonShift { eps } => 2.0 + eps.abs(),
            WeightRule::HalfspaceDiscrete {
                eps, b, b_prime, f, f_prime,
            } => (6.0 + b.max(*b_prime)).max(1.0 + eps + f).max(1.0 - eps + f_prime),
            WeightRule::HalfspaceCsrw { eps } => 6.0 + 2.0 * eps.abs(),
            WeightRule::Piecewise { segments } => match &segments[seg.min(segments.len() - 1)] {
                SegmentWeights::Uniform(w) => geometry.max_degree() as f64 * w,
                SegmentWeights::CycleEdges(ws) => {
                    let n = ws.len();
                    (0..n).map(|i| ws[i] + ws[(i + n - 1) % n]).fold(0.0, f64::max)
                }
            },
            WeightRule::Remapped { inner, map } => inner.rate_bound(map[seg.min(map.len() - 1)], geometry),
        }
    }
}

/// Breakpoints plus the weight rule evaluated on each segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceSchedule {
    pub breakpoints: Breakpoints,
    pub rule: WeightRule,
}

/// The weighted neighbourhood of a site at one instant.
#[derive(Copy, Clone, Debug)]
pub struct Star {
    pub center: Vertex,
    len: usize,
    neighbors: [Vertex; 6],
    weights: [f64; 6],
    pub loop_weight: f64,
    /// `mu(x)`: all incident edge weights plus the loop weight.
    pub total: f64,
}

impl Star {
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.neighbors[..self.len].iter().copied().zip(self.weights[..self.len].iter().copied())
    }

    /// Total weight of the non-loop edges; the VSRW jump rate off `x`.
    pub fn off_diagonal(&self) -> f64 {
        self.weights[..self.len].iter().sum()
    }

    pub fn weight_to(&self, y: Vertex) -> f64 {
        if y == self.center {
            return self.loop_weight;
        }
        self.edges().find(|(v, _)| *v == y).map_or(0.0, |(_, w)| w)
    }

    pub fn prob(&self, y: Vertex) -> f64 {
        self.weight_to(y) / self.total
    }

    /// Picks a target with probability `P(x, .)`; `u` is uniform on `[0, 1)`.
    pub fn sample(&self, u: f64) -> Vertex {
        let mut level = u * self.total;
        for (v, w) in self.edges() {
            if level < w {
                return v;
            }
            level -= w;
        }
        if self.loop_weight > 0.0 || self.len == 0 {
            self.center
        } else {
            self.neighbors[self.len - 1]
        }
    }
}

/// A geometry with a uniformly elliptic, right-continuous conductance
/// schedule. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub geometry: Geometry,
    pub schedule: ConductanceSchedule,
    /// Declared ellipticity constant `c1`: every edge weight lies in `[c1, 1/c1]`.
    pub ellipticity: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain("t", "time must be finite and nonnegative"))
    }
}

impl Environment {
    pub fn new(geometry: Geometry, schedule: ConductanceSchedule, ellipticity: f64) -> Result<Self> {
        if !(ellipticity > 0.0 && ellipticity <= 1.0) {
            return Err(domain("c1", "ellipticity constant must lie in (0, 1]"));
        }
        if let Geometry::Cycle { n } = geometry {
            if n < 3 {
                return Err(domain("n", "cycle needs at least 3 sites"));
            }
        }
        if let Breakpoints::Explicit(times) = &schedule.breakpoints {
            validate_breakpoints(times)?;
        }
        Ok(Environment {
            geometry,
            schedule,
            ellipticity,
        })
    }

    pub fn rule(&self) -> &WeightRule {
        &self.schedule.rule
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.schedule.breakpoints
    }

    pub fn segment_at(&self, t: f64) -> usize {
        self.schedule.breakpoints.segment_at(t)
    }

    /// Conductance `mu^(t)(x, y)`. Non-adjacent pairs give a structural zero;
    /// `x == y` gives the loop weight.
    pub fn conductance(&self, t: f64, x: Vertex, y: Vertex) -> Result<f64> {
        check_time(t)?;
        self.geometry.check(x)?;
        self.geometry.check(y)?;
        let seg = self.segment_at(t);
        if x == y {
            return Ok(self.schedule.rule.loop_weight(seg, x));
        }
        Ok(self.geometry.edge(x, y).map_or(0.0, |e| self.segment_edge_weight(seg, e)))
    }

    /// Edge weight in a segment, zero for edges the family removes.
    pub fn segment_edge_weight(&self, seg: usize, edge: Edge) -> f64 {
        if self.schedule.rule.is_structural(edge) {
            self.schedule.rule.edge_weight(seg, edge)
        } else {
            0.0
        }
    }

    /// `mu^(t)(x) = sum_y mu^(t)(x, y)`, loops included.
    pub fn mu_total(&self, t: f64, x: Vertex) -> Result<f64> {
        check_time(t)?;
        self.geometry.check(x)?;
        Ok(self.star_in_segment(self.segment_at(t), x).total)
    }

    /// `P^(t)(x, y) = mu^(t)(x, y) / mu^(t)(x)`.
    pub fn transition_prob(&self, t: f64, x: Vertex, y: Vertex) -> Result<f64> {
        let w = self.conductance(t, x, y)?;
        Ok(w / self.mu_total(t, x)?)
    }

    pub fn star(&self, t: f64, x: Vertex) -> Star {
        self.star_in_segment(self.segment_at(t), x)
    }

    /// Weighted neighbourhood of `x` in segment `seg`; zero-weight edges are
    /// omitted.
    pub fn star_in_segment(&self, seg: usize, x: Vertex) -> Star {
        let rule = &self.schedule.rule;
        let mut star = Star {
            center: x,
            len: 0,
            neighbors: [x; 6],
            weights: [0.0; 6],
            loop_weight: rule.loop_weight(seg, x),
            total: 0.0,
        };
        let mut total = star.loop_weight;
        for &y in self.geometry.neighbors(x).as_slice() {
            let Some(edge) = self.geometry.edge(x, y) else { continue };
            let w = self.segment_edge_weight(seg, edge);
            if w > 0.0 {
                star.neighbors[star.len] = y;
                star.weights[star.len] = w;
                star.len += 1;
                total += w;
            }
        }
        star.total = total;
        star
    }

    /// Upper bound on `mu^(t)(x)` over all sites for `t` in segment `seg`.
    pub fn rate_bound(&self, seg: usize) -> f64 {
        self.schedule.rule.rate_bound(seg, self.geometry)
    }

    pub fn ball(&self, x0: Vertex, r: u64) -> Ball {
        self.geometry.ball(x0, r)
    }

    /// Checks every structural edge touching `region` against `[c1, 1/c1]`
    /// at each sample time.
    pub fn verify_ellipticity(&self, sample_times: &[f64], region: &Ball) -> Result<EllipticityReport> {
        if region.members.is_empty() {
            return Err(domain("box", "region must be nonempty"));
        }
        let c1 = self.ellipticity;
        let (lo, hi) = (c1, 1.0 / c1);
        // tolerate representation error in 1/c1
        let slack = 1e-12;
        let mut report = EllipticityReport {
            c1,
            min_weight: f64::INFINITY,
            max_weight: 0.0,
            pass: true,
            first_violation: None,
        };
        for &t in sample_times {
            check_time(t)?;
            let seg = self.segment_at(t);
            for &x in &region.members {
                for &y in self.geometry.neighbors(x).as_slice() {
                    let Some(edge) = self.geometry.edge(x, y) else { continue };
                    if !self.schedule.rule.is_structural(edge) {
                        continue;
                    }
                    let w = self.schedule.rule.edge_weight(seg, edge);
                    report.min_weight = report.min_weight.min(w);
                    report.max_weight = report.max_weight.max(w);
                    if (w < lo - slack || w > hi + slack) && report.first_violation.is_none() {
                        report.pass = false;
                        report.first_violation = Some(Violation { t, x, y, weight: w });
                    }
                }
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub x: Vertex,
    pub y: Vertex,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub c1: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    pub pass: bool,
    pub first_violation: Option<Violation>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn zigzag(eps: f64, b: f64, b_prime: f64) -> Environment {
        Environment::new(
            Geometry::Line,
            ConductanceSchedule {
                breakpoints: Breakpoints::Unit,
                rule: WeightRule::Zigzag { eps, b, b_prime },
            },
            1.0 - eps,
        )
        .unwrap()
    }

    #[test]
    fn zigzag_conductance_alternates_with_parity() {
        let env = zigzag(0.5, 0.0, 0.0);
        assert_eq!(env.conductance(0.0, Vertex::line(0), Vertex::line(1)).unwrap(), 1.5);
        assert_eq!(env.conductance(1.0, Vertex::line(0), Vertex::line(1)).unwrap(), 0.5);
        // fractional time is ignored by discrete-time schedules
        assert_eq!(env.conductance(0.7, Vertex::line(0), Vertex::line(1)).unwrap(), 1.5);
    }

    #[test]
    fn non_adjacent_pair_is_structural_zero() {
        let env = zigzag(0.5, 0.0, 0.0);
        assert_eq!(env.conductance(0.0, Vertex::line(0), Vertex::line(5)).unwrap(), 0.0);
    }

    #[test]
    fn negative_time_is_rejected() {
        let env = zigzag(0.5, 0.0, 0.0);
        assert!(matches!(
            env.conductance(-1.0, Vertex::line(0), Vertex::line(1)),
            Err(crate::Error::Domain { field: "t", .. })
        ));
    }

    #[test]
    fn mu_total_includes_loop() {
        let env = zigzag(0.5, 2.0 / 3.0, 2.0 / 3.0);
        for t in 0..4 {
            for x in -3..3 {
                let mu = env.mu_total(t as f64, Vertex::line(x)).unwrap();
                assert!((mu - (2.0 + 2.0 / 3.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn transition_probs_of_non_lazy_zigzag() {
        let env = zigzag(0.5, 0.0, 0.0);
        let x = Vertex::line(2);
        assert_eq!(env.transition_prob(0.0, x, Vertex::line(3)).unwrap(), 0.75);
        assert_eq!(env.transition_prob(0.0, x, Vertex::line(1)).unwrap(), 0.25);
    }

    #[test]
    fn ellipticity_pass_and_fail() {
        let env = zigzag(0.5, 0.0, 0.0);
        let region = env.ball(Vertex::ORIGIN, 10);
        let ok = env.verify_ellipticity(&[0.0, 1.0, 2.0], &region).unwrap();
        assert!(ok.pass);
        assert_eq!((ok.min_weight, ok.max_weight), (0.5, 1.5));

        let mut strict = env.clone();
        strict.ellipticity = 0.6;
        let bad = strict.verify_ellipticity(&[0.0, 1.0], &region).unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.first_violation.unwrap().weight, 0.5);
    }

    #[test]
    fn ball_counts() {
        assert_eq!(Geometry::Line.ball(Vertex::line(3), 0).members, vec![Vertex::line(3)]);
        assert_eq!(Geometry::Line.ball(Vertex::ORIGIN, 5).volume(), 11);
        let hs = Geometry::HalfSpace.ball(Vertex::ORIGIN, 1);
        assert_eq!(hs.volume(), 6);
        for r in 0..8 {
            for c in [Vertex::ORIGIN, Vertex::space(1, -2, 3)] {
                let b = Geometry::HalfSpace.ball(c, r);
                assert_eq!(b.volume() as u64, Geometry::HalfSpace.ball_volume(c, r));
                assert!(b.members.iter().all(|&v| Geometry::HalfSpace.distance(c, v) <= r));
            }
        }
        assert_eq!(Geometry::Cycle { n: 7 }.ball(Vertex::line(0), 5).volume(), 7);
        assert_eq!(Geometry::Cycle { n: 20 }.ball(Vertex::line(0), 2).volume(), 5);
    }

    #[test]
    fn ball_members_match_brute_force_distance() {
        let g = Geometry::HalfSpace;
        let c = Vertex::space(0, 0, 2);
        let r = 3;
        let mut brute = Vec::new();
        for i in -5..=5 {
            for j in -5..=5 {
                for k in 0..=6 {
                    let v = Vertex::space(i, j, k);
                    if g.distance(c, v) <= r {
                        brute.push(v);
                    }
                }
            }
        }
        let mut got = g.ball(c, r).members;
        got.sort();
        brute.sort();
        assert_eq!(got, brute);
    }

    #[test]
    fn breakpoint_lookup_is_right_continuous() {
        let bp = Breakpoints::explicit(vec![0.0, 1.5, 4.0]).unwrap();
        assert_eq!(bp.segment_at(0.0), 0);
        assert_eq!(bp.segment_at(1.4999), 0);
        assert_eq!(bp.segment_at(1.5), 1);
        assert_eq!(bp.segment_at(100.0), 2);
        assert_eq!(bp.segment_before(1.5), 0);
        assert_eq!(bp.segment_before(1.6), 1);
        assert_eq!(Breakpoints::Unit.segment_before(3.0), 2);
        assert_eq!(Breakpoints::Unit.segment_at(3.0), 3);
        assert_eq!(Breakpoints::Unit.interior(0.0, 3.0), vec![1.0, 2.0]);
        assert!(Breakpoints::explicit(vec![0.0, 2.0, 1.0]).is_err());
        assert!(Breakpoints::explicit(vec![0.5]).is_err());
    }

    #[test]
    fn cycle_edges_wrap() {
        let g = Geometry::Cycle { n: 5 };
        let e = g.edge(Vertex::line(4), Vertex::line(0)).unwrap();
        assert_eq!(e.base, Vertex::line(4));
        assert!(g.edge(Vertex::line(0), Vertex::line(2)).is_none());
        assert_eq!(g.distance(Vertex::line(0), Vertex::line(4)), 1);
    }

    #[test]
    fn star_sampling_covers_all_targets() {
        let env = zigzag(0.5, 1.0, 1.0);
        let star = env.star(0.0, Vertex::ORIGIN);
        // weights: left 0.5, right 1.5, loop 1 (order: left, right, loop)
        assert_eq!(star.sample(0.0), Vertex::line(-1));
        assert_eq!(star.sample(0.2), Vertex::line(1));
        assert_eq!(star.sample(0.9), Vertex::ORIGIN);
        assert_eq!(star.sample(0.999_999_999), Vertex::ORIGIN);
    }
}
