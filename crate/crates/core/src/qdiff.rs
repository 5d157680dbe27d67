//! Holomorphic quadratic differentials `φ dz²`: zeros, natural parameter,
//! trajectory tracing, φ-length and the minimality test for vertical arcs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::HopfField;
use crate::examples::HopfClosedForm;
use crate::geometry::{DomainSpec, Lattice, LatticeKind, Layout};
use crate::grid::interpolate;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Vertical,
    Horizontal,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(TrajectoryKind::Vertical),
            "horizontal" => Ok(TrajectoryKind::Horizontal),
            _ => Err(Error::Parameter(format!("unknown trajectory kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HitBoundary,
    NearCriticalPoint,
    MaxLength,
    ClosedLoop,
}

#[derive(Debug, Clone)]
enum Source {
    Closed(HopfClosedForm),
    Sampled { layout: Layout, samples: Vec<C64> },
}

/// An evaluable `φ` on a domain together with its zeros.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    source: Source,
    pub domain: DomainSpec,
    pub zeros: Vec<C64>,
    /// Candidates where Newton refinement failed.
    pub unresolved: Vec<C64>,
    /// Tracing stops where `|φ|` drops below this value.
    pub critical_tolerance: f64,
}

/// Zeros found by [`find_zeros`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZeroReport {
    pub zeros: Vec<C64>,
    pub unresolved: Vec<C64>,
}

impl PhiFunction {
    pub fn closed(form: HopfClosedForm, domain: DomainSpec) -> Self {
        Self::build(Source::Closed(form), domain)
    }

    /// Bilinear interpolation of a sampled Hopf field.
    pub fn sampled(field: &HopfField) -> Self {
        Self::build(Source::Sampled { layout: field.layout, samples: field.phi.clone() }, field.domain)
    }

    fn build(source: Source, domain: DomainSpec) -> Self {
        let mut phi = PhiFunction { source, domain, zeros: vec![], unresolved: vec![], critical_tolerance: 0.0 };
        phi.critical_tolerance = 1e-6 * phi.median_modulus();
        let report = find_zeros(&phi, &domain);
        phi.zeros = report.zeros;
        phi.unresolved = report.unresolved;
        phi
    }

    pub fn closed_form(&self) -> Option<HopfClosedForm> {
        match self.source {
            Source::Closed(f) => Some(f),
            Source::Sampled { .. } => None,
        }
    }

    /// `φ(z)` for `z` in the open domain.
    pub fn eval(&self, z: C64) -> Option<C64> {
        if !self.domain.contains_open(z) {
            return None;
        }
        self.eval_unchecked(z)
    }

    /// Evaluation without the domain check; closed forms extend to the plane.
    fn eval_unchecked(&self, z: C64) -> Option<C64> {
        let v = match &self.source {
            Source::Closed(f) => f.eval(z),
            Source::Sampled { layout, samples } => interpolate(layout, samples, z)?,
        };
        v.is_finite().then_some(v)
    }

    fn derivative(&self, z: C64) -> Option<C64> {
        match &self.source {
            Source::Closed(f) => Some(f.derivative(z)),
            Source::Sampled { layout, .. } => {
                let h = 1e-3 * layout.cell_size();
                let dx = (self.eval_unchecked(z + h)? - self.eval_unchecked(z - h)?) / (2.0 * h);
                Some(dx)
            }
        }
    }

    /// Median of `|φ|` over the nodes of a 64×64 lattice on the domain.
    pub fn median_modulus(&self) -> f64 {
        let kind = match self.domain {
            DomainSpec::Rectangle { .. } => LatticeKind::Cartesian,
            _ => LatticeKind::Polar,
        };
        let layout = Lattice::new(kind, 64, 64).and_then(|l| l.layout(&self.domain)).expect("valid lattice");
        let mut m: Vec<f64> = (0..layout.len())
            .filter(|&k| layout.inside(k))
            .filter_map(|k| self.eval_unchecked(layout.node(k)).map(|v| v.norm()))
            .collect();
        if m.is_empty() {
            return 0.0;
        }
        m.sort_by(f64::total_cmp);
        m[m.len() / 2]
    }

    fn is_critical(&self, z: C64, value: C64, radius: f64) -> bool {
        value.norm() < self.critical_tolerance || self.zeros.iter().any(|w| (w - z).norm() < radius)
    }
}

/// Zeros of `φ` in the open domain: cells of a coarse 64×64 lattice with
/// positive winding number seed Newton's method.
pub fn find_zeros(phi: &PhiFunction, domain: &DomainSpec) -> ZeroReport {
    const N: usize = 64;
    const EDGE: usize = 16;
    let (x0, x1, y0, y1) = domain.bounding_box();
    let (dx, dy) = ((x1 - x0) / N as f64, (y1 - y0) / N as f64);
    let cells: Vec<(usize, usize)> = (0..N).flat_map(|i| (0..N).map(move |j| (i, j))).collect();
    let candidates: Vec<(C64, f64)> = cells
        .par_iter()
        .filter_map(|&(i, j)| {
            let a = C64::new(x0 + i as f64 * dx, y0 + j as f64 * dy);
            let corners = [a, a + dx, a + C64::new(dx, dy), a + C64::new(0.0, dy)];
            let mut winding = 0.0;
            let mut scale = 0.0f64;
            let mut prev = phi.eval_unchecked(corners[0])?;
            for e in 0..4 {
                let (p, q) = (corners[e], corners[(e + 1) % 4]);
                for s in 1..=EDGE {
                    let v = phi.eval_unchecked(p + (q - p) * (s as f64 / EDGE as f64))?;
                    if v.norm() == 0.0 {
                        return Some((p + (q - p) * (s as f64 / EDGE as f64), scale.max(1.0)));
                    }
                    winding += (v / prev).arg();
                    scale = scale.max(v.norm());
                    prev = v;
                }
            }
            (winding > std::f64::consts::PI).then(|| (a + 0.5 * C64::new(dx, dy), scale))
        })
        .collect();

    let mut report = ZeroReport::default();
    for (start, scale) in candidates {
        match newton(phi, start, scale) {
            Some(z) => {
                if domain.contains_open(z) && !report.zeros.iter().any(|w| (w - z).norm() < 1e-8) {
                    report.zeros.push(z);
                }
            }
            None => report.unresolved.push(start),
        }
    }
    report
}

fn newton(phi: &PhiFunction, mut z: C64, scale: f64) -> Option<C64> {
    for _ in 0..60 {
        let v = phi.eval_unchecked(z)?;
        if v.norm() <= 1e-10 * scale {
            return Some(z);
        }
        let d = phi.derivative(z)?;
        if d.norm() == 0.0 {
            return None;
        }
        z -= v / d;
    }
    let v = phi.eval_unchecked(z)?;
    (v.norm() <= 1e-10 * scale).then_some(z)
}

/// A traced trajectory. `points` run from the backward end through the seed
/// to the forward end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub points: Vec<C64>,
    pub step: f64,
    pub phi_length: f64,
    /// φ-length from the first point to each point.
    pub cum_phi_length: Vec<f64>,
    pub seed_index: usize,
    /// `ClosedLoop` for closed trajectories, otherwise the forward-end reason.
    pub termination: Termination,
    /// Stop reasons at the backward and the forward end.
    pub ends: [Termination; 2],
}

/// Unit direction with `v²φ` negative (vertical) or positive (horizontal),
/// sign chosen to continue `prev`.
fn direction(kind: TrajectoryKind, value: C64, prev: C64) -> C64 {
    let arg = match kind {
        TrajectoryKind::Vertical => 0.5 * (std::f64::consts::PI - value.arg()),
        TrajectoryKind::Horizontal => -0.5 * value.arg(),
    };
    let v = C64::from_polar(1.0, arg);
    if (v * prev.conj()).re >= 0.0 {
        v
    } else {
        -v
    }
}

fn seed_direction(kind: TrajectoryKind, value: C64) -> C64 {
    let v = direction(kind, value, C64::new(1.0, 0.0));
    let key = match kind {
        TrajectoryKind::Vertical => v.im,
        TrajectoryKind::Horizontal => v.re,
    };
    let tie = key.abs() <= 1e-14;
    if (tie && v.re >= 0.0) || (!tie && key > 0.0) {
        v
    } else {
        -v
    }
}

struct Tracer<'a> {
    phi: &'a PhiFunction,
    kind: TrajectoryKind,
}

impl Tracer<'_> {
    fn field(&self, z: C64, prev: C64) -> Option<C64> {
        Some(direction(self.kind, self.phi.eval(z)?, prev))
    }

    /// One RK4 step of length `h`; returns the new point and direction.
    fn rk4(&self, z: C64, d: C64, h: f64) -> Option<(C64, C64)> {
        let k1 = self.field(z, d)?;
        let k2 = self.field(z + 0.5 * h * k1, k1)?;
        let k3 = self.field(z + 0.5 * h * k2, k2)?;
        let k4 = self.field(z + h * k3, k3)?;
        let zn = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let dn = self.field(zn, k4)?;
        Some((zn, dn))
    }

    fn segment_length(&self, a: C64, b: C64) -> f64 {
        let m = self.phi.eval_unchecked(0.5 * (a + b)).unwrap_or(C64::new(0.0, 0.0));
        m.norm().sqrt() * (b - a).norm()
    }

    /// Traces from `seed` along `d0` until a stop condition.
    fn run(&self, seed: C64, d0: C64, step: f64, max_len: f64, detect_loop: bool) -> (Vec<C64>, Termination) {
        let max_steps = ((20.0 * self.phi.domain.diameter() / step) as usize).clamp(1000, 20_000_000);
        let mut pts = vec![seed];
        let (mut z, mut d, mut len, mut travelled) = (seed, d0, 0.0, 0.0);
        for _ in 0..max_steps {
            let next = self.rk4(z, d, step).filter(|(zn, _)| self.phi.domain.contains_open(*zn));
            let Some((zn, dn)) = next else {
                // Bisect the step length to land just inside the boundary.
                let (mut lo, mut hi) = (0.0, step);
                let mut best = z;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    match self.rk4(z, d, mid).filter(|(zn, _)| self.phi.domain.contains_open(*zn)) {
                        Some((zn, _)) => {
                            lo = mid;
                            best = zn;
                        }
                        None => hi = mid,
                    }
                }
                if best != z {
                    pts.push(best);
                }
                return (pts, Termination::HitBoundary);
            };
            let piece = self.segment_length(z, zn);
            if len + piece >= max_len {
                let f = if piece > 0.0 { (max_len - len) / piece } else { 1.0 };
                pts.push(z + f * (zn - z));
                return (pts, Termination::MaxLength);
            }
            if detect_loop && travelled > 3.0 * step && point_segment_distance(seed, z, zn) < step {
                let angle = (dn * d0.conj()).arg().abs();
                if angle < 5f64.to_radians() {
                    pts.push(seed);
                    return (pts, Termination::ClosedLoop);
                }
            }
            len += piece;
            travelled += (zn - z).norm();
            pts.push(zn);
            let value = self.phi.eval(zn).unwrap_or(C64::new(0.0, 0.0));
            if self.phi.is_critical(zn, value, step) {
                return (pts, Termination::NearCriticalPoint);
            }
            z = zn;
            d = dn;
        }
        (pts, Termination::MaxLength)
    }
}

fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sqr() > 0.0 { (((p - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
    (a + t * ab - p).norm()
}

/// Traces the trajectory of `kind` through `seed` with unit-speed RK4 steps
/// of arc length `step`, in both directions. Each direction stops at the
/// boundary, near a zero of `φ`, after φ-length `max_phi_length`, or when
/// the curve closes up on the seed.
pub fn trace_trajectory(
    phi: &PhiFunction,
    seed: C64,
    kind: TrajectoryKind,
    step: f64,
    max_phi_length: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !(max_phi_length > 0.0) {
        return Err(Error::Parameter("step and max_phi_length must be positive".into()));
    }
    let value = phi.eval(seed).ok_or(Error::OutsideDomain(seed))?;
    if phi.is_critical(seed, value, step) {
        return Err(Error::SingularPoint(seed));
    }
    let tracer = Tracer { phi, kind };
    let d0 = seed_direction(kind, value);
    let (forward, fwd_end) = tracer.run(seed, d0, step, max_phi_length, true);
    let (points, ends, seed_index) = if fwd_end == Termination::ClosedLoop {
        (forward, [Termination::ClosedLoop; 2], 0)
    } else {
        let (mut backward, back_end) = tracer.run(seed, -d0, step, max_phi_length, false);
        backward.reverse();
        let seed_index = backward.len() - 1;
        backward.extend_from_slice(&forward[1..]);
        (backward, [back_end, fwd_end], seed_index)
    };
    let mut cum = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in points.windows(2) {
        acc += tracer.segment_length(w[0], w[1]);
        cum.push(acc);
    }
    Ok(Trajectory {
        kind,
        points,
        step,
        phi_length: acc,
        cum_phi_length: cum,
        seed_index,
        termination: if ends[1] == Termination::ClosedLoop { Termination::ClosedLoop } else { ends[1] },
        ends,
    })
}

/// Traces independent seeds in parallel; results keep the seed order.
pub fn trace_many(
    phi: &PhiFunction,
    seeds: &[C64],
    kind: TrajectoryKind,
    step: f64,
    max_phi_length: f64,
) -> Vec<Result<Trajectory>> {
    seeds.par_iter().map(|&s| trace_trajectory(phi, s, kind, step, max_phi_length)).collect()
}

/// Worst direction defect along a polyline: `max |Im(Δz²φ)| / |Δz²φ|` and
/// `max Re(Δz²φ)/|Δz²φ|` (negative for a good vertical trace).
#[derive(Debug, Clone, Copy)]
pub struct DirectionDefect {
    pub max_relative_imaginary: f64,
    pub max_relative_real: f64,
}

impl Trajectory {
    /// Euclidean arc length from the first point to each point.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        t.push(0.0);
        for w in self.points.windows(2) {
            acc += (w[1] - w[0]).norm();
            t.push(acc);
        }
        t
    }

    /// `(t, x, y, cum_phi_length)` per point.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.arc_lengths()
            .into_iter()
            .zip(&self.points)
            .zip(&self.cum_phi_length)
            .map(|((t, z), c)| (t, z.re, z.im, *c))
    }

    pub fn direction_defect(&self, phi: &PhiFunction) -> DirectionDefect {
        let sign = match self.kind {
            TrajectoryKind::Vertical => 1.0,
            TrajectoryKind::Horizontal => -1.0,
        };
        let mut out = DirectionDefect { max_relative_imaginary: 0.0, max_relative_real: f64::NEG_INFINITY };
        for w in self.points.windows(2) {
            let dz = w[1] - w[0];
            let Some(v) = phi.eval_unchecked(0.5 * (w[0] + w[1])) else { continue };
            let q = dz * dz * v;
            if q.norm() == 0.0 {
                continue;
            }
            out.max_relative_imaginary = out.max_relative_imaginary.max(q.im.abs() / q.norm());
            out.max_relative_real = out.max_relative_real.max(sign * q.re / q.norm());
        }
        out
    }

    /// Projection of `z` onto the polyline: `(arc-length parameter, distance)`.
    pub fn project(&self, z: C64) -> (f64, f64) {
        let t = self.arc_lengths();
        let mut best = (0.0, f64::INFINITY);
        for (k, w) in self.points.windows(2).enumerate() {
            let ab = w[1] - w[0];
            let l2 = ab.norm_sqr();
            let s = if l2 > 0.0 { (((z - w[0]) * ab.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
            let d = (w[0] + s * ab - z).norm();
            if d < best.1 {
                best = (t[k] + s * l2.sqrt(), d);
            }
        }
        best
    }

    /// The sub-polyline between arc-length parameters `s0 ≤ s1`.
    pub fn sub_path(&self, s0: f64, s1: f64) -> Vec<C64> {
        let t = self.arc_lengths();
        let at = |s: f64| -> C64 {
            let k = t.partition_point(|&x| x <= s).clamp(1, t.len() - 1);
            let (a, b) = (self.points[k - 1], self.points[k]);
            let span = t[k] - t[k - 1];
            let f = if span > 0.0 { ((s - t[k - 1]) / span).clamp(0.0, 1.0) } else { 0.0 };
            a + f * (b - a)
        };
        let mut out = vec![at(s0)];
        out.extend(self.points.iter().zip(&t).filter(|(_, &x)| x > s0 && x < s1).map(|(p, _)| *p));
        out.push(at(s1));
        out
    }
}

/// `∫ |φ|^{1/2} |dz|` along a polyline by the composite midpoint rule.
pub fn phi_length(path: &[C64], phi: &PhiFunction) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let v = phi.eval_unchecked(m).ok_or(Error::OutsideDomain(m))?;
        total += v.norm().sqrt() * (w[1] - w[0]).norm();
    }
    Ok(total)
}

/// `Φ = ∫ √φ dz` accumulated along a path.
#[derive(Debug, Clone)]
pub struct NaturalParameter {
    pub values: Vec<C64>,
    /// The root of `φ(path[0])` that was continued.
    pub initial_branch: C64,
    /// Value assigned to `Φ(path[0])`.
    pub offset: C64,
}

/// Natural parameter along `path` with Simpson's rule per segment; the
/// square root is continued by choosing, at each sample, the root closer in
/// angle to the previous one. Starts from the principal root with `Φ = 0`.
pub fn natural_parameter(phi: &PhiFunction, path: &[C64]) -> Result<NaturalParameter> {
    let root_at = |z: C64, prev: Option<C64>| -> Result<C64> {
        let v = phi.eval_unchecked(z).ok_or(Error::OutsideDomain(z))?;
        if v.norm() <= phi.critical_tolerance {
            return Err(Error::Branch(z));
        }
        let r = v.sqrt();
        Ok(match prev {
            Some(p) if (r * p.conj()).re < 0.0 => -r,
            _ => r,
        })
    };
    let first = *path.first().ok_or_else(|| Error::Parameter("empty path".into()))?;
    let initial_branch = root_at(first, None)?;
    let offset = C64::new(0.0, 0.0);
    let mut values = vec![offset];
    let (mut acc, mut prev) = (offset, initial_branch);
    for w in path.windows(2) {
        let m = root_at(0.5 * (w[0] + w[1]), Some(prev))?;
        let b = root_at(w[1], Some(m))?;
        acc += (w[1] - w[0]) / 6.0 * (prev + 4.0 * m + b);
        values.push(acc);
        prev = b;
    }
    Ok(NaturalParameter { values, initial_branch, offset })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalityRecord {
    pub arc_length: f64,
    pub competitor_length: f64,
    pub pass: bool,
}

/// Compares the φ-length of the arc `s ∈ [s0, s1]` of a vertical trajectory
/// with a competitor joining the two remaining pieces of the trajectory.
pub fn minimality_test(
    phi: &PhiFunction,
    trajectory: &Trajectory,
    arc: (f64, f64),
    competitor: &[C64],
) -> Result<MinimalityRecord> {
    let (s0, s1) = arc;
    if trajectory.kind != TrajectoryKind::Vertical || !(s0 < s1) {
        return Err(Error::Precondition("needs a vertical trajectory and s0 < s1".into()));
    }
    let (Some(&a), Some(&b)) = (competitor.first(), competitor.last()) else {
        return Err(Error::Precondition("empty competitor".into()));
    };
    if !phi.domain.contains(a) || !phi.domain.contains(b) {
        return Err(Error::Precondition("competitor endpoints must lie in the domain".into()));
    }
    let tol = 2.0 * trajectory.step;
    let (ta, da) = trajectory.project(a);
    let (tb, db) = trajectory.project(b);
    let separated = (ta < s0 && tb > s1) || (tb < s0 && ta > s1);
    if da > tol || db > tol || !separated {
        return Err(Error::Precondition("competitor endpoints are not on both sides of the arc".into()));
    }
    let arc_length = phi_length(&trajectory.sub_path(s0, s1), phi)?;
    let competitor_length = phi_length(competitor, phi)?;
    let slack = 1e-6 * arc_length.max(1.0);
    Ok(MinimalityRecord { arc_length, competitor_length, pass: arc_length <= competitor_length + slack })
}

/// Cubic Bézier curve sampled at `n + 1` uniform parameters.
pub fn bezier(control: [C64; 4], n: usize) -> Vec<C64> {
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let u = 1.0 - t;
            control[0] * (u * u * u)
                + control[1] * (3.0 * u * u * t)
                + control[2] * (3.0 * u * t * t)
                + control[3] * (t * t * t)
        })
        .collect()
}
