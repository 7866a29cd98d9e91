//! An explicit chart of the domain of attraction onto `R^{n-1} x S^1`.
//!
//! Inside the tube `V <= R` a point maps to `(e(x), theta)`, where `theta` is the arc-length
//! angle of its projection onto the path. Outside the tube a point is first flowed to the
//! exit surface `V = R`; the hitting point `q` supplies `theta` and its error coordinates
//! are pushed radially outward by the hitting time: `r = (1 + tau) e(q)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::dynamics::Dynamics;
use crate::field::{weighted_square_sum, GuidingField};
use crate::flow::{self, FlowError, IntegratorOptions};
use crate::geometry::{GeometryError, Jet, SurfaceSystem};
use crate::linalg;
use crate::wazewski::WazewskiConfig;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("Newton correction did not converge (residual {residual})")]
    Projection { residual: f64 },
    #[error("gradient frame is degenerate at the query point")]
    DegenerateFrame,
    #[error("the surface system does not define a curve (need n - 1 surfaces)")]
    NotACurve,
    #[error("level curve did not close within {steps} steps")]
    NotClosed { steps: usize },
    #[error("level curve degenerates near a singular point")]
    NearSingular { point: Vec<f64> },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("no hit of the exit surface within the time limit; point not certified in the pre-exit set")]
    NotCertified,
    #[error("trajectory stalled before reaching the exit surface; point likely outside the domain of attraction")]
    LikelyOutsideDoa,
    #[error(transparent)]
    Flow(FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<FlowError> for ChartError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Geometry(g) => ChartError::Geometry(g),
            other => ChartError::Flow(other),
        }
    }
}

/// `(r, theta)` with `theta` in `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub r: Vec<f64>,
    pub theta: f64,
}

impl ChartPoint {
    /// Distance on `R^{n-1} x S^1` (flat metric, angle difference wrapped).
    pub fn distance(&self, other: &ChartPoint) -> f64 {
        let dr = linalg::norm_sq(&linalg::sub(&self.r, &other.r));
        let dt = wrap_angle(self.theta - other.theta);
        libm::sqrt(dr + dt * dt)
    }
}

/// Maps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let mut w = d % TAU;
    if w > core::f64::consts::PI {
        w -= TAU;
    } else if w <= -core::f64::consts::PI {
        w += TAU;
    }
    w
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;
/// Newton keeps iterating below [`NEWTON_TOL`] while the residual still decreases.
const NEWTON_POLISH_TOL: f64 = 1e-15;

/// Solves `e(base + sum_j c_j frame_j) = target` for `c` by damped Newton.
/// `frame` holds `m` row vectors of length `n`.
pub fn solve_along_frame(sys: &SurfaceSystem, base: &[f64], frame: &[f64], target: &[f64]) -> Result<Vec<f64>, ChartError> {
    let n = sys.dim();
    let m = sys.count();
    let mut jet = Jet::new(n, m);
    let mut p = base.to_vec();
    let residual = |jet: &Jet| -> f64 {
        libm::sqrt(jet.values.iter().zip(target).map(|(v, t)| (v - t) * (v - t)).sum())
    };
    jet.evaluate(sys, &p)?;
    let mut res = residual(&jet);
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_POLISH_TOL {
            return Ok(p);
        }
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = linalg::dot(jet.row(i, n), &frame[j * n..(j + 1) * n]);
            }
        }
        let mut delta: Vec<f64> = jet.values.iter().zip(target).map(|(v, t)| t - v).collect();
        if linalg::solve_in_place(&mut a, &mut delta, m).is_none() {
            return Err(ChartError::DegenerateFrame);
        }
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = p.clone();
            for j in 0..m {
                linalg::axpy(lambda * delta[j], &frame[j * n..(j + 1) * n], &mut trial);
            }
            let mut tj = Jet::new(n, m);
            if tj.evaluate(sys, &trial).is_ok() {
                let r = residual(&tj);
                if r < res {
                    p = trial;
                    res = r;
                    jet = tj;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if res <= NEWTON_TOL {
        Ok(p)
    } else {
        Err(ChartError::Projection { residual: res })
    }
}

/// Moves `x` onto the level set `e = level` along the span of the gradients at `x`.
pub fn project_to_level(sys: &SurfaceSystem, x: &[f64], level: &[f64]) -> Result<Vec<f64>, ChartError> {
    let mut jet = Jet::new(sys.dim(), sys.count());
    jet.evaluate(sys, x)?;
    solve_along_frame(sys, x, &jet.grads, level)
}

/// Retraction onto the path `e = 0`; points of the path are fixed.
pub fn project_to_path(sys: &SurfaceSystem, x: &[f64]) -> Result<Vec<f64>, ChartError> {
    let zero = vec![0.0; sys.count()];
    project_to_level(sys, x, &zero)
}

fn unit_tangent(sys: &SurfaceSystem, x: &[f64], min_norm: f64) -> Result<Vec<f64>, ChartError> {
    let t = sys.tangent(x)?;
    let len = linalg::norm(&t);
    if !(len > min_norm) {
        return Err(ChartError::NearSingular { point: x.to_vec() });
    }
    Ok(linalg::scale(1.0 / len, &t))
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    let ab = linalg::sub(b, a);
    let len_sq = linalg::norm_sq(&ab);
    let t = if len_sq == 0.0 { 0.0 } else { (linalg::dot(&linalg::sub(p, a), &ab) / len_sq).clamp(0.0, 1.0) };
    let mut foot = a.to_vec();
    linalg::axpy(t, &ab, &mut foot);
    (linalg::distance(p, &foot), t)
}

/// A closed polyline traced along a level set of `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    /// Vertices; the last one repeats the first.
    pub points: Vec<Vec<f64>>,
    /// Distance from the start to the final traced segment.
    pub closure_error: f64,
    pub length: f64,
}

const TANGENT_MIN_NORM: f64 = 1e-8;

/// Follows the level set through `start` (which must lie on `e = level`) in the direction
/// of the wedge of the gradients, re-projecting after every step, until the curve
/// returns within `step / 2` of `start`.
pub fn trace_level_curve(
    sys: &SurfaceSystem,
    start: &[f64],
    level: &[f64],
    step: f64,
    max_steps: usize,
) -> Result<ClosedCurve, ChartError> {
    if !sys.is_curve() {
        return Err(ChartError::NotACurve);
    }
    if !(step > 0.0) {
        return Err(ChartError::Precondition("trace step must be positive"));
    }
    let n = sys.dim();
    let mut points = vec![start.to_vec()];
    let mut x = start.to_vec();
    let mut travelled = 0.0;
    let mut tmp = vec![0.0; n];
    for _ in 0..max_steps {
        let k1 = unit_tangent(sys, &x, TANGENT_MIN_NORM)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * step * k1[i];
        }
        let k2 = unit_tangent(sys, &tmp, TANGENT_MIN_NORM)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * step * k2[i];
        }
        let k3 = unit_tangent(sys, &tmp, TANGENT_MIN_NORM)?;
        for i in 0..n {
            tmp[i] = x[i] + step * k3[i];
        }
        let k4 = unit_tangent(sys, &tmp, TANGENT_MIN_NORM)?;
        let predicted: Vec<f64> =
            (0..n).map(|i| x[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        let y = project_to_level(sys, &predicted, level)?;
        if linalg::distance(&y, &predicted) > 0.5 * step || linalg::distance(&y, &x) < 0.25 * step {
            return Err(ChartError::NearSingular { point: y });
        }
        if travelled >= 3.0 * step {
            // close once the start lies alongside the last segment, not ahead of it
            let (d, t) = point_segment_distance(start, &x, &y);
            if d <= 0.5 * step && t < 1.0 {
                points.push(start.to_vec());
                let length = points.windows(2).map(|w| linalg::distance(&w[0], &w[1])).sum();
                return Ok(ClosedCurve { points, closure_error: d, length });
            }
        }
        travelled += linalg::distance(&x, &y);
        points.push(y.clone());
        x = y;
    }
    Err(ChartError::NotClosed { steps: max_steps })
}

pub const DEFAULT_ATLAS_STEP: f64 = 1e-2;
pub const DEFAULT_MAX_TRACE_STEPS: usize = 200_000;

/// Arc-length parametrization of the path as a closed polyline starting at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathAtlas {
    points: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
    closure_error: f64,
}

impl PathAtlas {
    pub fn from_curve(curve: ClosedCurve) -> Self {
        let mut cumulative = Vec::with_capacity(curve.points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in curve.points.windows(2) {
            acc += linalg::distance(&w[0], &w[1]);
            cumulative.push(acc);
        }
        Self { points: curve.points, cumulative, closure_error: curve.closure_error }
    }

    pub fn base(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Arc length at each vertex.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn closure_error(&self) -> f64 {
        self.closure_error
    }

    /// Arc length of the polyline point nearest to `p`, in `[0, L)`.
    pub fn arc_parameter(&self, p: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (i, w) in self.points.windows(2).enumerate() {
            let (d, t) = point_segment_distance(p, &w[0], &w[1]);
            if d < best.0 {
                best = (d, self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i]));
            }
        }
        let l = self.length();
        if best.1 >= l {
            best.1 - l
        } else {
            best.1
        }
    }

    /// Point of the polyline at arc length `s` (taken modulo `L`).
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        let l = self.length();
        let mut s = s % l;
        if s < 0.0 {
            s += l;
        }
        let i = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.points[i].clone(),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let t = if seg == 0.0 { 0.0 } else { (s - self.cumulative[i]) / seg };
        let mut p = self.points[i].clone();
        let d = linalg::sub(&self.points[i + 1], &self.points[i]);
        linalg::axpy(t, &d, &mut p);
        p
    }

    /// Angle `2 pi s / L` of a path point, in `[0, 2 pi)`.
    pub fn theta_of(&self, p: &[f64]) -> f64 {
        let th = TAU * self.arc_parameter(p) / self.length();
        if th >= TAU {
            th - TAU
        } else {
            th
        }
    }

    pub fn point_at_theta(&self, theta: f64) -> Vec<f64> {
        self.point_at(theta / TAU * self.length())
    }
}

/// Traces the path from the projection of `seed`.
pub fn build_path_atlas(sys: &SurfaceSystem, seed: &[f64], step: f64) -> Result<PathAtlas, ChartError> {
    build_path_atlas_with_limit(sys, seed, step, DEFAULT_MAX_TRACE_STEPS)
}

pub fn build_path_atlas_with_limit(sys: &SurfaceSystem, seed: &[f64], step: f64, max_steps: usize) -> Result<PathAtlas, ChartError> {
    let base = project_to_path(sys, seed)?;
    let zero = vec![0.0; sys.count()];
    let curve = trace_level_curve(sys, &base, &zero, step, max_steps)?;
    Ok(PathAtlas::from_curve(curve))
}

/// Distance from `x` to the path: nearest atlas point, refined by alternating tangential
/// moves and re-projection.
pub fn distance_to_path(sys: &SurfaceSystem, atlas: &PathAtlas, x: &[f64]) -> Result<f64, ChartError> {
    let zero = vec![0.0; sys.count()];
    let p = nearest_on_level(sys, &zero, &atlas.point_at(atlas.arc_parameter(x)), x)?;
    Ok(linalg::distance(x, &p))
}

/// Point of the level curve `e = level` nearest to `x`, found from `guess` by alternating
/// tangential moves and re-projection.
pub fn nearest_on_level(sys: &SurfaceSystem, level: &[f64], guess: &[f64], x: &[f64]) -> Result<Vec<f64>, ChartError> {
    let mut p = project_to_level(sys, guess, level)?;
    for _ in 0..100 {
        let t = unit_tangent(sys, &p, TANGENT_MIN_NORM)?;
        let along = linalg::dot(&linalg::sub(x, &p), &t);
        let mut moved = p.clone();
        linalg::axpy(along, &t, &mut moved);
        let next = project_to_level(sys, &moved, level)?;
        let shift = linalg::distance(&next, &p);
        p = next;
        if shift <= 1e-14 * (1.0 + linalg::norm(&p)) {
            break;
        }
    }
    Ok(p)
}

/// Local trivialization: `r = e(x)` and `theta` of the projection onto the path.
pub fn gamma(atlas: &PathAtlas, sys: &SurfaceSystem, x: &[f64]) -> Result<ChartPoint, ChartError> {
    let r = sys.error_map(x)?;
    let p = project_to_path(sys, x)?;
    Ok(ChartPoint { r, theta: atlas.theta_of(&p) })
}

/// Inverse of [`gamma`]: from the atlas point at `theta`, solve `e = r` along the gradient
/// frame frozen at that point.
pub fn tube_inverse(atlas: &PathAtlas, sys: &SurfaceSystem, r: &[f64], theta: f64) -> Result<Vec<f64>, ChartError> {
    let base = atlas.point_at_theta(theta);
    let mut jet = Jet::new(sys.dim(), sys.count());
    jet.evaluate(sys, &base)?;
    solve_along_frame(sys, &base, &jet.grads, r)
}

/// The level curve `e = level`, started from the path base point along the gradient frame.
pub fn trace_fiber(atlas: &PathAtlas, sys: &SurfaceSystem, level: &[f64], step: f64) -> Result<ClosedCurve, ChartError> {
    if level.len() != sys.count() {
        return Err(ChartError::Precondition("fiber level must have one value per surface"));
    }
    let base = atlas.base();
    let mut jet = Jet::new(sys.dim(), sys.count());
    jet.evaluate(sys, base)?;
    let start = solve_along_frame(sys, base, &jet.grads, level)?;
    trace_level_curve(sys, &start, level, step, DEFAULT_MAX_TRACE_STEPS)
}

/// Radial extension `(t, x) -> (1 - t) x` of the ellipsoid boundary, `t <= 0`.
pub fn xi_map(t: f64, x: &[f64], wz: &WazewskiConfig) -> Result<Vec<f64>, ChartError> {
    if !(t <= 0.0) {
        return Err(ChartError::Precondition("radial time must be non-positive"));
    }
    let level = weighted_square_sum(wz.gains(), x);
    if libm::fabs(level - wz.radius()) > 1e-8 * libm::fmax(1.0, wz.radius()) {
        return Err(ChartError::Precondition("point is not on the ellipsoid boundary"));
    }
    Ok(linalg::scale(1.0 - t, x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartOptions {
    pub flow: IntegratorOptions,
    pub t_max: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self { flow: IntegratorOptions { step: 1e-4, ..IntegratorOptions::default() }, t_max: 100.0 }
    }
}

/// A chart value together with the hitting time used to produce it (`0` inside the tube).
#[derive(Clone, Debug, PartialEq)]
pub struct ChartSample {
    pub point: ChartPoint,
    pub tau: f64,
}

pub fn global_chart(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    x: &[f64],
    opts: &ChartOptions,
) -> Result<ChartSample, ChartError> {
    let sys = field.system();
    if field.lyapunov(x)? <= wz.radius() {
        return Ok(ChartSample { point: gamma(atlas, sys, x)?, tau: 0.0 });
    }
    let hit = match flow::hitting_time(field, x, wz.radius(), opts.t_max, &opts.flow) {
        Ok(Some(hit)) => hit,
        Ok(None) => return Err(ChartError::NotCertified),
        Err(FlowError::SingularStall { .. }) => return Err(ChartError::LikelyOutsideDoa),
        Err(e) => return Err(e.into()),
    };
    let eq = sys.error_map(&hit.point)?;
    let r = xi_map(-hit.tau, &eq, wz)?;
    let theta = gamma(atlas, sys, &hit.point)?.theta;
    Ok(ChartSample { point: ChartPoint { r, theta }, tau: hit.tau })
}

pub fn chart_inverse(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    cp: &ChartPoint,
    opts: &ChartOptions,
) -> Result<Vec<f64>, ChartError> {
    let sys = field.system();
    if cp.r.len() != sys.count() {
        return Err(ChartError::Precondition("chart point has the wrong number of error coordinates"));
    }
    let level = weighted_square_sum(wz.gains(), &cp.r);
    if level <= wz.radius() {
        return tube_inverse(atlas, sys, &cp.r, cp.theta);
    }
    let scale = libm::sqrt(level / wz.radius());
    let boundary = linalg::scale(1.0 / scale, &cp.r);
    let tau = scale - 1.0;
    let q = tube_inverse(atlas, sys, &boundary, cp.theta)?;
    Ok(flow::flow_for(field, &q, -tau, &opts.flow)?)
}

/// Ratio `|chart(a) - chart(b)| / |a - b|` for two points straddling the exit surface on
/// the trajectory through `q` (a point of `S`), at separation about `delta`.
pub fn continuity_ratio(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    q: &[f64],
    delta: f64,
    opts: &ChartOptions,
) -> Result<f64, ChartError> {
    let speed = linalg::norm(&field.velocity(q)?);
    if !(speed > 0.0) || !(delta > 0.0) {
        return Err(ChartError::Precondition("continuity probe needs a moving point and a positive separation"));
    }
    let s = 0.5 * delta / speed;
    let inside = flow::flow_for(field, q, s, &opts.flow)?;
    let outside = flow::flow_for(field, q, -s, &opts.flow)?;
    let a = global_chart(field, wz, atlas, &inside, opts)?;
    let b = global_chart(field, wz, atlas, &outside, opts)?;
    Ok(a.point.distance(&b.point) / linalg::distance(&inside, &outside))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityReport {
    /// Pairs at least `min_separation` apart in the domain.
    pub pairs: usize,
    /// Smallest chart distance over those pairs.
    pub min_image_distance: f64,
    /// Pairs whose images are closer than the required distance.
    pub violations: usize,
}

/// Checks that points at least `min_separation` apart have chart images at least
/// `min_image_distance` apart.
pub fn injectivity_probe(points: &[Vec<f64>], images: &[ChartPoint], min_separation: f64, min_image_distance: f64) -> InjectivityReport {
    let mut report = InjectivityReport { pairs: 0, min_image_distance: f64::INFINITY, violations: 0 };
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if linalg::distance(&points[i], &points[j]) < min_separation {
                continue;
            }
            report.pairs += 1;
            let d = images[i].distance(&images[j]);
            report.min_image_distance = report.min_image_distance.min(d);
            if d < min_image_distance {
                report.violations += 1;
            }
        }
    }
    report
}
