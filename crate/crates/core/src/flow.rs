//! Integration of `x' = chi(x)` forward and backward in time, with detection of the first
//! crossing of a Lyapunov level.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{normalize_vector, Dynamics};
use crate::geometry::GeometryError;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4,
    /// Dormand-Prince 5(4) with error control.
    Rk45,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    HorizonReached,
    ConvergedToPath,
    HitSurface,
    SingularStall,
    LeftDomain,
    StepFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::HorizonReached => "horizon_reached",
            Termination::ConvergedToPath => "converged_to_path",
            Termination::HitSurface => "hit_surface",
            Termination::SingularStall => "singular_stall",
            Termination::LeftDomain => "left_domain",
            Termination::StepFailure => "step_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub step: f64,
    /// Upper bound on RK45 steps.
    pub max_step: f64,
    /// RK45 gives up (`step_failure`) below this step.
    pub min_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integrate `chi / (1 + |chi|^2)` instead of `chi`.
    pub normalize: bool,
    /// `|chi|` at or below this is an equilibrium.
    pub stall_tol: f64,
    pub converge_dist: f64,
    pub converge_lyapunov: f64,
    /// Consecutive steps inside the convergence thresholds before declaring convergence.
    pub converge_steps: usize,
    pub stop_on_converge: bool,
    /// Stop with `hit_surface` once the Lyapunov value drops to this level.
    pub surface_level: Option<f64>,
    /// Record every k-th step (the first and last states are always recorded).
    pub sample_every: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 1e-3,
            max_step: 1e-2,
            min_step: 1e-12,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            normalize: false,
            stall_tol: 1e-12,
            converge_dist: 1e-3,
            converge_lyapunov: 1e-6,
            converge_steps: 100,
            stop_on_converge: true,
            surface_level: None,
            sample_every: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("integration horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("start point dimension {got} does not match field dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("start point is outside the admissible domain")]
    StartOutsideDomain,
    #[error("start point has V = {value} below the level {level}")]
    BelowLevel { value: f64, level: f64 },
    #[error("trajectory stalled at an equilibrium (t = {t})")]
    SingularStall { t: f64, point: Vec<f64> },
    #[error("trajectory left the admissible domain at t = {t}")]
    LeftDomain { t: f64, point: Vec<f64> },
    #[error("adaptive step underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("event location did not converge (|V - level| = {residual})")]
    EventLocation { residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: f64,
}

/// Time-stamped states of one solution together with the reason integration stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory always holds its start")
    }
}

/// First time the flow reaches a Lyapunov level, and where.
#[derive(Clone, Debug, PartialEq)]
pub struct HitRecord {
    pub tau: f64,
    pub point: Vec<f64>,
}

// Dormand-Prince 5(4) tableau. The field is autonomous, so the nodes are not needed.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-by-step integrator state. Higher-level operations (`integrate`, `hitting_time`,
/// `flow_for`) drive it.
pub struct Integrator<'a, D: Dynamics + ?Sized> {
    field: &'a D,
    opts: &'a IntegratorOptions,
    sign: f64,
    t: f64,
    x: Vec<f64>,
    v: f64,
    h: f64,
    converge_count: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl<'a, D: Dynamics + ?Sized> Integrator<'a, D> {
    pub fn new(field: &'a D, x0: &[f64], direction: Direction, opts: &'a IntegratorOptions) -> Result<Self, FlowError> {
        let n = field.dim();
        if x0.len() != n {
            return Err(FlowError::Dimension { expected: n, got: x0.len() });
        }
        if !field.domain().contains(x0) {
            return Err(FlowError::StartOutsideDomain);
        }
        let v = field.lyapunov(x0)?;
        Ok(Self {
            field,
            opts,
            sign: direction.sign(),
            t: 0.0,
            x: x0.to_vec(),
            v,
            h: opts.step,
            converge_count: 0,
            k: core::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            next: vec![0.0; n],
        })
    }

    /// Signed elapsed time (negative when integrating backward).
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn lyapunov(&self) -> f64 {
        self.v
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        self.field.velocity_into(x, out)?;
        if self.opts.normalize {
            normalize_vector(out);
        }
        if self.sign < 0.0 {
            for v in out.iter_mut() {
                *v = -*v;
            }
        }
        Ok(())
    }

    fn in_convergence_zone(&self) -> bool {
        self.v <= self.opts.converge_lyapunov
            && self.field.target_distance(&self.x).is_some_and(|d| d <= self.opts.converge_dist)
    }

    /// RK4 step of size `h` from `x` given `k[0] = f(x)`; result in `self.next`.
    fn rk4_from(&mut self, x: &[f64], h: f64) -> Result<(), GeometryError> {
        let n = x.len();
        let [k1, k2, k3, k4, ..] = &mut self.k;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        Self::rhs_static(self.field, self.opts, self.sign, &self.tmp, k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        Self::rhs_static(self.field, self.opts, self.sign, &self.tmp, k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + h * k3[i];
        }
        Self::rhs_static(self.field, self.opts, self.sign, &self.tmp, k4)?;
        for i in 0..n {
            self.next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }

    /// Dormand-Prince step of size `h` from `x` given `k[0] = f(x)`; fifth-order result in
    /// `self.next`, returns the scaled error norm.
    #[allow(clippy::needless_range_loop)]
    fn dopri_from(&mut self, x: &[f64], h: f64) -> Result<f64, GeometryError> {
        let n = x.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = x[i];
                for (j, a) in DP_A[s].iter().enumerate().take(s) {
                    acc += h * a * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            let (_, rest) = self.k.split_at_mut(s);
            Self::rhs_static(self.field, self.opts, self.sign, &self.tmp, &mut rest[0])?;
        }
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut y = x[i];
            let mut e = 0.0;
            for s in 0..7 {
                y += h * DP_B[s] * self.k[s][i];
                e += h * DP_E[s] * self.k[s][i];
            }
            self.next[i] = y;
            let sc = self.opts.abs_tol + self.opts.rel_tol * libm::fmax(libm::fabs(x[i]), libm::fabs(y));
            err_sq += (e / sc) * (e / sc);
        }
        Ok(libm::sqrt(err_sq / n as f64))
    }

    fn rhs_static(field: &D, opts: &IntegratorOptions, sign: f64, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        field.velocity_into(x, out)?;
        if opts.normalize {
            normalize_vector(out);
        }
        if sign < 0.0 {
            for v in out.iter_mut() {
                *v = -*v;
            }
        }
        Ok(())
    }

    /// One un-controlled step of size `h` (> 0) from `x` with the configured method.
    pub fn single_step(&mut self, x: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
        let mut k1 = core::mem::take(&mut self.k[0]);
        self.rhs(x, &mut k1)?;
        self.k[0] = k1;
        match self.opts.method {
            Method::Rk4 => self.rk4_from(x, h)?,
            Method::Rk45 => {
                self.dopri_from(x, h)?;
            }
        }
        Ok(self.next.clone())
    }

    /// Advances by at most `max_h` (> 0). Returns the termination if one occurred; the
    /// state is left at the last admissible point.
    pub fn step(&mut self, max_h: f64) -> Result<Option<Termination>, FlowError> {
        let x = core::mem::take(&mut self.x);
        let result = self.step_inner(&x, max_h);
        if self.x.is_empty() {
            self.x = x;
        }
        result
    }

    fn step_inner(&mut self, x: &[f64], max_h: f64) -> Result<Option<Termination>, FlowError> {
        let mut k1 = core::mem::take(&mut self.k[0]);
        let r = self.rhs(x, &mut k1);
        self.k[0] = k1;
        r?;
        if linalg::norm(&self.k[0]) <= self.opts.stall_tol {
            self.x = x.to_vec();
            if self.in_convergence_zone() {
                return Ok(Some(Termination::ConvergedToPath));
            }
            return Ok(Some(Termination::SingularStall));
        }
        let taken = match self.opts.method {
            Method::Rk4 => {
                let h = libm::fmin(self.opts.step, max_h);
                self.rk4_from(x, h)?;
                h
            }
            Method::Rk45 => {
                let k1 = self.k[0].clone();
                let mut h = libm::fmin(libm::fmin(self.h, self.opts.max_step), max_h);
                loop {
                    if h < self.opts.min_step {
                        return Ok(Some(Termination::StepFailure));
                    }
                    self.k[0].copy_from_slice(&k1);
                    let err = self.dopri_from(x, h)?;
                    let factor = if err == 0.0 { 5.0 } else { libm::fmin(5.0, libm::fmax(0.2, 0.9 * libm::pow(err, -0.2))) };
                    if err <= 1.0 && self.next.iter().all(|v| v.is_finite()) {
                        self.h = libm::fmin(h * factor, self.opts.max_step);
                        break h;
                    }
                    h *= libm::fmin(factor, 0.5);
                }
            }
        };
        if !self.field.domain().contains(&self.next) {
            return Ok(Some(Termination::LeftDomain));
        }
        let v = self.field.lyapunov(&self.next)?;
        self.x = self.next.clone();
        self.t += self.sign * taken;
        self.v = v;
        if self.opts.surface_level.is_some_and(|level| v <= level) {
            return Ok(Some(Termination::HitSurface));
        }
        if self.in_convergence_zone() {
            self.converge_count += 1;
            if self.opts.stop_on_converge && self.converge_count >= self.opts.converge_steps {
                return Ok(Some(Termination::ConvergedToPath));
            }
        } else {
            self.converge_count = 0;
        }
        Ok(None)
    }

    /// Runs until `|t| = duration` or a termination, calling `observe(t, x, V)` after each
    /// accepted step.
    pub fn run(&mut self, duration: f64, mut observe: impl FnMut(f64, &[f64], f64)) -> Result<Termination, FlowError> {
        loop {
            let remaining = duration - libm::fabs(self.t);
            if remaining <= duration * 1e-14 {
                return Ok(Termination::HorizonReached);
            }
            let outcome = self.step(remaining)?;
            if let Some(term) = outcome {
                return Ok(term);
            }
            observe(self.t, &self.x, self.v);
        }
    }
}

fn check_horizon(t: f64) -> Result<(), FlowError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(FlowError::InvalidHorizon(t))
    }
}

/// Integrates from `x0` for time `t_end` (> 0) in the given direction. Backward
/// integration follows `-chi` and records decreasing times.
pub fn integrate<D: Dynamics + ?Sized>(
    field: &D,
    x0: &[f64],
    t_end: f64,
    direction: Direction,
    opts: &IntegratorOptions,
) -> Result<Trajectory, FlowError> {
    check_horizon(t_end)?;
    let mut it = Integrator::new(field, x0, direction, opts)?;
    let mut samples = vec![Sample { t: 0.0, x: x0.to_vec(), v: it.lyapunov() }];
    let every = opts.sample_every.max(1);
    let mut count = 0usize;
    let termination = it.run(t_end, |t, x, v| {
        count += 1;
        if count.is_multiple_of(every) {
            samples.push(Sample { t, x: x.to_vec(), v });
        }
    })?;
    let last_t = samples.last().map(|s| s.t);
    if last_t != Some(it.time()) {
        samples.push(Sample { t: it.time(), x: it.state().to_vec(), v: it.lyapunov() });
    }
    Ok(Trajectory { samples, termination })
}

/// State after flowing for signed time `duration` (negative flows backward). An
/// equilibrium is its own image.
pub fn flow_for<D: Dynamics + ?Sized>(field: &D, x0: &[f64], duration: f64, opts: &IntegratorOptions) -> Result<Vec<f64>, FlowError> {
    if duration == 0.0 {
        return Ok(x0.to_vec());
    }
    if !duration.is_finite() {
        return Err(FlowError::InvalidHorizon(duration));
    }
    let direction = if duration > 0.0 { Direction::Forward } else { Direction::Backward };
    let local = IntegratorOptions { stop_on_converge: false, surface_level: None, ..opts.clone() };
    let mut it = Integrator::new(field, x0, direction, &local)?;
    match it.run(libm::fabs(duration), |_, _, _| {})? {
        Termination::HorizonReached | Termination::SingularStall | Termination::ConvergedToPath => Ok(it.state().to_vec()),
        Termination::LeftDomain => Err(FlowError::LeftDomain { t: it.time(), point: it.state().to_vec() }),
        Termination::StepFailure | Termination::HitSurface => Err(FlowError::StepFailure { t: it.time() }),
    }
}

/// Tolerance on `|V(q) - level|` for located crossings.
pub const EVENT_TOL: f64 = 1e-10;

/// Smallest `tau >= 0` with `V(Psi^tau(x0)) = level`, for `V(x0) >= level`.
///
/// The crossing is bracketed by integration and located by bisection on the length of the
/// final step. Returns `Ok(None)` if no crossing happens by `t_max` or if `x0` is itself an
/// equilibrium; a trajectory that stalls later is an error.
pub fn hitting_time<D: Dynamics + ?Sized>(
    field: &D,
    x0: &[f64],
    level: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Option<HitRecord>, FlowError> {
    check_horizon(t_max)?;
    let tol = EVENT_TOL * libm::fmax(1.0, libm::fabs(level));
    let v0 = field.lyapunov(x0)?;
    if libm::fabs(v0 - level) <= tol {
        return Ok(Some(HitRecord { tau: 0.0, point: x0.to_vec() }));
    }
    if v0 < level {
        return Err(FlowError::BelowLevel { value: v0, level });
    }
    let local = IntegratorOptions { stop_on_converge: false, surface_level: None, ..opts.clone() };
    if linalg::norm(&field.velocity(x0)?) <= local.stall_tol {
        return Ok(None);
    }
    let mut it = Integrator::new(field, x0, Direction::Forward, &local)?;
    loop {
        let remaining = t_max - it.time();
        if remaining <= t_max * 1e-14 {
            return Ok(None);
        }
        let prev_x = it.state().to_vec();
        let prev_t = it.time();
        match it.step(remaining)? {
            None => {}
            Some(Termination::SingularStall) | Some(Termination::ConvergedToPath) => {
                return Err(FlowError::SingularStall { t: it.time(), point: it.state().to_vec() })
            }
            Some(Termination::LeftDomain) => {
                return Err(FlowError::LeftDomain { t: it.time(), point: it.state().to_vec() })
            }
            Some(_) => return Err(FlowError::StepFailure { t: it.time() }),
        }
        if it.lyapunov() > level + tol {
            continue;
        }
        if libm::fabs(it.lyapunov() - level) <= tol {
            return Ok(Some(HitRecord { tau: it.time(), point: it.state().to_vec() }));
        }
        // V(prev) > level > V(next): bisect on the step length.
        let (mut lo, mut hi) = (0.0, it.time() - prev_t);
        let mut best = (f64::INFINITY, 0.0, prev_x.clone());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let y = it.single_step(&prev_x, mid)?;
            let v = field.lyapunov(&y)?;
            let r = libm::fabs(v - level);
            if r < best.0 {
                best = (r, mid, y);
            }
            if r <= tol {
                break;
            }
            if v > level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-17 * libm::fmax(1.0, hi) {
                break;
            }
        }
        if best.0 > tol {
            return Err(FlowError::EventLocation { residual: best.0 });
        }
        return Ok(Some(HitRecord { tau: prev_t + best.1, point: best.2 }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GuidingField;
    use crate::geometry::SurfaceSystem;

    fn circle2d() -> GuidingField {
        GuidingField::new(SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap(), vec![1.0]).unwrap()
    }

    #[test]
    fn path_is_invariant() {
        let f = circle2d();
        let opts = IntegratorOptions { stop_on_converge: false, ..Default::default() };
        let tr = integrate(&f, &[2.0, 0.0], core::f64::consts::PI, Direction::Forward, &opts).unwrap();
        assert_eq!(tr.termination, Termination::HorizonReached);
        for s in &tr.samples {
            assert!((linalg::norm(&s.x) - 2.0).abs() <= 1e-6);
        }
        assert!((tr.last().t - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let f = circle2d();
        let tr = integrate(&f, &[0.0, 0.0], 10.0, Direction::Forward, &IntegratorOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::SingularStall);
        assert_eq!(tr.last().x, vec![0.0, 0.0]);
    }

    #[test]
    fn converges_from_outside() {
        let f = circle2d();
        let opts = IntegratorOptions { sample_every: 100, ..Default::default() };
        let tr = integrate(&f, &[3.0, 0.0], 100.0, Direction::Forward, &opts).unwrap();
        assert_eq!(tr.termination, Termination::ConvergedToPath);
        assert!((linalg::norm(&tr.last().x) - 2.0).abs() <= 1e-3);
        for w in tr.samples.windows(2) {
            assert!(w[1].v <= w[0].v + 1e-8);
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn backward_times_decrease() {
        let f = circle2d();
        let tr = integrate(&f, &[2.1, 0.0], 0.05, Direction::Backward, &IntegratorOptions::default()).unwrap();
        for w in tr.samples.windows(2) {
            assert!(w[1].t < w[0].t);
            assert!(w[1].v >= w[0].v);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f = circle2d();
        let run = |h: f64| {
            let opts = IntegratorOptions { step: h, stop_on_converge: false, ..Default::default() };
            flow_for(&f, &[2.5, 0.5], 0.2, &opts).unwrap()
        };
        let reference = run(1.25e-5);
        let e1 = linalg::distance(&run(2e-3), &reference);
        let e2 = linalg::distance(&run(1e-3), &reference);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn rk45_matches_rk4() {
        let f = circle2d();
        let rk4 = flow_for(&f, &[3.0, 1.0], 0.3, &IntegratorOptions { step: 1e-5, ..Default::default() }).unwrap();
        let opts = IntegratorOptions { method: Method::Rk45, abs_tol: 1e-12, rel_tol: 1e-12, ..Default::default() };
        let rk45 = flow_for(&f, &[3.0, 1.0], 0.3, &opts).unwrap();
        assert!(linalg::distance(&rk4, &rk45) < 1e-9);
    }

    #[test]
    fn adaptive_step_underflow_is_reported() {
        let f = circle2d();
        let opts = IntegratorOptions { method: Method::Rk45, abs_tol: 1e-30, rel_tol: 0.0, min_step: 1e-3, ..Default::default() };
        let tr = integrate(&f, &[3.0, 0.0], 1.0, Direction::Forward, &opts).unwrap();
        assert_eq!(tr.termination, Termination::StepFailure);
    }

    #[test]
    fn hitting_time_examples() {
        let f = circle2d();
        let opts = IntegratorOptions::default();
        let on_s = [libm::sqrt(5.0), 0.0];
        let hit = hitting_time(&f, &on_s, 1.0, 10.0, &opts).unwrap().unwrap();
        assert_eq!(hit.tau, 0.0);
        assert_eq!(hit.point, on_s.to_vec());

        let hit = hitting_time(&f, &[3.0, 0.0], 1.0, 10.0, &opts).unwrap().unwrap();
        assert!(hit.tau > 0.0);
        assert!((linalg::norm(&hit.point) - libm::sqrt(5.0)).abs() <= 1e-6);
        assert!((f.lyapunov(&hit.point).unwrap() - 1.0).abs() <= EVENT_TOL);
        // tau from the scalar ODE e' = -4 e (4 + e): tau = ln(e (4 + e0) / ((4 + e) e0)) / 16
        let exact = libm::log((1.0 * 9.0) / (5.0 * 5.0)) / -16.0;
        assert!((hit.tau - exact).abs() < 1e-8, "{} vs {exact}", hit.tau);

        assert_eq!(hitting_time(&f, &[0.0, 0.0], 1.0, 10.0, &opts).unwrap(), None);
        assert!(matches!(hitting_time(&f, &[2.0, 0.0], 1.0, 10.0, &opts), Err(FlowError::BelowLevel { .. })));
    }

    #[test]
    fn crossing_is_unique() {
        let f = circle2d();
        let opts = IntegratorOptions::default();
        let hit = hitting_time(&f, &[4.0, 1.0], 1.0, 10.0, &opts).unwrap().unwrap();
        let after = integrate(&f, &hit.point, 5.0, Direction::Forward, &IntegratorOptions { stop_on_converge: false, ..opts }).unwrap();
        assert!(after.samples[1..].iter().all(|s| s.v < 1.0));
    }

    #[test]
    fn leaving_the_domain_stops_integration() {
        use crate::dynamics::Domain;
        let f = circle2d().with_domain(Domain { bounds: Some(vec![(-2.5, 3.5), (-3.5, 3.5)]), punctures: vec![] });
        let tr = integrate(&f, &[3.0, 0.0], 1.0, Direction::Backward, &IntegratorOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::LeftDomain);
        assert!(f.domain().contains(&tr.last().x));
    }

    #[test]
    fn invalid_horizon() {
        let f = circle2d();
        assert!(matches!(
            integrate(&f, &[3.0, 0.0], 0.0, Direction::Forward, &IntegratorOptions::default()),
            Err(FlowError::InvalidHorizon(_))
        ));
    }
}
