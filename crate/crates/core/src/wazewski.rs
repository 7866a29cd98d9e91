//! The Lyapunov tube `V < R` around the path, its exit surface `S = {V = R}`, and sampled
//! verification of how the flow behaves on and inside them.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{project_to_path, PathAtlas};
use crate::dynamics::{Dynamics, Puncture};
use crate::field::{weighted_square_sum, GuidingField, SingularReport};
use crate::flow::{self, Direction, Integrator, IntegratorOptions, Termination};
use crate::geometry::{GeometryError, Jet, SurfaceSystem};
use crate::linalg;
use crate::par;

/// Tolerance for membership of the exit surface.
pub const SET_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WazewskiError {
    #[error("ellipsoid level must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("gain {index} must be positive, got {value}")]
    InvalidGain { index: usize, value: f64 },
}

/// Ellipsoid `E = {u : u^T K u < R}` in error coordinates, `K = diag(gains)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WazewskiConfig {
    gains: Vec<f64>,
    radius: f64,
}

impl WazewskiConfig {
    pub fn new(gains: Vec<f64>, radius: f64) -> Result<Self, WazewskiError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(WazewskiError::InvalidRadius(radius));
        }
        if let Some((index, &value)) = gains.iter().enumerate().find(|(_, k)| !(**k > 0.0)) {
            return Err(WazewskiError::InvalidGain { index, value });
        }
        Ok(Self { gains, radius })
    }

    pub fn for_field(field: &GuidingField, radius: f64) -> Result<Self, WazewskiError> {
        Self::new(field.gains().to_vec(), radius)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// `u^T K u` for error coordinates `u`.
    pub fn level(&self, u: &[f64]) -> f64 {
        weighted_square_sum(&self.gains, u)
    }

    /// `V(x) = e(x)^T K e(x)`, evaluated through the surface system.
    pub fn lyapunov(&self, sys: &SurfaceSystem, x: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.level(&sys.error_map(x)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetClass {
    /// Inside the open tube.
    InE,
    /// On the exit surface (within [`SET_TOL`]).
    OnS,
    /// In the pre-Wazewski set, off the exit surface.
    InWInterior,
}

impl SetClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SetClass::InE => "in_E",
            SetClass::OnS => "on_S",
            SetClass::InWInterior => "in_W_interior",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetMembership {
    pub point: Vec<f64>,
    pub class: SetClass,
    pub v: f64,
}

pub fn classify_set(wz: &WazewskiConfig, field: &GuidingField, x: &[f64]) -> Result<SetMembership, GeometryError> {
    let v = wz.lyapunov(field.system(), x)?;
    let r = wz.radius();
    let class = if libm::fabs(v - r) <= SET_TOL {
        SetClass::OnS
    } else if v < r {
        SetClass::InE
    } else {
        SetClass::InWInterior
    };
    Ok(SetMembership { point: x.to_vec(), class, v })
}

/// Outcome of checking `R` against the singular set: the tube must stay clear of it.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusAudit {
    pub pass: bool,
    /// `min_c V(c) - R` (`inf` with no singular points).
    pub margin: f64,
    pub violating: Option<Vec<f64>>,
}

pub fn audit_radius(field: &GuidingField, wz: &WazewskiConfig, report: &SingularReport) -> Result<RadiusAudit, GeometryError> {
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for c in &report.points {
        let m = field.lyapunov(&c.point)? - wz.radius();
        if m < margin {
            margin = m;
            worst = Some(c.point.clone());
        }
    }
    let pass = margin > 0.0;
    Ok(RadiusAudit { pass, margin, violating: if pass { None } else { worst } })
}

/// Half of the smallest Lyapunov value over the singular set, or `None` if the set is
/// empty.
pub fn auto_radius(field: &GuidingField, report: &SingularReport) -> Result<Option<f64>, GeometryError> {
    let mut min = f64::INFINITY;
    for c in &report.points {
        min = min.min(field.lyapunov(&c.point)?);
    }
    Ok(if min.is_finite() && min > 0.0 { Some(0.5 * min) } else { None })
}

/// Summary of one sampled verification.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub claim: &'static str,
    pub samples: usize,
    pub failures: usize,
    /// Smallest per-sample margin; negative margins are failures. The unit depends on the
    /// claim (see each `verify_*` function).
    pub worst_margin: f64,
    /// Samples that could not be generated (e.g. a ray that never met `S`).
    pub sampling_failures: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn merge(claim: &'static str, outcomes: Vec<Option<(f64, bool)>>) -> Self {
        let mut r = Self { claim, samples: 0, failures: 0, worst_margin: f64::INFINITY, sampling_failures: 0 };
        for o in outcomes {
            match o {
                None => r.sampling_failures += 1,
                Some((margin, ok)) => {
                    r.samples += 1;
                    if !ok {
                        r.failures += 1;
                    }
                    if margin < r.worst_margin {
                        r.worst_margin = margin;
                    }
                }
            }
        }
        r
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub flow: IntegratorOptions,
}

/// Deterministic per-sample generator: the same `(seed, index)` always gives the same
/// stream, whatever the thread layout.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn random_normal_direction(sys: &SurfaceSystem, p: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>, GeometryError> {
    let n = sys.dim();
    let m = sys.count();
    let mut jet = Jet::new(n, m);
    jet.evaluate(sys, p)?;
    loop {
        let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let len = linalg::norm(&c);
        if !(1e-3..=1.0).contains(&len) {
            continue;
        }
        let mut d = vec![0.0; n];
        for (j, cj) in c.iter().enumerate() {
            linalg::axpy(*cj, jet.row(j, n), &mut d);
        }
        let dn = linalg::norm(&d);
        if dn > 0.0 {
            return Ok(linalg::scale(1.0 / dn, &d));
        }
    }
}

const RAY_STEP: f64 = 1e-2;
const RAY_MAX: f64 = 50.0;

/// First `s > 0` with `V(p + s d) = R`, by marching and bisection.
fn ray_to_level(field: &GuidingField, wz: &WazewskiConfig, p: &[f64], d: &[f64]) -> Option<f64> {
    let r = wz.radius();
    let at = |s: f64| -> Option<f64> {
        let mut x = p.to_vec();
        linalg::axpy(s, d, &mut x);
        field.lyapunov(&x).ok()
    };
    let mut lo = 0.0;
    let mut hi = None;
    let mut s = RAY_STEP;
    while s <= RAY_MAX {
        if at(s)? >= r {
            hi = Some(s);
            break;
        }
        lo = s;
        s += RAY_STEP;
    }
    let mut hi = hi?;
    let tol = 1e-3 * SET_TOL * libm::fmax(1.0, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = at(mid)?;
        if libm::fabs(v - r) <= tol {
            return Some(mid);
        }
        if v < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = at(hi)?;
    (libm::fabs(v - r) <= SET_TOL).then_some(hi)
}

/// A random path point and a random unit direction in the span of the gradients there,
/// together with the distance along that ray to the exit surface.
fn sample_ray(field: &GuidingField, wz: &WazewskiConfig, atlas: &PathAtlas, rng: &mut ChaCha8Rng) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let sys = field.system();
    let s = rng.gen_range(0.0..atlas.length());
    let p = project_to_path(sys, &atlas.point_at(s)).ok()?;
    let d = random_normal_direction(sys, &p, rng).ok()?;
    let hit = ray_to_level(field, wz, &p, &d)?;
    Some((p, d, hit))
}

/// Samples of `S` by ray shooting from the path; `None` marks a ray that missed.
pub fn sample_exit_surface(field: &GuidingField, wz: &WazewskiConfig, atlas: &PathAtlas, m: usize, seed: u64) -> Vec<Option<Vec<f64>>> {
    par::map_indices(m, |i| {
        let mut rng = sample_rng(seed, i);
        let (p, d, s) = sample_ray(field, wz, atlas, &mut rng)?;
        let mut q = p;
        linalg::axpy(s, &d, &mut q);
        Some(q)
    })
}

/// Samples of the closed tube `V <= R`: a uniform fraction of the way from the path to `S`
/// along a random normal ray.
pub fn sample_tube(field: &GuidingField, wz: &WazewskiConfig, atlas: &PathAtlas, m: usize, seed: u64) -> Vec<Option<Vec<f64>>> {
    par::map_indices(m, |i| {
        let mut rng = sample_rng(seed, i);
        let (p, d, s) = sample_ray(field, wz, atlas, &mut rng)?;
        let u: f64 = rng.gen_range(0.0..=1.0);
        let mut q = p;
        linalg::axpy(u * s, &d, &mut q);
        Some(q)
    })
}

/// Exit set check: at `m` samples of `S` the Lyapunov rate is strictly negative and one
/// integration step lands inside `E`. Margin: `R - V` after the step.
pub fn verify_exit_set(field: &GuidingField, wz: &WazewskiConfig, atlas: &PathAtlas, m: usize, opts: &VerifyOptions) -> VerificationReport {
    let samples = sample_exit_surface(field, wz, atlas, m, opts.seed);
    let outcomes = par::map_indices(samples.len(), |i| {
        let q = samples[i].as_ref()?;
        let rate = field.lyapunov_rate(q).ok()?;
        let stepped = flow::flow_for(field, q, opts.flow.step, &opts.flow).ok();
        let v = stepped.and_then(|y| field.lyapunov(&y).ok()).unwrap_or(f64::INFINITY);
        let margin = wz.radius() - v;
        Some((margin, rate < 0.0 && v < wz.radius()))
    });
    VerificationReport::merge("exit_set", outcomes)
}

/// Forward invariance of the closed tube: from `m` starts with `V <= R`, the maximum of `V`
/// over `[0, horizon]` stays below `R + 1e-6`. Margin: `R - max V`.
pub fn verify_forward_invariance(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    m: usize,
    horizon: f64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let starts = sample_tube(field, wz, atlas, m, opts.seed);
    let flow_opts = IntegratorOptions { stop_on_converge: false, ..opts.flow.clone() };
    let outcomes = par::map_indices(starts.len(), |i| {
        let x0 = starts[i].as_ref()?;
        let max_v = max_lyapunov_along(field, x0, horizon, &flow_opts);
        Some((wz.radius() - max_v, max_v <= wz.radius() + 1e-6))
    });
    VerificationReport::merge("forward_invariance", outcomes)
}

fn max_lyapunov_along(field: &GuidingField, x0: &[f64], horizon: f64, opts: &IntegratorOptions) -> f64 {
    let mut it = match Integrator::new(field, x0, Direction::Forward, opts) {
        Ok(it) => it,
        Err(_) => return f64::INFINITY,
    };
    let mut max_v = it.lyapunov();
    match it.run(horizon, |_, _, v| max_v = max_v.max(v)) {
        Ok(Termination::HorizonReached) | Ok(Termination::SingularStall) | Ok(Termination::ConvergedToPath) => max_v,
        _ => f64::INFINITY,
    }
}

/// Convergence from the closed tube: every start reaches distance `1e-3` from the path by
/// `horizon`. Margin: `1e-3 - final distance`.
pub fn verify_convergence(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    m: usize,
    horizon: f64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let starts = sample_tube(field, wz, atlas, m, opts.seed);
    let flow_opts = IntegratorOptions { stop_on_converge: true, sample_every: usize::MAX, ..opts.flow.clone() };
    let outcomes = par::map_indices(starts.len(), |i| {
        let x0 = starts[i].as_ref()?;
        let dist = match flow::integrate(field, x0, horizon, Direction::Forward, &flow_opts) {
            Ok(tr) => field.target_distance(&tr.last().x).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        };
        let threshold = flow_opts.converge_dist;
        Some((threshold - dist, dist <= threshold))
    });
    VerificationReport::merge("convergence", outcomes)
}

/// Absorption: from `m` samples of `S`, `V(Psi^t(q)) < R` for every `t` in `times`.
/// Margin: `R - V`.
pub fn verify_absorption(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    m: usize,
    times: &[f64],
    opts: &VerifyOptions,
) -> VerificationReport {
    let samples = sample_exit_surface(field, wz, atlas, m, opts.seed);
    let outcomes = par::map_indices(samples.len(), |i| {
        let q = samples[i].as_ref()?;
        let mut worst = f64::INFINITY;
        for &t in times {
            let v = flow::flow_for(field, q, t, &opts.flow)
                .ok()
                .and_then(|y| field.lyapunov(&y).ok())
                .unwrap_or(f64::INFINITY);
            worst = worst.min(wz.radius() - v);
        }
        Some((worst, worst > 0.0))
    });
    VerificationReport::merge("absorption", outcomes)
}

/// Convergence from uniform starts in a box (outside `exclusions`): every start reaches
/// distance `converge_dist` from the target by `horizon`, and the Lyapunov value never
/// increases by more than `1e-8` over a step. Margin: `converge_dist - final distance`.
pub fn verify_box_convergence<D: Dynamics + Sync + ?Sized>(
    field: &D,
    lower: &[f64],
    upper: &[f64],
    exclusions: &[Puncture],
    m: usize,
    horizon: f64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let flow_opts = IntegratorOptions { stop_on_converge: false, ..opts.flow.clone() };
    let outcomes = par::map_indices(m, |i| {
        let mut rng = sample_rng(opts.seed, i);
        let x0 = loop {
            let x = uniform_in_box(&mut rng, lower, upper);
            if !exclusions.iter().any(|p| p.contains(&x)) {
                break x;
            }
        };
        let mut it = Integrator::new(field, &x0, Direction::Forward, &flow_opts).ok()?;
        let mut prev = it.lyapunov();
        let mut monotone = true;
        let run = it.run(horizon, |_, _, v| {
            if v > prev + 1e-8 {
                monotone = false;
            }
            prev = v;
        });
        let dist = match run {
            Ok(Termination::HorizonReached | Termination::SingularStall | Termination::ConvergedToPath) => field.target_distance(it.state()).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        };
        let threshold = flow_opts.converge_dist;
        Some((threshold - dist, monotone && dist <= threshold))
    });
    VerificationReport::merge("box_convergence", outcomes)
}

fn uniform_in_box(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower.iter().zip(upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect()
}

/// Orthogonality of the wedge to every gradient at `m` uniform points of a box:
/// `|<wedge, grad e_i>| <= 1e-9 (1 + |wedge| |grad e_i|)`. Margin: bound minus the inner
/// product.
pub fn verify_orthogonality(sys: &SurfaceSystem, lower: &[f64], upper: &[f64], m: usize, seed: u64) -> VerificationReport {
    let outcomes = par::map_indices(m, |i| {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(&mut rng, lower, upper);
        let w = sys.tangent(&x).ok()?;
        let wn = linalg::norm(&w);
        let mut margin = f64::INFINITY;
        for g in sys.gradients(&x).ok()? {
            let bound = 1e-9 * (1.0 + wn * linalg::norm(&g));
            margin = margin.min(bound - libm::fabs(linalg::dot(&w, &g)));
        }
        Some((margin, margin >= 0.0))
    });
    VerificationReport::merge("orthogonality", outcomes)
}

/// Analytic Lyapunov rate against the central difference `(V(Psi^h) - V(Psi^-h)) / 2h`
/// along the flow, at `m` uniform points of a box. Passes at relative error `1e-3`.
/// Margin: `1e-3 - relative error`.
pub fn verify_lyapunov_rate(field: &GuidingField, lower: &[f64], upper: &[f64], m: usize, h: f64, seed: u64) -> VerificationReport {
    let fine = IntegratorOptions { step: h / 10.0, stop_on_converge: false, ..IntegratorOptions::default() };
    let outcomes = par::map_indices(m, |i| {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(&mut rng, lower, upper);
        let rate = field.lyapunov_rate(&x).ok()?;
        let fwd = flow::flow_for(field, &x, h, &fine).ok()?;
        let bwd = flow::flow_for(field, &x, -h, &fine).ok()?;
        let fd = (field.lyapunov(&fwd).ok()? - field.lyapunov(&bwd).ok()?) / (2.0 * h);
        let rel = libm::fabs(fd - rate) / (libm::fabs(rate) + 1e-12);
        Some((1e-3 - rel, rel <= 1e-3))
    });
    VerificationReport::merge("lyapunov_rate", outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{build_path_atlas, DEFAULT_ATLAS_STEP};
    use crate::field::{find_singular_points, SingularSearch};

    fn circle2d() -> GuidingField {
        GuidingField::new(SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap(), vec![1.0]).unwrap()
    }

    fn setup() -> (GuidingField, WazewskiConfig, PathAtlas) {
        let f = circle2d();
        let wz = WazewskiConfig::for_field(&f, 1.0).unwrap();
        let atlas = build_path_atlas(f.system(), &[2.0, 0.0], DEFAULT_ATLAS_STEP).unwrap();
        (f, wz, atlas)
    }

    #[test]
    fn classification_examples() {
        let (f, wz, _) = setup();
        assert_eq!(classify_set(&wz, &f, &[2.0, 0.0]).unwrap().class, SetClass::InE);
        let s = classify_set(&wz, &f, &[libm::sqrt(5.0), 0.0]).unwrap();
        assert_eq!(s.class, SetClass::OnS);
        let w = classify_set(&wz, &f, &[3.0, 0.0]).unwrap();
        assert_eq!(w.class, SetClass::InWInterior);
        assert_eq!(w.v, 25.0);
    }

    #[test]
    fn level_matches_field_lyapunov_bitwise() {
        let (f, wz, _) = setup();
        for x in [[0.3, -1.7], [2.2, 0.1], [-4.0, 3.3]] {
            assert_eq!(wz.lyapunov(f.system(), &x).unwrap().to_bits(), f.lyapunov(&x).unwrap().to_bits());
        }
    }

    #[test]
    fn radius_audit_examples() {
        let f = circle2d();
        let report = find_singular_points(&f, &SingularSearch::new(vec![-5.0, -5.0], vec![5.0, 5.0], 0.25), None).unwrap();
        let ok = audit_radius(&f, &WazewskiConfig::for_field(&f, 1.0).unwrap(), &report).unwrap();
        assert!(ok.pass);
        assert!((ok.margin - 15.0).abs() < 1e-12);
        let bad = audit_radius(&f, &WazewskiConfig::for_field(&f, 16.0).unwrap(), &report).unwrap();
        assert!(!bad.pass);
        assert!(linalg::norm(bad.violating.as_ref().unwrap()) < 1e-8);
        let empty = audit_radius(&f, &WazewskiConfig::for_field(&f, 16.0).unwrap(), &SingularReport::default()).unwrap();
        assert!(empty.pass);
        assert_eq!(auto_radius(&f, &report).unwrap(), Some(8.0));
    }

    #[test]
    fn exit_rate_at_known_points() {
        let f = circle2d();
        assert!((f.lyapunov_rate(&[libm::sqrt(5.0), 0.0]).unwrap() + 40.0).abs() < 1e-12);
        assert!((f.lyapunov_rate(&[libm::sqrt(3.0), 0.0]).unwrap() + 24.0).abs() < 1e-12);
    }

    #[test]
    fn exit_surface_samples_and_brute_force_rate() {
        let (f, wz, atlas) = setup();
        let samples = sample_exit_surface(&f, &wz, &atlas, 200, 7);
        let mut inner = 0;
        for q in samples.iter().flatten() {
            assert_eq!(classify_set(&wz, &f, q).unwrap().class, SetClass::OnS);
            // rate = -8 e^2 (4 + e) with radius^2 = 4 + e, e = +-1
            let e = f.system().error_map(q).unwrap()[0];
            let expected = -8.0 * e * e * (4.0 + e);
            assert!((f.lyapunov_rate(q).unwrap() - expected).abs() < 1e-8);
            if e < 0.0 {
                inner += 1;
            }
        }
        assert!(inner > 50 && inner < 150);
        let report = verify_exit_set(&f, &wz, &atlas, 200, &VerifyOptions::default());
        assert_eq!(report.failures, 0);
        assert_eq!(report.samples, 200);
        assert!(report.worst_margin > 0.0);
    }

    #[test]
    fn containment_chain_on_exit_surface() {
        let (f, wz, atlas) = setup();
        for q in sample_exit_surface(&f, &wz, &atlas, 20, 3).iter().flatten() {
            let hit = flow::hitting_time(&f, q, wz.radius(), 1.0, &IntegratorOptions::default()).unwrap().unwrap();
            assert_eq!(hit.tau, 0.0);
            assert!(f.lyapunov(q).unwrap() >= wz.radius() - SET_TOL);
        }
    }

    #[test]
    fn invariance_and_convergence_small_batches() {
        let (f, wz, atlas) = setup();
        let inv = verify_forward_invariance(&f, &wz, &atlas, 10, 5.0, &VerifyOptions::default());
        assert_eq!(inv.failures, 0);
        assert!(inv.worst_margin >= -1e-6);
        let conv = verify_convergence(&f, &wz, &atlas, 10, 100.0, &VerifyOptions::default());
        assert_eq!(conv.failures, 0);
        let empty = verify_convergence(&f, &wz, &atlas, 0, 100.0, &VerifyOptions::default());
        assert_eq!(empty.samples, 0);
        let abs = verify_absorption(&f, &wz, &atlas, 10, &[0.1, 1.0], &VerifyOptions::default());
        assert_eq!(abs.failures, 0);
    }

    #[test]
    fn start_on_path_keeps_zero_lyapunov() {
        let (f, _, _) = setup();
        let opts = IntegratorOptions { stop_on_converge: false, ..Default::default() };
        let max_v = max_lyapunov_along(&f, &[0.0, 2.0], 5.0, &opts);
        assert!(max_v < 1e-20);
    }

    #[test]
    fn segment_attractor_box_convergence() {
        let s = crate::scenarios::get_scenario("counterexample1").unwrap();
        let r = verify_box_convergence(s.dynamics(), &s.lower, &s.upper, &s.exclusions, 40, 50.0, &VerifyOptions::default());
        assert_eq!(r.samples, 40);
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn config_validation() {
        assert!(WazewskiConfig::new(vec![1.0], 0.0).is_err());
        assert!(WazewskiConfig::new(vec![-1.0], 1.0).is_err());
    }
}
