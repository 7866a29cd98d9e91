//! The guiding vector field `chi = wedge(grad e) - sum_i k_i e_i grad e_i`, its Lyapunov
//! function `V = sum_i k_i e_i^2`, and a search for its zeros (the singular set).

use alloc::vec;
use alloc::vec::Vec;
use smallvec::SmallVec;

use crate::chart::{self, PathAtlas};
use crate::dynamics::{Domain, Dynamics};
use crate::geometry::{GeometryError, Jet, SurfaceSystem};
use crate::linalg;
use crate::par;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("expected {expected} gains, got {got}")]
    GainCount { expected: usize, got: usize },
    #[error("gain {index} must be positive and finite, got {value}")]
    NonPositiveGain { index: usize, value: f64 },
    #[error("invalid singular search: {0}")]
    InvalidSearch(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `sum_i k_i e_i^2`. Every Lyapunov value in the crate goes through this function.
pub fn weighted_square_sum(gains: &[f64], e: &[f64]) -> f64 {
    gains.iter().zip(e).map(|(k, v)| k * v * v).sum()
}

#[derive(Clone, Debug)]
pub struct GuidingField {
    sys: SurfaceSystem,
    gains: Vec<f64>,
    domain: Domain,
}

impl GuidingField {
    pub fn new(sys: SurfaceSystem, gains: Vec<f64>) -> Result<Self, FieldError> {
        if gains.len() != sys.count() {
            return Err(FieldError::GainCount { expected: sys.count(), got: gains.len() });
        }
        if let Some((index, &value)) = gains.iter().enumerate().find(|(_, k)| !(**k > 0.0 && k.is_finite())) {
            return Err(FieldError::NonPositiveGain { index, value });
        }
        Ok(Self { sys, gains, domain: Domain::unbounded() })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn system(&self) -> &SurfaceSystem {
        &self.sys
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn chi(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.velocity(x)
    }

    /// `sum_i k_i e_i(x) grad e_i(x)`, the part of `chi` that pulls toward the path.
    pub fn correction(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.sys.dim();
        let mut jet = Jet::new(n, self.sys.count());
        jet.evaluate(&self.sys, x)?;
        let mut out = vec![0.0; n];
        for (i, k) in self.gains.iter().enumerate() {
            linalg::axpy(k * jet.values[i], jet.row(i, n), &mut out);
        }
        Ok(out)
    }

    /// `dV/dt` along `chi`, i.e. `-2 |sum_j k_j e_j grad e_j|^2`.
    pub fn lyapunov_rate(&self, x: &[f64]) -> Result<f64, GeometryError> {
        Ok(-2.0 * linalg::norm_sq(&self.correction(x)?))
    }
}

impl Dynamics for GuidingField {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        let n = self.sys.dim();
        let mut jet = Jet::new(n, self.sys.count());
        jet.evaluate(&self.sys, x)?;
        if self.sys.is_curve() {
            linalg::wedge_rows(&jet.grads, n, out);
        } else {
            out.fill(0.0);
        }
        for (i, k) in self.gains.iter().enumerate() {
            linalg::axpy(-k * jet.values[i], jet.row(i, n), out);
        }
        Ok(())
    }

    fn lyapunov(&self, x: &[f64]) -> Result<f64, GeometryError> {
        let mut e: SmallVec<[f64; 4]> = SmallVec::with_capacity(self.sys.count());
        for i in 0..self.sys.count() {
            e.push(self.sys.value(i, x)?);
        }
        Ok(weighted_square_sum(&self.gains, &e))
    }

    fn target_distance(&self, x: &[f64]) -> Option<f64> {
        chart::project_to_path(&self.sys, x).ok().map(|p| linalg::distance(&p, x))
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }
}

/// Parameters of the grid-plus-Newton singular point search.
#[derive(Clone, Debug)]
pub struct SingularSearch {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub grid_step: f64,
    /// Residual `|chi|` accepted as a zero.
    pub newton_tol: f64,
    /// Candidates that stop above `newton_tol` but at or below this residual are reported
    /// as unresolved; higher ones are nonzero local minima of `|chi|` and are dropped.
    pub unresolved_tol: f64,
    pub max_iter: usize,
}

impl SingularSearch {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, grid_step: f64) -> Self {
        Self { lower, upper, grid_step, newton_tol: 1e-8, unresolved_tol: 1e-4, max_iter: 50 }
    }

    fn validate(&self, dim: usize) -> Result<(), FieldError> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(FieldError::InvalidSearch("region dimension does not match the field"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(FieldError::InvalidSearch("region is empty"));
        }
        if !(self.grid_step > 0.0) {
            return Err(FieldError::InvalidSearch("grid step must be positive"));
        }
        Ok(())
    }

    fn counts(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| libm::floor((u - l) / self.grid_step + 1e-9) as usize + 1)
            .collect()
    }

    fn contains(&self, x: &[f64]) -> bool {
        let slack = 1e-9 * self.grid_step;
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= l - slack && *v <= u + slack)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint {
    pub point: Vec<f64>,
    /// `|chi|` at `point`.
    pub residual: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SingularReport {
    /// Zeros of the field with `|chi| <= newton_tol`.
    pub points: Vec<SingularPoint>,
    /// Grid minima where Newton did not reach the tolerance; kept with their residual.
    pub unresolved: Vec<SingularPoint>,
    /// Minimum distance from a located zero to the path (`inf` when there are none);
    /// `None` if no path atlas was supplied.
    pub dist_to_path: Option<f64>,
}

/// Locates zeros of `field` in a box: grid minima of `|field|^2`, refined by damped Newton
/// with a central-difference Jacobian, deduplicated at half the grid step.
pub fn find_zeros<D: Dynamics + Sync>(field: &D, search: &SingularSearch) -> Result<(Vec<SingularPoint>, Vec<SingularPoint>), FieldError> {
    let n = field.dim();
    search.validate(n)?;
    let counts = search.counts();
    let total: usize = counts.iter().product();
    let point_at = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for d in 0..n {
            x[d] = search.lower[d] + (idx % counts[d]) as f64 * search.grid_step;
            idx /= counts[d];
        }
        x
    };
    let values: Vec<f64> = par::map_indices(total, |i| {
        field.velocity(&point_at(i)).map(|v| linalg::norm_sq(&v)).unwrap_or(f64::INFINITY)
    });

    let mut strides = vec![1usize; n];
    for d in 1..n {
        strides[d] = strides[d - 1] * counts[d - 1];
    }
    let neighbours = 3usize.pow(n as u32);
    let is_local_min = |i: usize| -> bool {
        let v = values[i];
        if !v.is_finite() {
            return false;
        }
        let mut coords = vec![0usize; n];
        let mut rem = i;
        for d in 0..n {
            coords[d] = rem % counts[d];
            rem /= counts[d];
        }
        for code in 0..neighbours {
            let mut c = code;
            let mut j = 0isize;
            let mut valid = true;
            let mut centre = true;
            for d in 0..n {
                let off = (c % 3) as isize - 1;
                c /= 3;
                if off != 0 {
                    centre = false;
                }
                let k = coords[d] as isize + off;
                if k < 0 || k >= counts[d] as isize {
                    valid = false;
                    break;
                }
                j += k * strides[d] as isize;
            }
            if valid && !centre && values[j as usize] < v {
                return false;
            }
        }
        true
    };
    let candidates: Vec<usize> = (0..total).filter(|&i| is_local_min(i)).collect();

    let refined: Vec<(SingularPoint, bool)> = par::map_indices(candidates.len(), |c| {
        let x0 = point_at(candidates[c]);
        newton_zero(field, x0, search)
    });

    let min_sep = 0.5 * search.grid_step;
    let mut points: Vec<SingularPoint> = Vec::new();
    let mut unresolved: Vec<SingularPoint> = Vec::new();
    for (p, ok) in refined {
        if !search.contains(&p.point) || (!ok && !(p.residual <= search.unresolved_tol)) {
            continue;
        }
        let bucket = if ok { &mut points } else { &mut unresolved };
        if !bucket.iter().any(|q| linalg::distance(&q.point, &p.point) < min_sep) {
            bucket.push(p);
        }
    }
    unresolved.retain(|u| !points.iter().any(|p| linalg::distance(&p.point, &u.point) < min_sep));
    Ok((points, unresolved))
}

fn newton_zero<D: Dynamics>(field: &D, mut x: Vec<f64>, search: &SingularSearch) -> (SingularPoint, bool) {
    let n = x.len();
    let residual_of = |x: &[f64]| field.velocity(x).map(|v| linalg::norm(&v)).unwrap_or(f64::INFINITY);
    let mut f = match field.velocity(&x) {
        Ok(v) => v,
        Err(_) => return (SingularPoint { point: x, residual: f64::INFINITY }, false),
    };
    let mut res = linalg::norm(&f);
    for _ in 0..search.max_iter {
        if res <= search.newton_tol {
            break;
        }
        let mut jac = vec![0.0; n * n];
        for j in 0..n {
            let h = 1e-7 * (1.0 + libm::fabs(x[j]));
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = match (field.velocity(&xp), field.velocity(&xm)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return (SingularPoint { point: x, residual: res }, false),
            };
            for i in 0..n {
                jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        if linalg::solve_in_place(&mut jac, &mut delta, n).is_none() {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let r = residual_of(&trial);
            if r < res {
                x = trial;
                res = r;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        f = match field.velocity(&x) {
            Ok(v) => v,
            Err(_) => break,
        };
    }
    let ok = res <= search.newton_tol;
    (SingularPoint { point: x, residual: res }, ok)
}

/// Singular set of a guiding field inside `search`'s box. With an atlas, also reports the
/// distance from the located zeros to the path.
pub fn find_singular_points(
    field: &GuidingField,
    search: &SingularSearch,
    atlas: Option<&PathAtlas>,
) -> Result<SingularReport, FieldError> {
    let (points, unresolved) = find_zeros(field, search)?;
    let dist_to_path = atlas.map(|atlas| {
        points
            .iter()
            .filter_map(|p| chart::distance_to_path(field.system(), atlas, &p.point).ok())
            .fold(f64::INFINITY, f64::min)
    });
    Ok(SingularReport { points, unresolved, dist_to_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::get_scenario;

    fn circle2d(k: f64) -> GuidingField {
        GuidingField::new(SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap(), vec![k]).unwrap()
    }

    #[test]
    fn chi_examples() {
        assert_eq!(circle2d(1.0).chi(&[2.0, 0.0]).unwrap(), vec![0.0, 4.0]);
        for k in [0.1, 1.0, 7.5] {
            assert_eq!(circle2d(k).chi(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        }
        assert_eq!(circle2d(1.0).chi(&[3.0, 0.0]).unwrap(), vec![-30.0, 6.0]);
    }

    #[test]
    fn lyapunov_examples() {
        let f = circle2d(1.0);
        assert_eq!(f.lyapunov(&[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(f.lyapunov_rate(&[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(f.lyapunov(&[3.0, 0.0]).unwrap(), 25.0);
        assert_eq!(f.lyapunov_rate(&[3.0, 0.0]).unwrap(), -1800.0);
    }

    #[test]
    fn gains_are_validated() {
        let sys = SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap();
        assert!(matches!(GuidingField::new(sys.clone(), vec![0.0]), Err(FieldError::NonPositiveGain { .. })));
        assert!(matches!(GuidingField::new(sys, vec![1.0, 1.0]), Err(FieldError::GainCount { .. })));
    }

    #[test]
    fn orthogonality_consequence_holds() {
        // <grad e_i, chi> = <grad e_i, -sum_j k_j e_j grad e_j>
        let sys = SurfaceSystem::from_exprs(3, &["x1^2 + x2^2 - 4", "x3 - x1 * x2 / 4"]).unwrap();
        let f = GuidingField::new(sys.clone(), vec![0.7, 2.0]).unwrap();
        for x in [[0.3, 1.2, -0.4], [2.0, -1.0, 0.5], [-1.5, 0.2, 3.0]] {
            let chi = f.chi(&x).unwrap();
            let corr = f.correction(&x).unwrap();
            for i in 0..2 {
                let g = sys.gradient(i, &x).unwrap();
                let lhs = linalg::dot(&g, &chi);
                let rhs = -linalg::dot(&g, &corr);
                assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn rate_vanishes_only_on_path_or_degenerate_gradients() {
        let f = circle2d(1.0);
        assert_eq!(f.lyapunov_rate(&[0.0, 2.0]).unwrap(), 0.0);
        assert_eq!(f.lyapunov_rate(&[0.0, 0.0]).unwrap(), 0.0);
        for x in [[1.0, 0.5], [3.0, -2.0], [0.01, 0.0]] {
            assert!(f.lyapunov_rate(&x).unwrap() < 0.0);
        }
    }

    #[test]
    fn circle2d_singular_set_is_origin() {
        let f = circle2d(1.0);
        let search = SingularSearch::new(vec![-5.0, -5.0], vec![5.0, 5.0], 0.25);
        let (points, unresolved) = find_zeros(&f, &search).unwrap();
        assert_eq!(points.len(), 1);
        assert!(linalg::norm(&points[0].point) <= 1e-8);
        assert!(points[0].residual <= 1e-8);
        // |chi|^2 = 4 r^2 (1 + (r^2 - 4)^2) also has a ring of nonzero minima near r^2 = 3.87
        assert!(unresolved.is_empty());
    }

    #[test]
    fn no_zeros_in_region_gives_empty_list() {
        let f = circle2d(1.0);
        let search = SingularSearch::new(vec![3.0, 3.0], vec![5.0, 5.0], 0.25);
        let (points, _) = find_zeros(&f, &search).unwrap();
        assert!(points.is_empty());
    }

    #[test]
    fn circle3d_zeros_brute_force() {
        // brute force |chi| over the grid: the only grid point where chi vanishes is the
        // origin; on the z-axis |chi| = k_2 |z|.
        let s = get_scenario("circle3d").unwrap();
        let f = s.guiding().unwrap();
        let step = 0.25;
        let mut zero_points = Vec::new();
        for i in 0..=24 {
            for j in 0..=24 {
                for k in 0..=24 {
                    let x = [-3.0 + i as f64 * step, -3.0 + j as f64 * step, -3.0 + k as f64 * step];
                    let v = linalg::norm(&f.chi(&x).unwrap());
                    if x[0] == 0.0 && x[1] == 0.0 {
                        assert!((v - x[2].abs()).abs() < 1e-12);
                    }
                    if v < 1e-12 {
                        zero_points.push(x);
                    }
                }
            }
        }
        assert_eq!(zero_points, vec![[0.0, 0.0, 0.0]]);
        let search = SingularSearch::new(vec![-3.0; 3], vec![3.0; 3], 0.25);
        let (points, _) = find_zeros(f, &search).unwrap();
        assert_eq!(points.len(), 1);
        assert!(linalg::norm(&points[0].point) < 1e-8);
    }

    #[test]
    fn invalid_search_is_rejected() {
        let f = circle2d(1.0);
        let bad = SingularSearch::new(vec![1.0, 0.0], vec![0.0, 1.0], 0.25);
        assert!(find_zeros(&f, &bad).is_err());
        let bad_step = SingularSearch::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0);
        assert!(find_zeros(&f, &bad_step).is_err());
    }
}
