//! Grid estimate of the domain of attraction and topological evidence for its shape:
//! connected components of a label and winding numbers of loops through the chart.

use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{global_chart, wrap_angle, ChartError, ChartOptions, PathAtlas};
use crate::dynamics::{Dynamics, Puncture};
use crate::field::GuidingField;
use crate::flow::{Direction, Integrator, IntegratorOptions, Termination};
use crate::linalg;
use crate::par;
use crate::wazewski::WazewskiConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellLabel {
    Converged,
    SingularCapture,
    Undecided,
    Excluded,
}

impl CellLabel {
    pub const ALL: [CellLabel; 4] = [CellLabel::Converged, CellLabel::SingularCapture, CellLabel::Undecided, CellLabel::Excluded];

    pub fn as_str(self) -> &'static str {
        match self {
            CellLabel::Converged => "converged",
            CellLabel::SingularCapture => "singular_capture",
            CellLabel::Undecided => "undecided",
            CellLabel::Excluded => "excluded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DoaError {
    #[error("grid needs at least 2 cells per axis and one bound pair per axis")]
    Resolution,
    #[error("grid box is empty or not finite")]
    EmptyBox,
    #[error("loop must be closed (first point equal to last) with at least 3 points")]
    OpenLoop,
    #[error("loop sample {index}: {source}")]
    Unchartable { index: usize, source: ChartError },
    #[error("theta jumps by {jump} after loop sample {index}; refine the loop")]
    Refine { index: usize, jump: f64 },
}

/// Cell labels over an axis-aligned box. Cells are stored with the first axis varying
/// fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DoaGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    pub labels: Vec<CellLabel>,
}

impl DoaGrid {
    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.resolution[axis] as f64
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.resolution
            .iter()
            .map(|r| {
                let i = flat % r;
                flat /= r;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().rev().zip(self.resolution.iter().rev()).fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.lower[d] + (i as f64 + 0.5) * self.cell_width(d))
            .collect()
    }

    /// Whether the closed cell contains `x`.
    pub fn cell_contains(&self, flat: usize, x: &[f64]) -> bool {
        self.multi_index(flat).iter().enumerate().all(|(d, &i)| {
            let lo = self.lower[d] + i as f64 * self.cell_width(d);
            let hi = lo + self.cell_width(d);
            x[d] >= lo && x[d] <= hi
        })
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

#[derive(Clone, Debug)]
pub struct DoaOptions {
    pub horizon: f64,
    pub flow: IntegratorOptions,
    /// Balls whose cells are labeled excluded and not integrated.
    pub exclusions: Vec<Puncture>,
    /// Known singular points; cells containing one are labeled as captured.
    pub singular_points: Vec<Vec<f64>>,
}

impl Default for DoaOptions {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            flow: IntegratorOptions { stop_on_converge: true, sample_every: usize::MAX, ..IntegratorOptions::default() },
            exclusions: Vec::new(),
            singular_points: Vec::new(),
        }
    }
}

/// Classifies each cell center by integrating the flow from it.
pub fn estimate_doa<D: Dynamics + Sync + ?Sized>(
    field: &D,
    lower: &[f64],
    upper: &[f64],
    resolution: &[usize],
    opts: &DoaOptions,
) -> Result<DoaGrid, DoaError> {
    let n = field.dim();
    if resolution.len() != n || lower.len() != n || upper.len() != n || resolution.iter().any(|r| *r < 2) {
        return Err(DoaError::Resolution);
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
        return Err(DoaError::EmptyBox);
    }
    let mut grid = DoaGrid { lower: lower.to_vec(), upper: upper.to_vec(), resolution: resolution.to_vec(), labels: Vec::new() };
    let labels = par::map_indices(grid.cell_count(), |i| {
        let c = grid.center(i);
        if opts.exclusions.iter().any(|p| p.contains(&c)) {
            return CellLabel::Excluded;
        }
        if opts.singular_points.iter().any(|s| grid.cell_contains(i, s)) {
            return CellLabel::SingularCapture;
        }
        classify_start(field, &c, opts)
    });
    grid.labels = labels;
    Ok(grid)
}

fn classify_start<D: Dynamics + ?Sized>(field: &D, x0: &[f64], opts: &DoaOptions) -> CellLabel {
    let mut it = match Integrator::new(field, x0, Direction::Forward, &opts.flow) {
        Ok(it) => it,
        Err(_) => return CellLabel::Undecided,
    };
    match it.run(opts.horizon, |_, _, _| {}) {
        Ok(Termination::ConvergedToPath) => CellLabel::Converged,
        Ok(Termination::SingularStall) => CellLabel::SingularCapture,
        Ok(Termination::HorizonReached) => {
            let close = field.target_distance(it.state()).is_some_and(|d| d <= opts.flow.converge_dist)
                && it.lyapunov() <= opts.flow.converge_lyapunov;
            if close {
                CellLabel::Converged
            } else {
                CellLabel::Undecided
            }
        }
        _ => CellLabel::Undecided,
    }
}

/// Connected components of the cells carrying `label`, with face adjacency. Returns the
/// component sizes in order of their smallest cell index.
pub fn components(grid: &DoaGrid, label: CellLabel) -> Vec<usize> {
    let n = grid.dim();
    let mut seen = vec![false; grid.labels.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..grid.labels.len() {
        if seen[start] || grid.labels[start] != label {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(cell) = stack.pop() {
            size += 1;
            let idx = grid.multi_index(cell);
            for d in 0..n {
                for forward in [false, true] {
                    let mut nb = idx.clone();
                    if forward {
                        if nb[d] + 1 >= grid.resolution[d] {
                            continue;
                        }
                        nb[d] += 1;
                    } else {
                        if nb[d] == 0 {
                            continue;
                        }
                        nb[d] -= 1;
                    }
                    let f = grid.flat_index(&nb);
                    if !seen[f] && grid.labels[f] == label {
                        seen[f] = true;
                        stack.push(f);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindingResult {
    /// Chart angle at each loop sample, as returned by the chart (not unwrapped).
    pub thetas: Vec<f64>,
    pub winding: i64,
    pub max_jump: f64,
}

/// Largest angle step accepted between consecutive samples; beyond it the direction of
/// travel is ambiguous.
pub const MAX_THETA_JUMP: f64 = core::f64::consts::FRAC_PI_2;

/// Number of times a closed loop winds around the path, read from the chart angle.
pub fn winding_number(
    field: &GuidingField,
    wz: &WazewskiConfig,
    atlas: &PathAtlas,
    loop_points: &[Vec<f64>],
    opts: &ChartOptions,
) -> Result<WindingResult, DoaError> {
    let (first, last) = match (loop_points.first(), loop_points.last()) {
        (Some(f), Some(l)) if loop_points.len() >= 3 => (f, l),
        _ => return Err(DoaError::OpenLoop),
    };
    if linalg::distance(first, last) > 1e-12 * (1.0 + linalg::norm(first)) {
        return Err(DoaError::OpenLoop);
    }
    let charted = par::map_indices(loop_points.len(), |i| global_chart(field, wz, atlas, &loop_points[i], opts));
    let mut thetas = Vec::with_capacity(charted.len());
    for (index, c) in charted.into_iter().enumerate() {
        match c {
            Ok(s) => thetas.push(s.point.theta),
            Err(source) => return Err(DoaError::Unchartable { index, source }),
        }
    }
    let mut total = 0.0;
    let mut max_jump: f64 = 0.0;
    for (index, w) in thetas.windows(2).enumerate() {
        let d = wrap_angle(w[1] - w[0]);
        if libm::fabs(d) >= MAX_THETA_JUMP {
            return Err(DoaError::Refine { index, jump: d });
        }
        max_jump = max_jump.max(libm::fabs(d));
        total += d;
    }
    let winding = libm::round(total / core::f64::consts::TAU) as i64;
    Ok(WindingResult { thetas, winding, max_jump })
}

/// `samples + 1` points on a circle in the plane of the first two coordinates, closed
/// exactly (last point equals the first). Remaining coordinates are taken from `center`.
pub fn circle_loop(center: &[f64], radius: f64, samples: usize, phase: f64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..samples)
        .map(|k| {
            let a = phase + core::f64::consts::TAU * k as f64 / samples as f64;
            let mut p = center.to_vec();
            p[0] += radius * libm::cos(a);
            p[1] += radius * libm::sin(a);
            p
        })
        .collect();
    pts.push(pts[0].clone());
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{build_path_atlas, DEFAULT_ATLAS_STEP};
    use crate::geometry::SurfaceSystem;

    fn circle2d() -> GuidingField {
        GuidingField::new(SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap(), vec![1.0]).unwrap()
    }

    fn labeled(res: &[usize], converged: impl Fn(&[usize]) -> bool) -> DoaGrid {
        let mut g = DoaGrid { lower: vec![0.0; res.len()], upper: vec![1.0; res.len()], resolution: res.to_vec(), labels: vec![] };
        g.labels = (0..g.cell_count())
            .map(|i| if converged(&g.multi_index(i)) { CellLabel::Converged } else { CellLabel::Excluded })
            .collect();
        g
    }

    #[test]
    fn index_round_trip() {
        let g = labeled(&[3, 4, 5], |_| true);
        for i in 0..g.cell_count() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.multi_index(1), vec![1, 0, 0]);
    }

    #[test]
    fn component_examples() {
        let all_excluded = labeled(&[5, 5], |_| false);
        assert!(components(&all_excluded, CellLabel::Converged).is_empty());
        let two = labeled(&[6, 6], |i| (i[0] < 2 && i[1] < 2) || (i[0] > 3 && i[1] > 3));
        assert_eq!(components(&two, CellLabel::Converged), vec![4, 4]);
        // diagonal neighbours are not adjacent
        let diag = labeled(&[2, 2], |i| i[0] == i[1]);
        assert_eq!(components(&diag, CellLabel::Converged), vec![1, 1]);
        let slab_removed = labeled(&[5, 5, 5], |i| i[1] != 2);
        assert_eq!(components(&slab_removed, CellLabel::Converged), vec![50, 50]);
        let punctured = labeled(&[5, 5, 5], |i| i != [2, 2, 2]);
        assert_eq!(components(&punctured, CellLabel::Converged), vec![124]);
    }

    #[test]
    fn doa_small_grid_circle2d() {
        let f = circle2d();
        let opts = DoaOptions { singular_points: vec![vec![0.0, 0.0]], ..DoaOptions::default() };
        let g = estimate_doa(&f, &[-5.0, -5.0], &[5.0, 5.0], &[10, 10], &opts).unwrap();
        for i in 0..g.cell_count() {
            let c = g.center(i);
            if linalg::norm(&c) > libm::sqrt(2.0) {
                assert_eq!(g.labels[i], CellLabel::Converged, "cell {c:?}");
            } else {
                assert_ne!(g.labels[i], CellLabel::Converged);
            }
        }
        assert_eq!(g.count(CellLabel::SingularCapture), 4);
        assert_eq!(components(&g, CellLabel::Converged), vec![96]);
    }

    #[test]
    fn doa_rejects_bad_resolution() {
        let f = circle2d();
        assert_eq!(estimate_doa(&f, &[0.0, 0.0], &[1.0, 1.0], &[1, 4], &DoaOptions::default()), Err(DoaError::Resolution));
    }

    #[test]
    fn winding_examples() {
        let f = circle2d();
        let wz = WazewskiConfig::for_field(&f, 1.0).unwrap();
        let atlas = build_path_atlas(f.system(), &[2.0, 0.0], DEFAULT_ATLAS_STEP).unwrap();
        let opts = ChartOptions::default();
        let on_path = winding_number(&f, &wz, &atlas, &circle_loop(&[0.0, 0.0], 2.0, 90, 0.0), &opts).unwrap();
        assert_eq!(on_path.winding, 1);
        let small = winding_number(&f, &wz, &atlas, &circle_loop(&[2.0, 0.0], 0.1, 60, 0.0), &opts).unwrap();
        assert_eq!(small.winding, 0);
        let reversed: Vec<Vec<f64>> = circle_loop(&[0.0, 0.0], 2.0, 90, 0.0).into_iter().rev().collect();
        assert_eq!(winding_number(&f, &wz, &atlas, &reversed, &opts).unwrap().winding, -1);
    }

    #[test]
    fn winding_rejects_open_and_coarse_loops() {
        let f = circle2d();
        let wz = WazewskiConfig::for_field(&f, 1.0).unwrap();
        let atlas = build_path_atlas(f.system(), &[2.0, 0.0], DEFAULT_ATLAS_STEP).unwrap();
        let mut open = circle_loop(&[0.0, 0.0], 2.0, 12, 0.0);
        open.pop();
        assert_eq!(winding_number(&f, &wz, &atlas, &open, &ChartOptions::default()), Err(DoaError::OpenLoop));
        let coarse = circle_loop(&[0.0, 0.0], 2.0, 3, 0.0);
        assert!(matches!(winding_number(&f, &wz, &atlas, &coarse, &ChartOptions::default()), Err(DoaError::Refine { .. })));
    }
}
