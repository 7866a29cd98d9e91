//! Surface functions whose joint zero set is the desired path, their exact gradients and
//! the generalized wedge product of those gradients.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use smallvec::SmallVec;

use crate::expr::{EvalError, Expr, ParseError};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("surface {surface}: {source}")]
    Evaluation { surface: usize, source: EvalError },
    #[error("surface {surface}: {source}")]
    Parse { surface: usize, source: ParseError },
    #[error("surface index {index} out of range (system has {count} surfaces)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("a system in dimension {dim} needs between 1 and {max} surfaces, got {got}")]
    SurfaceCount { dim: usize, max: usize, got: usize },
    #[error("ambient dimension must be at least 2, got {0}")]
    Dimension(usize),
}

/// Hand-written value and gradient for a surface, used on hot paths in place of
/// interpreting the expression.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticSurface {
    pub value: fn(&[f64]) -> f64,
    pub gradient: fn(&[f64], &mut [f64]),
}

#[derive(Clone, Debug)]
pub struct Surface {
    expr: Expr,
    source: String,
    analytic: Option<AnalyticSurface>,
}

impl Surface {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        Ok(Self { expr: Expr::parse(text, dim)?, source: text.into(), analytic: None })
    }

    /// Attaches an analytic implementation; it must agree with the expression.
    pub fn with_analytic(mut self, analytic: AnalyticSurface) -> Self {
        self.analytic = Some(analytic);
        self
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn analytic(&self) -> Option<&AnalyticSurface> {
        self.analytic.as_ref()
    }
}

/// The stacked surface functions `e = (e_1, ..., e_m)` in ambient dimension `n`.
///
/// A one-dimensional path uses `m = n - 1` surfaces; fewer are accepted for the gradient
/// part alone.
#[derive(Clone, Debug)]
pub struct SurfaceSystem {
    dim: usize,
    surfaces: Vec<Surface>,
}

impl SurfaceSystem {
    pub fn new(dim: usize, surfaces: Vec<Surface>) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::Dimension(dim));
        }
        if surfaces.is_empty() || surfaces.len() > dim - 1 {
            return Err(GeometryError::SurfaceCount { dim, max: dim - 1, got: surfaces.len() });
        }
        Ok(Self { dim, surfaces })
    }

    pub fn from_exprs(dim: usize, texts: &[&str]) -> Result<Self, GeometryError> {
        let surfaces = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Surface::parse(t, dim).map_err(|source| GeometryError::Parse { surface: i, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dim, surfaces)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of surface functions.
    pub fn count(&self) -> usize {
        self.surfaces.len()
    }

    /// True when the path is one-dimensional (`m = n - 1`) and the wedge term exists.
    pub fn is_curve(&self) -> bool {
        self.surfaces.len() + 1 == self.dim
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn value(&self, index: usize, x: &[f64]) -> Result<f64, GeometryError> {
        let s = self.surface(index)?;
        match &s.analytic {
            Some(a) => Ok((a.value)(x)),
            None => s.expr.eval(x).map_err(|source| GeometryError::Evaluation { surface: index, source }),
        }
    }

    /// The path-following error `e(x)`.
    pub fn error_map(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        (0..self.count()).map(|i| self.value(i, x)).collect()
    }

    /// Exact gradient of surface `index` (zero-based).
    pub fn gradient(&self, index: usize, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut out = vec![0.0; self.dim];
        self.surface(index)?;
        self.value_and_gradient_into(index, x, &mut out)?;
        Ok(out)
    }

    /// Gradient through forward-mode differentiation of the expression, ignoring any
    /// analytic implementation.
    pub fn expr_gradient(&self, index: usize, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let s = self.surface(index)?;
        let d = s.expr.eval_dual(x).map_err(|source| GeometryError::Evaluation { surface: index, source })?;
        Ok(d.partials.to_vec())
    }

    /// All gradients as rows.
    pub fn gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
        (0..self.count()).map(|i| self.gradient(i, x)).collect()
    }

    /// Writes `e(x)` into `values` and the gradients row-major into `grads` (`m x n`).
    pub fn jet_into(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) -> Result<(), GeometryError> {
        let n = self.dim;
        for i in 0..self.count() {
            values[i] = self.value_and_gradient_into(i, x, &mut grads[i * n..(i + 1) * n])?;
        }
        Ok(())
    }

    fn value_and_gradient_into(&self, index: usize, x: &[f64], out: &mut [f64]) -> Result<f64, GeometryError> {
        let s = &self.surfaces[index];
        match &s.analytic {
            Some(a) => {
                (a.gradient)(x, out);
                Ok((a.value)(x))
            }
            None => {
                let d = s.expr.eval_dual(x).map_err(|source| GeometryError::Evaluation { surface: index, source })?;
                out.copy_from_slice(&d.partials);
                Ok(d.value)
            }
        }
    }

    fn surface(&self, index: usize) -> Result<&Surface, GeometryError> {
        self.surfaces.get(index).ok_or(GeometryError::IndexOutOfRange { index, count: self.count() })
    }

    /// `wedge` of the gradients at `x`; zero when the system is not a curve.
    pub fn tangent(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut jet = Jet::new(self.dim, self.count());
        jet.evaluate(self, x)?;
        let mut out = vec![0.0; self.dim];
        if self.is_curve() {
            linalg::wedge_rows(&jet.grads, self.dim, &mut out);
        }
        Ok(out)
    }
}

/// Reusable buffers holding `e(x)` and the gradient rows at one point.
pub(crate) struct Jet {
    pub values: SmallVec<[f64; 4]>,
    pub grads: SmallVec<[f64; 16]>,
}

impl Jet {
    pub fn new(dim: usize, count: usize) -> Self {
        Self { values: SmallVec::from_elem(0.0, count), grads: SmallVec::from_elem(0.0, dim * count) }
    }

    pub fn evaluate(&mut self, sys: &SurfaceSystem, x: &[f64]) -> Result<(), GeometryError> {
        sys.jet_into(x, &mut self.values, &mut self.grads)
    }

    pub fn row(&self, i: usize, n: usize) -> &[f64] {
        &self.grads[i * n..(i + 1) * n]
    }
}

/// Generalized cross product of `n - 1` vectors in `R^n`.
///
/// The result is orthogonal to every input, vanishes exactly when the inputs are
/// linearly dependent, and for `n = 2` is the counterclockwise quarter turn of the single
/// input.
///
/// # Panics
/// If the inputs are not `n - 1` vectors of common length `n >= 2`.
pub fn wedge(vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = vectors.len() + 1;
    let mut rows = Vec::with_capacity(n * (n - 1));
    for v in vectors {
        assert_eq!(v.len(), n, "wedge needs n - 1 vectors of length n");
        rows.extend_from_slice(v);
    }
    let mut out = vec![0.0; n];
    linalg::wedge_rows(&rows, n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use proptest::prelude::*;

    fn circle2d() -> SurfaceSystem {
        SurfaceSystem::from_exprs(2, &["x1^2 + x2^2 - 4"]).unwrap()
    }

    fn circle3d() -> SurfaceSystem {
        SurfaceSystem::from_exprs(3, &["x1^2 + x2^2 - 4", "x3"]).unwrap()
    }

    #[test]
    fn error_map_examples() {
        assert_eq!(circle2d().error_map(&[2.0, 0.0]).unwrap(), vec![0.0]);
        assert_eq!(circle2d().error_map(&[3.0, 0.0]).unwrap(), vec![5.0]);
        assert_eq!(circle3d().error_map(&[0.0, 2.0, 1.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(circle2d().gradient(0, &[2.0, 0.0]).unwrap(), vec![4.0, 0.0]);
        assert_eq!(circle2d().gradient(0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(circle3d().gradient(1, &[0.3, -1.2, 7.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(circle2d().gradient(1, &[0.0, 0.0]), Err(GeometryError::IndexOutOfRange { .. })));
    }

    #[test]
    fn evaluation_fault_names_surface() {
        let sys = SurfaceSystem::from_exprs(3, &["x1", "1 / x2"]).unwrap();
        let err = sys.error_map(&[1.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, GeometryError::Evaluation { surface: 1, source: EvalError::DivisionByZero });
    }

    #[test]
    fn surface_count_is_validated() {
        assert!(matches!(
            SurfaceSystem::from_exprs(2, &["x1", "x2"]),
            Err(GeometryError::SurfaceCount { .. })
        ));
        assert!(SurfaceSystem::from_exprs(4, &["x1", "x2"]).is_ok());
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge(&[vec![4.0, 0.0]]), vec![0.0, 4.0]);
        assert_eq!(wedge(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]), vec![0.0, 0.0, 1.0]);
        let z = wedge(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]);
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wedge_is_quarter_turn_in_plane() {
        assert_eq!(wedge(&[vec![3.0, 5.0]]), vec![-5.0, 3.0]);
    }

    proptest! {
        #[test]
        fn wedge_is_orthogonal_and_alternating(
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 4), 3),
            c in -2.0f64..2.0,
        ) {
            let w = wedge(&rows);
            let scale = 1.0 + norm(&w);
            for r in &rows {
                prop_assert!(dot(&w, r).abs() <= 1e-9 * scale * (1.0 + norm(r)));
            }
            let mut swapped = rows.clone();
            swapped.swap(0, 2);
            let ws = wedge(&swapped);
            for (a, b) in w.iter().zip(&ws) {
                prop_assert!((a + b).abs() <= 1e-10 * scale);
            }
            let mut scaled = rows.clone();
            for v in scaled[1].iter_mut() { *v *= c; }
            let wc = wedge(&scaled);
            for (a, b) in w.iter().zip(&wc) {
                prop_assert!((c * a - b).abs() <= 1e-10 * scale * (1.0 + c.abs()));
            }
        }

        #[test]
        fn dual_gradients_match_central_differences(
            x in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let sys = SurfaceSystem::from_exprs(3, &["x1^3 * x2 - x3^2 / (1 + x1^2)", "(x1 - x2) * (x2 + 2 * x3)"]).unwrap();
            let h = 1e-5;
            for i in 0..2 {
                let g = sys.gradient(i, &x).unwrap();
                for j in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (sys.value(i, &xp).unwrap() - sys.value(i, &xm).unwrap()) / (2.0 * h);
                    prop_assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()));
                }
            }
        }
    }
}
