//! Small dense vector and matrix helpers. Matrices are row-major slices.

use alloc::vec::Vec;
use smallvec::SmallVec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// Determinant of an `n x n` matrix by Gaussian elimination with partial pivoting.
/// The matrix is consumed as scratch space.
pub fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = libm::fabs(a[col * n + col]);
        for row in col + 1..n {
            let v = libm::fabs(a[row * n + col]);
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
    }
    det
}

/// Solves `A x = b` in place (`b` becomes `x`). Returns `None` for a numerically
/// singular system.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let mut pivot = col;
        let mut best = libm::fabs(a[col * n + col]);
        for row in col + 1..n {
            let v = libm::fabs(a[row * n + col]);
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best <= scale * 1e-14 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Some(())
}

/// Generalized cross product of `n - 1` row vectors of length `n` (row-major `rows`).
///
/// Component `j` (0-based) is the cofactor `(-1)^{n+j+1} * minor_j` of the last row in
/// the `n x n` matrix whose first `n - 1` rows are the inputs: the formal determinant with
/// the standard basis in the last row. For `n = 2` this is the counterclockwise quarter
/// turn `(a, b) -> (-b, a)`; for `n = 3` it is the ordinary cross product.
pub fn wedge_rows(rows: &[f64], n: usize, out: &mut [f64]) {
    assert!(n >= 2, "wedge needs ambient dimension >= 2");
    assert_eq!(rows.len(), (n - 1) * n, "wedge needs exactly n - 1 vectors of length n");
    assert_eq!(out.len(), n);
    let m = n - 1;
    let mut minor: SmallVec<[f64; 16]> = SmallVec::from_elem(0.0, m * m);
    for (j, slot) in out.iter_mut().enumerate() {
        for r in 0..m {
            let mut c_out = 0;
            for c in 0..n {
                if c != j {
                    minor[r * m + c_out] = rows[r * n + c];
                    c_out += 1;
                }
            }
        }
        let d = det_in_place(&mut minor, m);
        // cofactor sign for position (n-1, j) in 0-based indexing
        let sign = if (m + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        *slot = sign * d;
    }
}
