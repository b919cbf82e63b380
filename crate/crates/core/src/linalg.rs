//! Small dense symmetric eigenvalue helpers (dimension ≤ 3).

use crate::grid::MAX_DIM;

/// Eigenvalues of the leading `dim × dim` block of a symmetric matrix, in
/// ascending order; trailing entries are `NaN`.
pub fn sym_eigenvalues(m: &[[f64; MAX_DIM]; MAX_DIM], dim: usize) -> [f64; MAX_DIM] {
    let mut out = [f64::NAN; MAX_DIM];
    match dim {
        1 => out[0] = m[0][0],
        2 => {
            let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            out[0] = mean - rad;
            out[1] = mean + rad;
        }
        3 => {
            let mat = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
            let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            out.copy_from_slice(&ev);
        }
        _ => {}
    }
    out
}

pub fn sym_min_eigenvalue(m: &[[f64; MAX_DIM]; MAX_DIM], dim: usize) -> f64 {
    sym_eigenvalues(m, dim)[0]
}

pub fn sym_max_eigenvalue(m: &[[f64; MAX_DIM]; MAX_DIM], dim: usize) -> f64 {
    sym_eigenvalues(m, dim)[dim - 1]
}
