//! Compressed sparse rows, ILU(0) and preconditioned BiCGSTAB.
//!
//! Everything here is sequential so a solve is bit-reproducible.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Appends the next row. Entries may arrive unsorted and with repeated
    /// columns; they are sorted and summed.
    pub fn push_row(&mut self, entries: &mut Vec<(usize, f64)>) {
        entries.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in entries.iter() {
            debug_assert!(c < self.n);
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.row_ptr.push(self.cols.len());
        entries.clear();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn is_complete(&self) -> bool {
        self.row_ptr.len() == self.n + 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[k] == i {
                    *d = k;
                }
            }
            if *d == usize::MAX {
                return Err(Error::LinearSolve(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let j = lu.cols[k];
                if j >= i {
                    break;
                }
                let pivot = lu.vals[diag[j]];
                if pivot == 0.0 {
                    return Err(Error::LinearSolve(format!("zero pivot in row {j}")));
                }
                let factor = lu.vals[k] / pivot;
                lu.vals[k] = factor;
                for kk in diag[j] + 1..lu.row_ptr[j + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= factor * lu.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 || !lu.vals[diag[i]].is_finite() {
                return Err(Error::LinearSolve(format!("singular ILU pivot in row {i}")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = z[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s / lu.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned BiCGSTAB with ILU(0). `x` holds the initial guess on
/// entry. Success means the true residual satisfies `|b - Ax| <= rtol |b|`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<SolveStats> {
    if !a.is_complete() || b.len() != a.n || x.len() != a.n {
        return Err(Error::LinearSolve("dimension mismatch".into()));
    }
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let ilu = Ilu0::new(a)?;
    let target = rtol * bnorm;
    let mut r = vec![0.0; n];
    let mut total = 0;
    // restarts recover from stagnation of the recursively updated residual
    for _restart in 0..8 {
        a.mul_vec(x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let mut rn = norm(&r);
        if rn <= target {
            return Ok(SolveStats {
                iterations: total,
                relative_residual: rn / bnorm,
            });
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut t = vec![0.0; n];
        while total < max_iter {
            total += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            y.copy_from_slice(&p);
            ilu.apply(&mut y);
            a.mul_vec(&y, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 {
                break;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) <= target {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                break;
            }
            z.copy_from_slice(&s);
            ilu.apply(&mut z);
            a.mul_vec(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                break;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            rn = norm(&r);
            if !rn.is_finite() {
                return Err(Error::LinearSolve("non-finite residual".into()));
            }
            if rn <= target {
                break;
            }
        }
        if total >= max_iter {
            break;
        }
    }
    a.mul_vec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let rel = norm(&r) / bnorm;
    if rel <= rtol {
        Ok(SolveStats {
            iterations: total,
            relative_residual: rel,
        })
    } else {
        Err(Error::LinearSolve(format!(
            "BiCGSTAB stalled after {total} iterations at relative residual {rel:e}"
        )))
    }
}
