//! Pointwise operators and the algebraic inequalities behind the theory.
//!
//! Sign convention: an equation residual is always `−(elliptic operator)`.
//! [`normalized_pxlap`] returns `F = −(tr X + (p−2)⟨Xη,η⟩/|η|²)`, which is
//! already a residual (supersolutions have `F ≥ 0`). [`regularized_op`]
//! returns the operator itself, without the leading minus.
//!
//! Tolerance scales, used by the fuzz campaigns:
//! - monotonicity: `max(1, (|a|+|b|)^p)`
//! - continuity: `max(1, (|a|+|b|)^{p−1})`
//! - log inequalities: `max(1, rhs)`
//! - pointwise identities: sum of magnitudes of the terms being compared
//! - PSD: `|η|²`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Jet, Point, MAX_DIM};
use crate::linalg;

pub type Vector = [f64; MAX_DIM];
pub type Matrix = [[f64; MAX_DIM]; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSample {
    pub x: Point,
    pub jet: Jet,
    pub p: f64,
    pub dp: Vector,
    pub delta: f64,
}

impl OperatorSample {
    pub fn new(jet: Jet, p: f64) -> Self {
        Self {
            x: [0.0; 2],
            jet,
            p,
            dp: [0.0; MAX_DIM],
            delta: 0.0,
        }
    }

    pub fn with_dp(mut self, dp: &[f64]) -> Self {
        self.dp[..dp.len()].copy_from_slice(dp);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vector {
    let mut out = [0.0; MAX_DIM];
    for (k, o) in out.iter_mut().enumerate().take(a.len()) {
        *o = a[k] - b[k];
    }
    out
}

/// `F(x, η, X) = −(tr X + (p−2)/|η|² ⟨Xη, η⟩)`.
pub fn normalized_pxlap(s: &OperatorSample) -> Result<f64> {
    let e2 = s.jet.eta_norm_sq();
    if e2 == 0.0 {
        return Err(Error::GradientVanishes);
    }
    Ok(-(s.jet.trace() + (s.p - 2.0) / e2 * s.jet.quad_form(s.jet.eta())))
}

/// `|η|^{p−2} η`, extended by 0 at `η = 0`.
pub fn strong_flux(eta: &[f64], p: f64) -> Vector {
    let mut out = [0.0; MAX_DIM];
    let n2 = norm_sq(eta);
    if n2 == 0.0 {
        return out;
    }
    let c = n2.powf(0.5 * (p - 2.0));
    for (o, e) in out.iter_mut().zip(eta) {
        *o = c * e;
    }
    out
}

/// `|η|^{p−2} log|η| (η · Dp)`, extended by 0 at `η = 0`.
pub fn log_drift(eta: &[f64], p: f64, dp: &[f64]) -> f64 {
    let n2 = norm_sq(eta);
    if n2 == 0.0 {
        return 0.0;
    }
    n2.powf(0.5 * (p - 2.0)) * 0.5 * n2.ln() * dot(eta, &dp[..eta.len()])
}

/// Jacobian `∂_j (|Du|^{p(x)−2} ∂_i u)` of the flux field for a function
/// with jet `(η, X)` and exponent gradient `Dp`.
pub fn flux_jacobian(s: &OperatorSample) -> Result<Matrix> {
    let n = s.jet.dim;
    let eta = s.jet.eta();
    let e2 = s.jet.eta_norm_sq();
    if e2 == 0.0 {
        return Err(Error::GradientVanishes);
    }
    let g = e2.powf(0.5 * (s.p - 2.0));
    let log_e = 0.5 * e2.ln();
    let mut xeta = [0.0; MAX_DIM];
    for (j, v) in xeta.iter_mut().enumerate().take(n) {
        *v = (0..n).map(|k| s.jet.hess[j][k] * eta[k]).sum();
    }
    let mut jac = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            jac[i][j] = g * s.jet.hess[i][j]
                + (s.p - 2.0) * g / e2 * eta[i] * xeta[j]
                + g * log_e * eta[i] * s.dp[j];
        }
    }
    Ok(jac)
}

/// Both sides of `−|Du|^{p−2} Δᴺ u = −div(|Du|^{p−2}Du) + |Du|^{p−2} log|Du| Du·Dp`
/// assembled from the jet. Returns `(lhs, rhs, scale)`.
pub fn strong_nondivergence_identity(s: &OperatorSample) -> Result<(f64, f64, f64)> {
    let e2 = s.jet.eta_norm_sq();
    if e2 == 0.0 {
        return Err(Error::GradientVanishes);
    }
    let g = e2.powf(0.5 * (s.p - 2.0));
    let lhs = g * normalized_pxlap(s)?;
    let jac = flux_jacobian(s)?;
    let div: f64 = (0..s.jet.dim).map(|i| jac[i][i]).sum();
    let drift = log_drift(s.jet.eta(), s.p, &s.dp);
    let rhs = -div + drift;
    let xnorm = frobenius(&s.jet.hess, s.jet.dim);
    let scale = g * (xnorm * (1.0 + (s.p - 2.0).abs()) + drift.abs() / g) + f64::MIN_POSITIVE;
    Ok((lhs, rhs, scale))
}

fn frobenius(m: &Matrix, n: usize) -> f64 {
    let mut s = 0.0;
    for row in m.iter().take(n) {
        for v in row.iter().take(n) {
            s += v * v;
        }
    }
    s.sqrt()
}

/// `(δ+|η|²)^{(p−2)/2} (tr X + (p−2)/(δ+|η|²) ⟨Xη,η⟩)`.
pub fn regularized_op(s: &OperatorSample) -> Result<f64> {
    let e2 = s.jet.eta_norm_sq();
    let w = s.delta + e2;
    if w == 0.0 {
        return Err(Error::DegenerateRegularization);
    }
    Ok(w.powf(0.5 * (s.p - 2.0)) * normalized_part(s, w))
}

/// `tr X + (p−2)/w ⟨Xη,η⟩` with `w = δ + |η|²`; the bracket of the
/// regularized operator without its gradient weight.
pub(crate) fn normalized_part(s: &OperatorSample, w: f64) -> f64 {
    let q = if s.p == 2.0 { 0.0 } else { s.jet.quad_form(s.jet.eta()) };
    s.jet.trace() + (s.p - 2.0) / w * q
}

/// `|η|² I + (p−2) η⊗η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AMatrix {
    pub dim: usize,
    pub entries: Matrix,
}

impl AMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::sym_min_eigenvalue(&self.entries, self.dim)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.entries, self.dim)[..self.dim].to_vec()
    }
}

pub fn a_matrix(eta: &[f64], p: f64) -> AMatrix {
    let n = eta.len();
    let e2 = norm_sq(eta);
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (p - 2.0) * eta[i] * eta[j];
        }
        m[i][i] += e2;
    }
    AMatrix { dim: n, entries: m }
}

/// `(tr(A X), |η|² tr X + (p−2)⟨Xη,η⟩)`; the first by matrix product, the
/// second by expansion.
pub fn trace_form_identity(s: &OperatorSample) -> (f64, f64) {
    let n = s.jet.dim;
    let a = a_matrix(s.jet.eta(), s.p);
    let mut tr = 0.0;
    for i in 0..n {
        for k in 0..n {
            tr += a.entries[i][k] * s.jet.hess[k][i];
        }
    }
    let b = s.jet.eta_norm_sq() * s.jet.trace() + (s.p - 2.0) * s.jet.quad_form(s.jet.eta());
    (tr, b)
}

/// `((|a|^{p−2}a − |b|^{p−2}b)·(a−b), lower)` with
/// `lower = (p−1)|a−b|²(1+|a|²+|b|²)^{(p−2)/2}` for `p < 2` and
/// `2^{2−p}|a−b|^p` otherwise.
pub fn monotonicity_gap(a: &[f64], b: &[f64], p: f64) -> (f64, f64) {
    let fa = strong_flux(a, p);
    let fb = strong_flux(b, p);
    let diff = sub(a, b);
    let n = a.len();
    let gap = dot(&sub(&fa[..n], &fb[..n])[..n], &diff[..n]);
    let d2 = norm_sq(&diff[..n]);
    let lower = if p < 2.0 {
        (p - 1.0) * d2 * (1.0 + norm_sq(a) + norm_sq(b)).powf(0.5 * (p - 2.0))
    } else {
        2f64.powf(2.0 - p) * d2.powf(0.5 * p)
    };
    (gap, lower)
}

/// `(||a|^{p−2}a − |b|^{p−2}b|, upper)` with `upper = 2^{2−p}|a−b|^{p−1}` for
/// `p < 2` and `½(|a|^{p−2}+|b|^{p−2})|a−b|` otherwise.
pub fn continuity_gap(a: &[f64], b: &[f64], p: f64) -> (f64, f64) {
    let n = a.len();
    let (fa, fb) = (strong_flux(a, p), strong_flux(b, p));
    let lhs = norm_sq(&sub(&fa[..n], &fb[..n])[..n]).sqrt();
    let dist = norm_sq(&sub(a, b)[..n]).sqrt();
    let upper = if p < 2.0 {
        2f64.powf(2.0 - p) * dist.powf(p - 1.0)
    } else {
        0.5 * (pow_norm(a, p - 2.0) + pow_norm(b, p - 2.0)) * dist
    };
    (lhs, upper)
}

/// Mean-value bound `(p−1) max(|a|,|b|)^{p−2} |a−b|` for `p ≥ 2`, used as a
/// reference diagnostic next to [`continuity_gap`].
pub fn continuity_reference_bound(a: &[f64], b: &[f64], p: f64) -> f64 {
    let n = a.len();
    let dist = norm_sq(&sub(a, b)[..n]).sqrt();
    let m = norm_sq(a).sqrt().max(norm_sq(b).sqrt());
    (p - 1.0) * m.powf(p - 2.0) * dist
}

fn pow_norm(v: &[f64], e: f64) -> f64 {
    let n = norm_sq(v).sqrt();
    if e == 0.0 {
        1.0
    } else {
        n.powf(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogChecks {
    /// `aˢ log a`
    pub lhs_dim: f64,
    /// `N a^{s+1/N} + 1/s`
    pub rhs_dim: f64,
    pub holds_dim: bool,
    /// `aˢ |log a|`
    pub lhs_half: f64,
    /// `a^{s+1/2} + 1/s`
    pub rhs_half: f64,
    pub holds_half: bool,
}

/// Evaluates `aˢ log a ≤ N a^{s+1/N} + 1/s` and `aˢ|log a| ≤ a^{s+1/2} + 1/s`.
pub fn log_inequalities(a: f64, s: f64, n: u32) -> LogChecks {
    let nf = n as f64;
    let l = a.ln();
    let lhs_dim = a.powf(s) * l;
    let rhs_dim = nf * a.powf(s + 1.0 / nf) + 1.0 / s;
    let lhs_half = a.powf(s) * l.abs();
    let rhs_half = a.powf(s + 0.5) + 1.0 / s;
    LogChecks {
        lhs_dim,
        rhs_dim,
        holds_dim: lhs_dim <= rhs_dim,
        lhs_half,
        rhs_half,
        holds_half: lhs_half <= rhs_half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn jet2(eta: [f64; 2], h: [[f64; 2]; 2]) -> Jet {
        Jet::new(&eta, &[h[0][0], h[0][1], h[1][0], h[1][1]]).unwrap()
    }

    fn random_jet(rng: &mut ChaCha8Rng, dim: usize) -> Jet {
        let eta: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut h = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = rng.random_range(-5.0..5.0);
                h[i * dim + j] = v;
                h[j * dim + i] = v;
            }
        }
        Jet::new(&eta, &h).unwrap()
    }

    #[test]
    fn normalized_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let j = random_jet(&mut rng, 2);
            let f = normalized_pxlap(&OperatorSample::new(j, 2.0)).unwrap();
            assert_eq!(f, -j.trace());
        }
        let j = jet2([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(normalized_pxlap(&OperatorSample::new(j, 3.0)).unwrap(), -3.0);
        let r = 0.5f64.sqrt();
        let j = jet2([r, r], [[1.0, 0.0], [0.0, -1.0]]);
        assert!(normalized_pxlap(&OperatorSample::new(j, 4.0)).unwrap().abs() < 1e-15);
        let j = jet2([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            normalized_pxlap(&OperatorSample::new(j, 3.0)),
            Err(Error::GradientVanishes)
        ));
    }

    #[test]
    fn flux_examples() {
        assert_eq!(strong_flux(&[0.0, 0.0], 1.5), [0.0; MAX_DIM]);
        assert_eq!(&strong_flux(&[0.3, -2.0], 2.0)[..2], &[0.3, -2.0]);
        assert_eq!(&strong_flux(&[3.0, 4.0], 3.0)[..2], &[15.0, 20.0]);
    }

    #[test]
    fn drift_examples() {
        assert_eq!(log_drift(&[0.0, 0.0], 1.5, &[1.0, 2.0]), 0.0);
        assert_eq!(log_drift(&[0.0, -1.0], 3.7, &[5.0, -2.0]), 0.0);
        // 0.6² + 0.8² rounds one ulp above 1
        assert!(log_drift(&[0.6, 0.8], 3.7, &[5.0, -2.0]).abs() < 1e-15);
        let v = log_drift(&[E, 0.0], 3.0, &[1.0, 0.0]);
        // |η|^{p−2} = e, log|η| = 1, η·Dp = e
        assert!((v - E * E).abs() < 1e-14 * E * E);
    }

    #[test]
    fn identity_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let eta = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let j = jet2(eta, [[0.0; 2]; 2]);
            let s = OperatorSample::new(j, rng.random_range(1.1..5.0)).with_dp(&[1.3, -0.4]);
            let (l, r, _) = strong_nondivergence_identity(&s).unwrap();
            assert_eq!(l, 0.0);
            assert!(r.abs() < 1e-13 * (1.0 + log_drift(&eta, s.p, &s.dp).abs()));
        }
        let j = random_jet(&mut rng, 2);
        let s = OperatorSample::new(j, 3.3);
        let (l, r, _) = strong_nondivergence_identity(&s).unwrap();
        let g = j.eta_norm_sq().powf(0.65);
        let expect = -g * (j.trace() + 1.3 * j.quad_form(j.eta()) / j.eta_norm_sq());
        assert!((l - expect).abs() < 1e-12 * expect.abs().max(1.0));
        assert!((r - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    /// Divergence of `y ↦ |Du(y)|^{p(y)−2} Du(y)` at `x` by complex-step
    /// differentiation of the quadratic model `u(y) = η·z + ½ zᵀXz`,
    /// `p(y) = p + Dp·z`, `z = y − x`.
    fn complex_step_divergence(s: &OperatorSample) -> f64 {
        let n = s.jet.dim;
        let h = 1e-30;
        let mut div = 0.0;
        for j in 0..n {
            let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
            z[j] = Complex64::new(0.0, h);
            let mut grad = [Complex64::new(0.0, 0.0); MAX_DIM];
            for i in 0..n {
                grad[i] = Complex64::new(s.jet.eta[i], 0.0);
                for k in 0..n {
                    grad[i] += z[k] * s.jet.hess[i][k];
                }
            }
            let mut pz = Complex64::new(s.p, 0.0);
            for k in 0..n {
                pz += z[k] * s.dp[k];
            }
            let n2: Complex64 = grad[..n].iter().map(|g| g * g).sum();
            let flux_j = n2.powc((pz - 2.0) * 0.5) * grad[j];
            div += flux_j.im / h;
        }
        div
    }

    #[test]
    fn identity_against_complex_step_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [1usize, 2, 3] {
            for _ in 0..2000 {
                let j = random_jet(&mut rng, dim);
                if j.eta_norm() < 1e-3 {
                    continue;
                }
                let dp: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let s = OperatorSample::new(j, rng.random_range(1.1..5.0)).with_dp(&dp);
                let (l, r, scale) = strong_nondivergence_identity(&s).unwrap();
                assert!((l - r).abs() <= 1e-12 * scale, "{l} {r} {scale}");
                let oracle = -complex_step_divergence(&s) + log_drift(j.eta(), s.p, &s.dp);
                assert!((oracle - r).abs() <= 1e-12 * scale, "dim {dim}: {oracle} vs {r}");
            }
        }
    }

    #[test]
    fn regularized_examples() {
        let j = jet2([0.7, -0.2], [[2.0, 0.5], [0.5, -1.0]]);
        let s = OperatorSample::new(j, 2.0).with_delta(1e6);
        assert_eq!(regularized_op(&s).unwrap(), 1.0);
        let j0 = jet2([0.0, 0.0], [[2.0, 0.5], [0.5, -1.0]]);
        let s = OperatorSample::new(j0, 3.5).with_delta(1.0);
        assert_eq!(regularized_op(&s).unwrap(), 1.0);
        assert!(matches!(
            regularized_op(&OperatorSample::new(j0, 3.5)),
            Err(Error::DegenerateRegularization)
        ));
    }

    #[test]
    fn regularized_converges_as_delta_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let j = random_jet(&mut rng, 2);
            if j.eta_norm() < 0.1 {
                continue;
            }
            let p = rng.random_range(1.1..1.99);
            let base = OperatorSample::new(j, p);
            let limit = -normalized_pxlap(&base).unwrap() * j.eta_norm().powf(p - 2.0);
            let gaps: Vec<f64> = (2..=8)
                .map(|k| (regularized_op(&base.with_delta(10f64.powi(-k))).unwrap() - limit).abs())
                .collect();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-14, "{gaps:?}");
            }
            assert!(gaps[6] <= 1e-6 * (1.0 + limit.abs()));
        }
    }

    #[test]
    fn a_matrix_examples() {
        let z = a_matrix(&[0.0, 0.0], 3.0);
        assert_eq!(z.entries, [[0.0; MAX_DIM]; MAX_DIM]);
        let a = a_matrix(&[0.6, 0.8], 2.0);
        assert_eq!(a.entries[0][1], 0.0);
        assert!((a.entries[0][0] - 1.0).abs() < 1e-15 && (a.entries[1][1] - 1.0).abs() < 1e-15);
        let a = a_matrix(&[1.0, 0.0], 3.0);
        assert_eq!(a.entries[0][0], 2.0);
        assert_eq!(a.entries[1][1], 1.0);
    }

    #[test]
    fn trace_form_examples() {
        let j = jet2([0.0, 0.0], [[1.0, 2.0], [2.0, 3.0]]);
        assert_eq!(trace_form_identity(&OperatorSample::new(j, 3.0)), (0.0, 0.0));
        let j = jet2([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(trace_form_identity(&OperatorSample::new(j, 3.0)), (3.0, 3.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let j = random_jet(&mut rng, 2);
            let s = OperatorSample::new(j, rng.random_range(1.0..6.0));
            let (a, b) = trace_form_identity(&s);
            let scale = j.eta_norm_sq() * frobenius(&j.hess, 2) * (1.0 + (s.p - 2.0).abs());
            assert!((a - b).abs() <= 1e-13 * scale);
            let f = normalized_pxlap(&s).unwrap();
            assert!((a + j.eta_norm_sq() * f).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn gap_examples() {
        assert_eq!(monotonicity_gap(&[0.3, 1.0], &[0.3, 1.0], 1.7), (0.0, 0.0));
        assert_eq!(continuity_gap(&[0.3, 1.0], &[0.3, 1.0], 3.7), (0.0, 0.0));
        let (g, l) = monotonicity_gap(&[0.3, 1.0], &[-1.0, 2.0], 2.0);
        assert!((g - 2.69).abs() < 1e-14 && (l - 2.69).abs() < 1e-14);
        let (l, u) = continuity_gap(&[0.3, 1.0], &[-1.0, 2.0], 2.0);
        assert!((l - 2.69f64.sqrt()).abs() < 1e-14 && (u - l).abs() < 1e-14);
    }

    #[test]
    fn continuity_upper_bound_fails_for_p_above_two() {
        // one-dimensional counterexample to the p ≥ 2 constant
        let (l, u) = continuity_gap(&[1.0], &[0.0], 3.0);
        assert_eq!((l, u), (1.0, 0.5));
        assert!(l <= continuity_reference_bound(&[1.0], &[0.0], 3.0));
    }

    #[test]
    fn log_examples() {
        let c = log_inequalities(1.0, 2.0, 3);
        assert_eq!(c.lhs_dim, 0.0);
        assert!(c.holds_dim && c.holds_half);
        let c = log_inequalities(E, 1.0, 2);
        assert!((c.lhs_dim - E).abs() < 1e-15);
        assert!((c.rhs_dim - (2.0 * E.powf(1.5) + 1.0)).abs() < 1e-12);
        assert!(c.holds_dim && c.holds_half);
    }

    proptest::proptest! {
        #[test]
        fn monotonicity_lower_bound(a in proptest::array::uniform2(-10.0f64..10.0),
                                    b in proptest::array::uniform2(-10.0f64..10.0),
                                    p in 1.1f64..5.0) {
            let (gap, lower) = monotonicity_gap(&a, &b, p);
            let scale = (a[0].hypot(a[1]) + b[0].hypot(b[1])).powf(p).max(1.0);
            proptest::prop_assert!(gap >= -1e-12 * scale);
            proptest::prop_assert!(lower >= 0.0);
            proptest::prop_assert!(gap >= lower - 1e-12 * scale);
        }

        #[test]
        fn continuity_bound_below_two(a in proptest::array::uniform2(-10.0f64..10.0),
                                      b in proptest::array::uniform2(-10.0f64..10.0),
                                      p in 1.1f64..2.0) {
            let (lhs, upper) = continuity_gap(&a, &b, p);
            let scale = (a[0].hypot(a[1]) + b[0].hypot(b[1])).powf(p - 1.0).max(1.0);
            proptest::prop_assert!(lhs <= upper + 1e-12 * scale);
        }

        #[test]
        fn reference_continuity_bound(a in proptest::array::uniform2(-10.0f64..10.0),
                                      b in proptest::array::uniform2(-10.0f64..10.0),
                                      p in 2.0f64..5.0) {
            let (lhs, _) = continuity_gap(&a, &b, p);
            let scale = (a[0].hypot(a[1]) + b[0].hypot(b[1])).powf(p - 1.0).max(1.0);
            proptest::prop_assert!(lhs <= continuity_reference_bound(&a, &b, p) + 1e-12 * scale);
        }

        #[test]
        fn a_matrix_is_psd(eta in proptest::array::uniform3(-10.0f64..10.0), p in 1.0f64..8.0) {
            let a = a_matrix(&eta, p);
            let e2: f64 = eta.iter().map(|v| v * v).sum();
            proptest::prop_assert!(a.min_eigenvalue() >= -1e-12 * e2.max(1e-300));
        }

        #[test]
        fn log_inequalities_hold(la in -13.8f64..13.8, s in 1e-3f64..10.0, n in 2u32..6) {
            let c = log_inequalities(la.exp(), s, n);
            proptest::prop_assert!(c.lhs_dim <= c.rhs_dim + 1e-12 * c.rhs_dim.max(1.0));
            proptest::prop_assert!(c.lhs_half <= c.rhs_half + 1e-12 * c.rhs_half.max(1.0));
        }
    }
}
