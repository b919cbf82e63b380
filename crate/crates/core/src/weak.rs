//! Divergence-form solver and weak-residual auditor for
//! `−div(|Du|^{p(x)−2}Du) + |Du|^{p(x)−2} log|Du| Du·Dp = 0`.
//!
//! # Discretization
//!
//! Fluxes live on edges. For the edge from node `i` to `i + e_k` the
//! gradient has the one-sided difference as its `k` component and, in 2D,
//! the average of the two endpoint centered differences as its transverse
//! component. With `g_δ(x, t²) = (δ + t²)^{(p(x)−2)/2}` the edge flux is
//! `g_δ(m, |G|²) · (u_{i+e_k} − u_i)/h_k` at the edge midpoint `m`.
//!
//! The log drift is collocated at nodes as a divided difference of the
//! coefficient across the cell, at the node gradient `t = |D^c u_i|`:
//!
//! ```text
//! drift_i = Σ_k (D^c_k u)_i · [g_δ(x_i + h_k e_k/2, t²) − g_δ(x_i − h_k e_k/2, t²)] / h_k
//! ```
//!
//! which tends to `½ g_δ log(δ+t²) Dp·Du`, the δ-regularized drift. On
//! affine data every edge gradient equals the node gradient, so drift and
//! flux divergence cancel term by term for every δ and affine functions are
//! reproduced to roundoff.
//!
//! # Iteration
//!
//! Damped Picard on a geometric δ ladder: edge coefficients and drift
//! coefficients are frozen at the previous iterate, the resulting linear
//! system (an M-matrix plus a drift perturbation) is solved by
//! ILU(0)/BiCGSTAB, and the update is blended with the damping factor,
//! which is halved whenever the nodal residual grows.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Domain, GridFunction, Point};
use crate::operators::strong_flux;
use crate::sparse::{bicgstab, CsrMatrix};

/// Dirichlet problem on a box, optionally with an excluded region whose
/// nodes also carry data (the `boundary_mask` of `data`).
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub data: GridFunction,
    pub p: ExponentField,
    pub label: String,
}

impl DirichletProblem {
    pub fn new(data: GridFunction, p: ExponentField, label: impl Into<String>) -> Result<Self> {
        let d = data.domain();
        if p.dim() != d.dim() {
            return Err(Error::InvalidArgument(format!(
                "exponent dimension {} does not match domain dimension {}",
                p.dim(),
                d.dim()
            )));
        }
        for nd in d.nodes() {
            if d.is_box_boundary(nd) && !data.is_fixed(nd) {
                return Err(Error::InvalidArgument(format!("box boundary node {nd:?} must carry data")));
            }
        }
        if data.free_nodes().next().is_none() {
            return Err(Error::InvalidArgument("problem has no free nodes".into()));
        }
        Ok(Self {
            data,
            p,
            label: label.into(),
        })
    }

    pub fn domain(&self) -> &Domain {
        self.data.domain()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub delta_initial: f64,
    pub delta_final: f64,
    /// Ratio between consecutive δ levels.
    pub delta_factor: f64,
    /// Stop a level when the sup-change of the damped update drops below.
    pub picard_tol: f64,
    /// Picard iterations allowed per δ level.
    pub max_iters: usize,
    pub damping: f64,
    pub min_damping: f64,
    /// Upwind the drift instead of central differencing.
    pub upwind_drift: bool,
    pub linear_rtol: f64,
    pub linear_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta_initial: 1e-2,
            delta_final: 1e-8,
            delta_factor: 10.0,
            picard_tol: 1e-10,
            max_iters: 400,
            damping: 0.7,
            min_damping: 1.0 / 64.0,
            upwind_drift: false,
            linear_rtol: 1e-12,
            linear_max_iter: 5000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_initial > 0.0
            && self.delta_final > 0.0
            && self.delta_final <= self.delta_initial
            && self.delta_factor > 1.0
            && self.picard_tol > 0.0
            && self.max_iters > 0
            && self.damping > 0.0
            && self.damping <= 1.0
            && self.min_damping > 0.0
            && self.min_damping <= self.damping
            && self.linear_rtol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid solver config {self:?}")))
        }
    }

    /// The δ ladder, geometric from `delta_initial` down to `delta_final`.
    pub fn ladder(&self) -> Vec<f64> {
        let mut out = vec![self.delta_initial];
        let mut d = self.delta_initial;
        while d > self.delta_final * (1.0 + 1e-9) {
            d = (d / self.delta_factor).max(self.delta_final);
            out.push(d);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub delta: f64,
    pub sup_change: f64,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub delta: f64,
    pub iterations: usize,
    /// Sup of the nodal residual of the unregularized operator.
    pub residual: f64,
    /// Largest local `h·|Dp|·|log(δ+|Du|²)|`.
    pub peclet: f64,
}

#[derive(Debug, Clone)]
pub struct WeakSolution {
    pub u: GridFunction,
    pub history: Vec<HistoryRow>,
    pub levels: Vec<LevelSummary>,
    /// Levels whose unregularized residual exceeds the previous level's.
    pub continuation_violations: usize,
    pub peclet_warnings: usize,
}

impl WeakSolution {
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "delta", "sup_change", "residual", "damping"])?;
        for r in &self.history {
            wr.write_record(&[
                r.iteration.to_string(),
                format!("{:e}", r.delta),
                format!("{:e}", r.sup_change),
                format!("{:e}", r.residual),
                r.damping.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Mesh Péclet threshold of the drift guard.
pub const PECLET_LIMIT: f64 = 2.0;

/// Exponent samples reused across iterations.
struct Stencil<'a> {
    d: &'a Domain,
    dim: usize,
    stride: [usize; 2],
    h: [f64; 2],
    /// `p` at the midpoint of the edge from node `idx` to `idx + e_k`.
    p_edge: Vec<[f64; 2]>,
    /// `|Dp|` at nodes, for the Péclet guard.
    dp_norm: Vec<f64>,
}

impl<'a> Stencil<'a> {
    fn new(d: &'a Domain, p: &ExponentField) -> Self {
        let s = d.shape();
        let p_edge = d
            .nodes()
            .map(|nd| {
                let mut e = [f64::NAN; 2];
                for (k, ek) in e.iter_mut().enumerate().take(d.dim()) {
                    if nd[k] + 1 < s[k] {
                        *ek = p.eval(d.edge_midpoint(nd, k));
                    }
                }
                e
            })
            .collect();
        let dp_norm = d
            .nodes()
            .map(|nd| {
                let g = p.grad(d.coord(nd));
                g[0].hypot(g[1])
            })
            .collect();
        Self {
            d,
            dim: d.dim(),
            stride: [s[1], 1],
            h: d.h(),
            p_edge,
            dp_norm,
        }
    }

    /// Gradient on the edge from `idx` to `idx + e_k`.
    fn edge_grad(&self, u: &[f64], idx: usize, k: usize) -> [f64; 2] {
        let s = self.stride[k];
        let mut g = [0.0; 2];
        g[k] = (u[idx + s] - u[idx]) / self.h[k];
        if self.dim == 2 {
            let l = 1 - k;
            let t = self.stride[l];
            g[l] = ((u[idx + t] - u[idx - t]) + (u[idx + s + t] - u[idx + s - t])) / (4.0 * self.h[l]);
        }
        g
    }

    fn node_grad(&self, u: &[f64], idx: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
            let s = self.stride[k];
            *gk = (u[idx + s] - u[idx - s]) / (2.0 * self.h[k]);
        }
        g
    }

    /// Edge flux (normal component) and frozen coefficient at level δ.
    /// With δ = 0 the flux uses the continuous extension at zero gradient.
    fn edge_flux(&self, u: &[f64], idx: usize, k: usize, delta: f64) -> (f64, f64) {
        let g = self.edge_grad(u, idx, k);
        let p = self.p_edge[idx][k];
        if delta == 0.0 {
            let f = strong_flux(&g[..self.dim], p);
            let t2 = g[0] * g[0] + g[1] * g[1];
            let coef = if t2 > 0.0 { t2.powf(0.5 * (p - 2.0)) } else { 0.0 };
            return (f[k], coef);
        }
        let coef = g_delta(p, delta, g[0] * g[0] + g[1] * g[1]);
        (coef * g[k], coef)
    }

    /// Drift coefficients `[g(x+½h e_k, t²) − g(x−½h e_k, t²)]/h_k`.
    fn drift_coefs(&self, u: &[f64], idx: usize, delta: f64) -> ([f64; 2], [f64; 2]) {
        let g = self.node_grad(u, idx);
        let t2 = g[0] * g[0] + g[1] * g[1];
        let mut c = [0.0; 2];
        if delta == 0.0 && t2 == 0.0 {
            return (c, g);
        }
        for (k, ck) in c.iter_mut().enumerate().take(self.dim) {
            let plus = self.p_edge[idx][k];
            let minus = self.p_edge[idx - self.stride[k]][k];
            *ck = (g_delta(plus, delta, t2) - g_delta(minus, delta, t2)) / self.h[k];
        }
        (c, g)
    }

    /// Nodal strong residual `−div(flux) + drift` at a free node.
    fn residual_at(&self, u: &[f64], idx: usize, delta: f64, upwind: bool) -> f64 {
        let mut r = 0.0;
        let (c, g) = self.drift_coefs(u, idx, delta);
        for k in 0..self.dim {
            let s = self.stride[k];
            let (fp, _) = self.edge_flux(u, idx, k, delta);
            let (fm, _) = self.edge_flux(u, idx - s, k, delta);
            r -= (fp - fm) / self.h[k];
            r += c[k] * self.drift_derivative(u, idx, k, c[k], g[k], upwind);
        }
        r
    }

    fn drift_derivative(&self, u: &[f64], idx: usize, k: usize, c: f64, centered: f64, upwind: bool) -> f64 {
        if !upwind {
            return centered;
        }
        let s = self.stride[k];
        if c > 0.0 {
            (u[idx] - u[idx - s]) / self.h[k]
        } else {
            (u[idx + s] - u[idx]) / self.h[k]
        }
    }

    fn peclet_at(&self, u: &[f64], idx: usize, delta: f64) -> f64 {
        let g = self.node_grad(u, idx);
        let t2 = g[0] * g[0] + g[1] * g[1];
        let lg = (delta + t2).ln().abs();
        self.d.h_max() * self.dp_norm[idx] * if lg.is_finite() { lg } else { 0.0 }
    }
}

fn g_delta(p: f64, delta: f64, t2: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    (delta + t2).powf(0.5 * (p - 2.0))
}

struct System {
    /// Flat node index of each unknown.
    unknowns: Vec<usize>,
    /// Unknown number of each node, `usize::MAX` for fixed nodes.
    slot: Vec<usize>,
}

impl System {
    fn new(data: &GridFunction) -> Self {
        let n = data.domain().len();
        let mut slot = vec![usize::MAX; n];
        let mut unknowns = Vec::new();
        for (idx, &fixed) in data.boundary_mask().iter().enumerate() {
            if !fixed {
                slot[idx] = unknowns.len();
                unknowns.push(idx);
            }
        }
        Self { unknowns, slot }
    }
}

enum Coefficients {
    /// `A ≡ 1`, no drift: the discrete Laplacian.
    Harmonic,
    Frozen { delta: f64, upwind: bool },
}

fn assemble(st: &Stencil, sys: &System, u: &[f64], coefs: &Coefficients) -> (CsrMatrix, Vec<f64>) {
    let rows: Vec<(Vec<(usize, f64)>, f64)> = sys
        .unknowns
        .par_iter()
        .map(|&idx| {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(5);
            let mut rhs = 0.0;
            let mut diag = 0.0;
            let add = |node: usize, v: f64, entries: &mut Vec<(usize, f64)>, rhs: &mut f64, diag: &mut f64| {
                if node == idx {
                    *diag += v;
                } else if sys.slot[node] == usize::MAX {
                    *rhs -= v * u[node];
                } else {
                    entries.push((sys.slot[node], v));
                }
            };
            let (c, _) = match coefs {
                Coefficients::Harmonic => ([0.0; 2], [0.0; 2]),
                Coefficients::Frozen { delta, .. } => st.drift_coefs(u, idx, *delta),
            };
            for k in 0..st.dim {
                let s = st.stride[k];
                let h2 = st.h[k] * st.h[k];
                let (ap, am) = match coefs {
                    Coefficients::Harmonic => (1.0, 1.0),
                    Coefficients::Frozen { delta, .. } => {
                        (st.edge_flux(u, idx, k, *delta).1, st.edge_flux(u, idx - s, k, *delta).1)
                    }
                };
                add(idx, (ap + am) / h2, &mut entries, &mut rhs, &mut diag);
                add(idx + s, -ap / h2, &mut entries, &mut rhs, &mut diag);
                add(idx - s, -am / h2, &mut entries, &mut rhs, &mut diag);
                let upwind = matches!(coefs, Coefficients::Frozen { upwind: true, .. });
                let ck = c[k];
                if ck != 0.0 {
                    let hk = st.h[k];
                    if upwind {
                        if ck > 0.0 {
                            add(idx, ck / hk, &mut entries, &mut rhs, &mut diag);
                            add(idx - s, -ck / hk, &mut entries, &mut rhs, &mut diag);
                        } else {
                            add(idx + s, ck / hk, &mut entries, &mut rhs, &mut diag);
                            add(idx, -ck / hk, &mut entries, &mut rhs, &mut diag);
                        }
                    } else {
                        add(idx + s, ck / (2.0 * hk), &mut entries, &mut rhs, &mut diag);
                        add(idx - s, -ck / (2.0 * hk), &mut entries, &mut rhs, &mut diag);
                    }
                }
            }
            entries.push((sys.slot[idx], diag));
            (entries, rhs)
        })
        .collect();
    let n = sys.unknowns.len();
    let mut a = CsrMatrix::with_capacity(n, 5 * n);
    let mut b = Vec::with_capacity(n);
    for (mut entries, rhs) in rows {
        a.push_row(&mut entries);
        b.push(rhs);
    }
    (a, b)
}

fn linear_solve(st: &Stencil, sys: &System, u: &[f64], coefs: &Coefficients, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let (a, b) = assemble(st, sys, u, coefs);
    let mut x: Vec<f64> = sys.unknowns.iter().map(|&idx| u[idx]).collect();
    bicgstab(&a, &b, &mut x, cfg.linear_rtol, cfg.linear_max_iter)?;
    let mut out = u.to_vec();
    for (k, &idx) in sys.unknowns.iter().enumerate() {
        out[idx] = x[k];
    }
    Ok(out)
}

fn sup_residual(st: &Stencil, sys: &System, u: &[f64], delta: f64, upwind: bool) -> f64 {
    sys.unknowns
        .par_iter()
        .map(|&idx| st.residual_at(u, idx, delta, upwind).abs())
        .reduce(|| 0.0, f64::max)
}

/// Discrete harmonic extension of the Dirichlet data (the `p ≡ 2` solve).
pub fn harmonic_extension(problem: &DirichletProblem) -> Result<GridFunction> {
    let st = Stencil::new(problem.domain(), &problem.p);
    let sys = System::new(&problem.data);
    let cfg = SolverConfig::default();
    let values = linear_solve(&st, &sys, problem.data.values(), &Coefficients::Harmonic, &cfg)?;
    let mut u = problem.data.clone();
    u.values_mut().copy_from_slice(&values);
    Ok(u)
}

/// Solves the Dirichlet problem by damped Picard iteration along the δ
/// ladder, starting from the harmonic extension of the data.
pub fn solve(problem: &DirichletProblem, cfg: &SolverConfig) -> Result<WeakSolution> {
    cfg.validate()?;
    let st = Stencil::new(problem.domain(), &problem.p);
    let sys = System::new(&problem.data);
    let mut u = linear_solve(&st, &sys, problem.data.values(), &Coefficients::Harmonic, cfg)?;
    let mut history = Vec::new();
    let mut levels: Vec<LevelSummary> = Vec::new();
    let mut iteration = 0;
    let mut peclet_warnings = 0;
    let upwind = cfg.upwind_drift;
    for delta in cfg.ladder() {
        let coefs = Coefficients::Frozen { delta, upwind };
        let mut damping = cfg.damping;
        let mut residual = sup_residual(&st, &sys, &u, delta, upwind);
        let mut level_iters = 0;
        let mut change = f64::INFINITY;
        while change >= cfg.picard_tol {
            if level_iters == cfg.max_iters {
                return Err(Error::NonConvergence {
                    iterations: level_iters,
                    delta,
                    change,
                    residual,
                });
            }
            let target = linear_solve(&st, &sys, &u, &coefs, cfg)?;
            change = 0.0;
            for &idx in &sys.unknowns {
                let next = (1.0 - damping) * u[idx] + damping * target[idx];
                change = f64::max(change, (next - u[idx]).abs());
                u[idx] = next;
            }
            if !change.is_finite() {
                return Err(Error::NonFinite(format!("Picard update at delta = {delta:e}")));
            }
            let new_residual = sup_residual(&st, &sys, &u, delta, upwind);
            if new_residual > residual {
                damping = (0.5 * damping).max(cfg.min_damping);
            }
            residual = new_residual;
            iteration += 1;
            level_iters += 1;
            history.push(HistoryRow {
                iteration,
                delta,
                sup_change: change,
                residual,
                damping,
            });
        }
        let peclet = sys
            .unknowns
            .iter()
            .map(|&idx| st.peclet_at(&u, idx, delta))
            .fold(0.0, f64::max);
        if peclet > PECLET_LIMIT {
            peclet_warnings += 1;
            log::warn!(
                "{}: mesh Péclet number {peclet:.2} exceeds {PECLET_LIMIT} at delta = {delta:e}; drift dominates diffusion",
                problem.label
            );
        }
        levels.push(LevelSummary {
            delta,
            iterations: level_iters,
            residual: sup_residual(&st, &sys, &u, 0.0, upwind),
            peclet,
        });
    }
    let continuation_violations = levels
        .windows(2)
        .filter(|w| w[1].residual > w[0].residual * (1.0 + 1e-9) + 1e-14)
        .count();
    let mut out = problem.data.clone();
    out.values_mut().copy_from_slice(&u);
    Ok(WeakSolution {
        u: out,
        history,
        levels,
        continuation_violations,
        peclet_warnings,
    })
}

/// Nodal strong residual of the unregularized discrete operator; zero on
/// nodes carrying data.
pub fn nodal_residual(u: &GridFunction, p: &ExponentField) -> GridFunction {
    let st = Stencil::new(u.domain(), p);
    let vals = u.values();
    let d = u.domain();
    let res: Vec<f64> = (0..d.len())
        .into_par_iter()
        .map(|idx| {
            if d.is_box_boundary(d.node(idx)) {
                0.0
            } else {
                st.residual_at(vals, idx, 0.0, false)
            }
        })
        .collect();
    let mut out = u.clone();
    out.values_mut().copy_from_slice(&res);
    out
}

/// `∫ |Du|^{p−2}Du·Dφ + |Du|^{p−2} log|Du| Du·Dp φ` in the discrete pairing:
/// edge fluxes against edge differences of `φ` (each edge weighted by the
/// cell measure) plus nodal drift against `φ` with trapezoid weights.
pub fn discrete_weak_residual(u: &GridFunction, p: &ExponentField, phi: &GridFunction) -> Result<f64> {
    let d = u.domain();
    if phi.domain() != d {
        return Err(Error::InvalidArgument("test function lives on a different grid".into()));
    }
    for nd in d.nodes() {
        let v = phi.get(nd);
        if v != 0.0 && (d.is_box_boundary(nd) || phi.is_fixed(nd)) {
            return Err(Error::BoundaryTestFunction { node: nd, value: v });
        }
    }
    let st = Stencil::new(d, p);
    let uv = u.values();
    let pv = phi.values();
    let s = d.shape();
    let cell: f64 = d.h()[..d.dim()].iter().product();
    let mut total = 0.0;
    for nd in d.nodes() {
        let idx = d.index(nd);
        for k in 0..d.dim() {
            if nd[k] + 1 >= s[k] {
                continue;
            }
            let j = idx + st.stride[k];
            let dphi = (pv[j] - pv[idx]) / d.h()[k];
            if dphi == 0.0 {
                continue;
            }
            let (flux, _) = st.edge_flux(uv, idx, k, 0.0);
            total += flux * dphi * cell;
        }
        if pv[idx] != 0.0 {
            let (c, g) = st.drift_coefs(uv, idx, 0.0);
            let drift: f64 = (0..d.dim()).map(|k| c[k] * g[k]).sum();
            total += drift * pv[idx] * d.quadrature_weight(nd);
        }
    }
    Ok(total)
}

/// `‖φ‖_{L¹} + ‖Dφ‖_{L¹}` in the same discrete pairing.
pub fn w11_norm(phi: &GridFunction) -> f64 {
    let d = phi.domain();
    let s = d.shape();
    let cell: f64 = d.h()[..d.dim()].iter().product();
    let mut total = 0.0;
    for nd in d.nodes() {
        let idx = d.index(nd);
        total += phi.values()[idx].abs() * d.quadrature_weight(nd);
        for k in 0..d.dim() {
            if nd[k] + 1 < s[k] {
                let j = d.index(d.offset(nd, k, 1).unwrap());
                total += ((phi.values()[j] - phi.values()[idx]) / d.h()[k]).abs() * cell;
            }
        }
    }
    total
}

/// Non-negative test functions for residual audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFamily {
    /// One nodal hat per free node.
    Hats,
    /// Tensor-product pyramids of the given radius in cells, centred on
    /// free nodes whose support avoids nodes carrying data.
    Pyramids { radius_cells: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualReport {
    pub family: TestFamily,
    pub count: usize,
    /// Residuals normalized by `‖φ‖_{W^{1,1}}`, in node order of the centres.
    pub normalized: Vec<f64>,
    pub centers: Vec<[usize; 2]>,
    pub max_abs: f64,
    pub min: f64,
    pub max: f64,
    pub tolerance: f64,
    /// Residuals below `−tolerance` (supersolution audit failures).
    pub negative_violations: usize,
    /// Residuals above `tolerance` (subsolution audit failures).
    pub positive_violations: usize,
    pub strictly_positive: usize,
}

impl WeakResidualReport {
    fn from_values(family: TestFamily, centers: Vec<[usize; 2]>, normalized: Vec<f64>, tolerance: f64) -> Self {
        let max_abs = normalized.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            family,
            count: normalized.len(),
            negative_violations: normalized.iter().filter(|v| **v < -tolerance).count(),
            positive_violations: normalized.iter().filter(|v| **v > tolerance).count(),
            strictly_positive: normalized.iter().filter(|v| **v > tolerance).count(),
            normalized,
            centers,
            max_abs,
            min,
            max,
            tolerance,
        }
    }
}

/// Test functions of a family as `(centre, sparse nodal values)`.
pub fn test_functions(u: &GridFunction, family: TestFamily) -> Vec<([usize; 2], Vec<(usize, f64)>)> {
    let d = u.domain();
    let m = match family {
        TestFamily::Hats => 1,
        TestFamily::Pyramids { radius_cells } => radius_cells.max(1),
    };
    let mi = m as isize;
    let s = d.shape();
    let mut out = Vec::new();
    'centres: for nd in d.nodes() {
        if u.is_fixed(nd) {
            continue;
        }
        let mut vals = Vec::new();
        let rj = if d.dim() == 2 { mi } else { 0 };
        for di in -mi..=mi {
            for dj in -rj..=rj {
                let w = (1.0 - di.abs() as f64 / m as f64) * (1.0 - dj.abs() as f64 / m as f64);
                if w <= 0.0 {
                    continue;
                }
                let (i, j) = (nd[0] as isize + di, nd[1] as isize + dj);
                if i < 0 || j < 0 || i >= s[0] as isize || j >= s[1] as isize {
                    continue 'centres;
                }
                let node = [i as usize, j as usize];
                if u.is_fixed(node) {
                    continue 'centres;
                }
                vals.push((d.index(node), w));
            }
        }
        out.push((nd, vals));
    }
    out
}

/// Weak residuals of `u` against a family of non-negative test functions,
/// normalized by their `W^{1,1}` norms. Uses the identity
/// `weak(φ) = Σ_i φ_i R_i hᴺ` with `R` the nodal strong residual, which is
/// summation by parts of [`discrete_weak_residual`] for `φ` vanishing on
/// nodes with data.
pub fn audit_supersolution(
    u: &GridFunction,
    p: &ExponentField,
    family: TestFamily,
    tolerance: f64,
) -> WeakResidualReport {
    let d = u.domain();
    let res = nodal_residual(u, p);
    let cell: f64 = d.h()[..d.dim()].iter().product();
    let funcs = test_functions(u, family);
    let rows: Vec<([usize; 2], f64)> = funcs
        .par_iter()
        .map(|(centre, vals)| {
            let weak: f64 = vals.iter().map(|(idx, w)| w * res.values()[*idx]).sum::<f64>() * cell;
            (*centre, weak / sparse_w11(d, vals))
        })
        .collect();
    let (centers, normalized) = rows.into_iter().unzip();
    WeakResidualReport::from_values(family, centers, normalized, tolerance)
}

fn sparse_w11(d: &Domain, vals: &[(usize, f64)]) -> f64 {
    let cell: f64 = d.h()[..d.dim()].iter().product();
    let mut phi = std::collections::BTreeMap::new();
    for (idx, w) in vals {
        phi.insert(*idx, *w);
    }
    let get = |idx: usize| phi.get(&idx).copied().unwrap_or(0.0);
    let s = d.shape();
    let mut total = 0.0;
    let mut edges = std::collections::BTreeSet::new();
    for (idx, w) in vals {
        total += w.abs() * cell;
        let nd = d.node(*idx);
        for k in 0..d.dim() {
            let stride = if k == 0 { s[1] } else { 1 };
            if nd[k] + 1 < s[k] {
                edges.insert((*idx, k, *idx + stride));
            }
            if nd[k] > 0 {
                edges.insert((*idx - stride, k, *idx));
            }
        }
    }
    for (a, k, b) in edges {
        total += ((get(b) - get(a)) / d.h()[k]).abs() * cell;
    }
    total
}

/// Same domain and mask as `u` with the given point function.
pub fn sample_like(u: &GridFunction, f: impl Fn(Point) -> f64) -> GridFunction {
    u.map_with_coord(|x, _| f(x))
}
