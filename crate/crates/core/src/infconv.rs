//! q-exponent inf-convolution on grid nodes,
//! `u_ε(x) = min_y u(y) + |x−y|^q / (q ε^{q−1})`,
//! with property checks and the supersolution-defect probe.
//!
//! The minimum runs over grid nodes inside the ball of radius
//! `r(ε) = (q ε^{q−1} osc u)^{1/q}`. Outside that ball the penalty exceeds
//! `osc u`, so the restriction is lossless and node-exact.
//!
//! Property checks are restricted to the inset region of nodes whose
//! distance to the box boundary exceeds `r(ε) + h`, so the full centered
//! stencil lies in `{dist > r(ε)}` where the search ball never leaves the box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{jet_unchecked, Domain, GridFunction, Node, Point};
use crate::operators::{normalized_pxlap, OperatorSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfConvConfig {
    pub epsilon: f64,
    pub q: f64,
    pub r_eps: f64,
    pub osc: f64,
}

impl InfConvConfig {
    pub fn new(epsilon: f64, q: f64, osc: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(q >= 2.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("q must be at least 2, got {q}")));
        }
        Ok(Self {
            epsilon,
            q,
            r_eps: search_radius(epsilon, q, osc),
            osc,
        })
    }

    pub fn penalty(&self, dist: f64) -> f64 {
        dist.powf(self.q) / (self.q * self.epsilon.powf(self.q - 1.0))
    }

    /// Upper bound on the Hessian of the penalty over `|z| ≤ radius`.
    pub fn penalty_curvature(&self, radius: f64) -> f64 {
        let (q, e) = (self.q, self.epsilon);
        if q == 2.0 {
            1.0 / e
        } else {
            (q - 1.0) * radius.powf(q - 2.0) / e.powf(q - 1.0)
        }
    }

    /// Semiconcavity constant of `u_ε`.
    pub fn semiconcavity(&self) -> f64 {
        self.penalty_curvature(self.r_eps)
    }
}

/// `r(ε) = (q ε^{q−1} osc)^{1/q}`.
pub fn search_radius(epsilon: f64, q: f64, osc: f64) -> f64 {
    (q * epsilon.powf(q - 1.0) * osc).powf(1.0 / q)
}

/// Smallest `q` with `p⁻ − 2 + (q−2)/(q−1) ≥ 0`.
pub fn q_min(p_minus: f64) -> Result<f64> {
    if !(p_minus > 1.0) {
        return Err(Error::ExponentTooSmall { p_minus });
    }
    Ok(if p_minus < 2.0 { p_minus / (p_minus - 1.0) } else { 2.0 })
}

#[derive(Debug, Clone)]
pub struct InfConvResult {
    pub u_eps: GridFunction,
    pub config: InfConvConfig,
    /// `x_ε − x` per node.
    pub minimizer_offset: Vec<[f64; 2]>,
    /// Flat index of the minimizing node per node.
    pub minimizer: Vec<usize>,
    /// False when `r(ε) < h` and the result is `u` itself.
    pub resolved: bool,
}

struct Offset {
    di: isize,
    dj: isize,
    penalty: f64,
}

fn ball_offsets(d: &Domain, cfg: &InfConvConfig, radius: f64) -> Vec<Offset> {
    let h = d.h();
    let ri = (radius / h[0]).floor() as isize;
    let rj = if d.dim() == 2 { (radius / h[1]).floor() as isize } else { 0 };
    let mut out = Vec::new();
    for di in -ri..=ri {
        for dj in -rj..=rj {
            let (dx, dy) = (di as f64 * h[0], dj as f64 * h[1]);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist <= radius {
                out.push(Offset {
                    di,
                    dj,
                    penalty: cfg.penalty(dist),
                });
            }
        }
    }
    out
}

fn convolve_with_radius(u: &GridFunction, cfg: InfConvConfig, radius: f64) -> InfConvResult {
    let d = u.domain();
    let shape = d.shape();
    let offsets = ball_offsets(d, &cfg, radius);
    let vals = u.values();
    let rows: Vec<(f64, usize)> = (0..d.len())
        .into_par_iter()
        .map(|idx| {
            let nd = d.node(idx);
            let mut best = (vals[idx], idx);
            for o in &offsets {
                let i = nd[0] as isize + o.di;
                let j = nd[1] as isize + o.dj;
                if i < 0 || j < 0 || i >= shape[0] as isize || j >= shape[1] as isize {
                    continue;
                }
                let k = i as usize * shape[1] + j as usize;
                let v = vals[k] + o.penalty;
                // strict comparison in fixed offset order keeps ties deterministic
                if v < best.0 {
                    best = (v, k);
                }
            }
            best
        })
        .collect();
    let mut u_eps = u.clone();
    let mut minimizer = Vec::with_capacity(rows.len());
    let mut minimizer_offset = Vec::with_capacity(rows.len());
    for (idx, (v, k)) in rows.into_iter().enumerate() {
        u_eps.values_mut()[idx] = v;
        minimizer.push(k);
        let (x, y) = (d.coord(d.node(idx)), d.coord(d.node(k)));
        minimizer_offset.push([y[0] - x[0], y[1] - x[1]]);
    }
    InfConvResult {
        u_eps,
        config: cfg,
        minimizer_offset,
        minimizer,
        resolved: radius >= d.h_min(),
    }
}

/// Inf-convolution over the search ball of radius `r(ε)`.
pub fn inf_convolve(u: &GridFunction, eps: f64, q: f64) -> Result<InfConvResult> {
    let cfg = InfConvConfig::new(eps, q, u.oscillation())?;
    // a constant u has r = 0 and is its own inf-convolution
    if cfg.r_eps < u.domain().h_min() && cfg.osc > 0.0 {
        log::warn!(
            "grid cannot resolve search radius r = {:.3e} (h = {:.3e}); u_eps equals u",
            cfg.r_eps,
            u.domain().h_min()
        );
    }
    Ok(convolve_with_radius(u, cfg, cfg.r_eps * (1.0 + 1e-12)))
}

/// Reference implementation minimizing over every node of the grid.
pub fn inf_convolve_global(u: &GridFunction, eps: f64, q: f64) -> Result<InfConvResult> {
    let cfg = InfConvConfig::new(eps, q, u.oscillation())?;
    let d = u.domain();
    let diam = (0..d.dim())
        .map(|k| (d.upper()[k] - d.lower()[k]).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(convolve_with_radius(u, cfg, diam * (1.0 + 1e-12)))
}

/// `ω(r) = max |u(x) − u(y)|` over node pairs with `|x − y| ≤ r`.
pub fn modulus_of_continuity(u: &GridFunction, r: f64) -> f64 {
    let d = u.domain();
    let shape = d.shape();
    let cfg = InfConvConfig {
        epsilon: 1.0,
        q: 2.0,
        r_eps: r,
        osc: 0.0,
    };
    let offsets = ball_offsets(d, &cfg, r * (1.0 + 1e-12));
    let vals = u.values();
    (0..d.len())
        .into_par_iter()
        .map(|idx| {
            let nd = d.node(idx);
            let mut m = 0.0f64;
            for o in &offsets {
                let i = nd[0] as isize + o.di;
                let j = nd[1] as isize + o.dj;
                if i < 0 || j < 0 || i >= shape[0] as isize || j >= shape[1] as isize {
                    continue;
                }
                m = m.max((vals[i as usize * shape[1] + j as usize] - vals[idx]).abs());
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Constants of the `C·h` tolerances used by [`verify_properties`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyTolerances {
    /// Semiconcavity: directional curvature of `u_ε` at most `K + c·h·(1+K)`.
    pub c_semiconcave: f64,
    /// Gradient relation: `|η − η_ε| ≤ c·h·K`.
    pub c_gradient: f64,
    /// Jet bound: directional curvature at most `(q−1)/ε |η|^{(q−2)/(q−1)} + c·h·(1+K)`.
    pub c_jet: f64,
    /// Gradient threshold `γ` for jet probes; `None` means `10·h`.
    pub gamma: Option<f64>,
}

impl Default for PropertyTolerances {
    fn default() -> Self {
        Self {
            c_semiconcave: crate::tolerances::INFCONV_SEMICONCAVE_C,
            c_gradient: crate::tolerances::INFCONV_GRADIENT_C,
            c_jet: crate::tolerances::INFCONV_JET_C,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub epsilon: f64,
    pub q: f64,
    pub r_eps: f64,
    pub semiconcavity: f64,
    pub inset_nodes: usize,
    pub probe_nodes: usize,
    /// Probe nodes skipped by the gradient relation because a stencil
    /// neighbour's minimizer jumps: `u_ε` has a kink there.
    pub kink_nodes: usize,
    /// (i) `u_ε ≤ u`
    pub below_violations: usize,
    pub sup_u_minus_u_eps: f64,
    /// (ii) `|x_ε − x| ≤ r(ε)` and the refined `(q ε^{q−1} ω(r))^{1/q}`
    pub radius_violations: usize,
    pub refined_radius: f64,
    pub refined_radius_violations: usize,
    pub max_offset: f64,
    /// (iii) semiconcavity
    pub semiconcave_violations: usize,
    pub semiconcave_worst_excess: f64,
    /// (iv) minimizer attained inside the search ball
    pub minimizer_violations: usize,
    /// (v) gradient relation and jet bound
    pub gradient_violations: usize,
    pub gradient_worst_error: f64,
    pub jet_violations: usize,
    pub jet_worst_excess: f64,
    pub passed: bool,
}

/// Largest second difference `(u(x+v) + u(x−v) − 2u(x))/|v|²` over the
/// axis steps and, in 2D, the two diagonal steps. A minimum of paraboloids
/// with curvature `K` has every such quotient `≤ K` exactly, which is not
/// true of `λmax` of the assembled Hessian at concave kinks.
pub fn directional_curvature(u: &GridFunction, nd: Node) -> f64 {
    let d = u.domain();
    let h = d.h();
    let second = |di: isize, dj: isize| {
        let at = |si: isize| [(nd[0] as isize + si * di) as usize, (nd[1] as isize + si * dj) as usize];
        let len2 = (di as f64 * h[0]).powi(2) + (dj as f64 * h[1]).powi(2);
        (u.get(at(1)) + u.get(at(-1)) - 2.0 * u.get(nd)) / len2
    };
    if d.dim() == 1 {
        return second(1, 0);
    }
    [second(1, 0), second(0, 1), second(1, 1), second(1, -1)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimizer offsets of neighbouring nodes differing by more than this many
/// cells mark a kink of `u_ε`. A differentiable `u_ε` moves its minimizer
/// by `O(h)` per cell.
pub const KINK_JUMP_CELLS: f64 = 3.0;

fn minimizer_jumps(result: &InfConvResult, nd: Node, limit: f64) -> bool {
    let d = result.u_eps.domain();
    let off = result.minimizer_offset[d.index(nd)];
    (0..d.dim()).any(|axis| {
        [-1, 1].into_iter().any(|s| {
            d.offset(nd, axis, s).is_some_and(|nb| {
                let o = result.minimizer_offset[d.index(nb)];
                (o[0] - off[0]).hypot(o[1] - off[1]) > limit
            })
        })
    })
}

/// Checks properties (i)–(v) of an inf-convolution of `u`.
pub fn verify_properties(u: &GridFunction, result: &InfConvResult, tol: &PropertyTolerances) -> PropertyReport {
    let d = u.domain();
    let cfg = result.config;
    let h = d.h_max();
    let gamma = tol.gamma.unwrap_or(10.0 * h);
    let k_semi = cfg.semiconcavity();
    // stencil neighbours sit up to one cell further out than the centre
    let k_local = cfg.penalty_curvature(cfg.r_eps + h);
    let ue = &result.u_eps;
    let mut rep = PropertyReport {
        epsilon: cfg.epsilon,
        q: cfg.q,
        r_eps: cfg.r_eps,
        semiconcavity: k_semi,
        inset_nodes: 0,
        probe_nodes: 0,
        kink_nodes: 0,
        below_violations: 0,
        sup_u_minus_u_eps: u.sup_diff(ue),
        radius_violations: 0,
        refined_radius: 0.0,
        refined_radius_violations: 0,
        max_offset: 0.0,
        semiconcave_violations: 0,
        semiconcave_worst_excess: f64::NEG_INFINITY,
        minimizer_violations: 0,
        gradient_violations: 0,
        gradient_worst_error: 0.0,
        jet_violations: 0,
        jet_worst_excess: f64::NEG_INFINITY,
        passed: false,
    };
    for (a, b) in u.values().iter().zip(ue.values()) {
        if b > a {
            rep.below_violations += 1;
        }
    }
    let omega = modulus_of_continuity(u, cfg.r_eps);
    rep.refined_radius = (cfg.q * cfg.epsilon.powf(cfg.q - 1.0) * omega).powf(1.0 / cfg.q);
    let semi_tol = tol.c_semiconcave * h * (1.0 + k_local);
    let jet_tol = tol.c_jet * h * (1.0 + k_local);
    let grad_tol = tol.c_gradient * h * k_local;
    let margin = cfg.r_eps + h;
    for nd in d.interior_nodes() {
        if !d.in_inset(nd, margin) {
            continue;
        }
        rep.inset_nodes += 1;
        let idx = d.index(nd);
        let off = result.minimizer_offset[idx];
        let dist = off[0].hypot(off[1]);
        rep.max_offset = rep.max_offset.max(dist);
        if dist > cfg.r_eps * (1.0 + 1e-12) {
            rep.radius_violations += 1;
        }
        if dist > rep.refined_radius * (1.0 + 1e-12) + 1e-14 {
            rep.refined_radius_violations += 1;
        }
        let k = result.minimizer[idx];
        let attained = u.values()[k] + cfg.penalty(dist);
        if (attained - ue.values()[idx]).abs() > 1e-12 * (1.0 + attained.abs()) {
            rep.minimizer_violations += 1;
        }
        let jet = jet_unchecked(ue, nd);
        let lmax = directional_curvature(ue, nd);
        let excess = lmax - k_local;
        rep.semiconcave_worst_excess = rep.semiconcave_worst_excess.max(excess);
        if excess > semi_tol {
            rep.semiconcave_violations += 1;
        }
        let eta_norm = jet.eta_norm();
        if eta_norm > gamma {
            rep.probe_nodes += 1;
            if minimizer_jumps(result, nd, KINK_JUMP_CELLS * h) {
                rep.kink_nodes += 1;
            } else {
                // η_ε = (x − x_ε)|x − x_ε|^{q−2}/ε^{q−1}
                let scale = dist.powf(cfg.q - 2.0) / cfg.epsilon.powf(cfg.q - 1.0);
                let err = (0..d.dim())
                    .map(|a| (jet.eta[a] + off[a] * scale).powi(2))
                    .sum::<f64>()
                    .sqrt();
                rep.gradient_worst_error = rep.gradient_worst_error.max(err);
                if err > grad_tol {
                    rep.gradient_violations += 1;
                }
            }
            let bound = (cfg.q - 1.0) / cfg.epsilon * eta_norm.powf((cfg.q - 2.0) / (cfg.q - 1.0));
            let excess = lmax - bound;
            rep.jet_worst_excess = rep.jet_worst_excess.max(excess);
            if excess > jet_tol {
                rep.jet_violations += 1;
            }
        }
    }
    rep.passed = rep.below_violations == 0
        && rep.radius_violations == 0
        && rep.refined_radius_violations == 0
        && rep.semiconcave_violations == 0
        && rep.minimizer_violations == 0
        && rep.gradient_violations == 0
        && rep.jet_violations == 0;
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub epsilon: f64,
    pub q: f64,
    pub r_eps: f64,
    /// Negative part of the minimum of `|η|^{min(p−2,0)} F`.
    pub defect: f64,
    pub min_value: f64,
    pub worst_node: [usize; 2],
    pub probe_nodes: usize,
    pub skipped_nodes: usize,
    pub sup_u_minus_u_eps: f64,
}

/// Supersolution defect of `u_ε`: evaluates `|η|^{min(p−2,0)} F(x, η, X)`
/// from discrete jets at inset nodes with `|η| > γ` (default `10·h`) and
/// returns the negative part of the minimum.
pub fn supersolution_defect(
    u: &GridFunction,
    p: &ExponentField,
    eps: f64,
    q: f64,
    gamma: Option<f64>,
) -> Result<DefectReport> {
    supersolution_defect_in(u, p, eps, q, gamma, |_| true)
}

/// As [`supersolution_defect`], probing only nodes where `region` holds.
pub fn supersolution_defect_in(
    u: &GridFunction,
    p: &ExponentField,
    eps: f64,
    q: f64,
    gamma: Option<f64>,
    region: impl Fn(Point) -> bool,
) -> Result<DefectReport> {
    let res = inf_convolve(u, eps, q)?;
    let d = u.domain();
    let h = d.h_max();
    let gamma = gamma.unwrap_or(10.0 * h);
    let margin = res.config.r_eps + h;
    let mut min_value = f64::INFINITY;
    let mut worst_node: Node = [0, 0];
    let (mut probes, mut skipped) = (0, 0);
    for nd in d.interior_nodes() {
        let x = d.coord(nd);
        if !d.in_inset(nd, margin) || !region(x) {
            continue;
        }
        let jet = jet_unchecked(&res.u_eps, nd);
        let en = jet.eta_norm();
        if en <= gamma {
            skipped += 1;
            continue;
        }
        probes += 1;
        let pv = p.eval(x);
        let f = normalized_pxlap(&OperatorSample::new(jet, pv))?;
        let v = en.powf((pv - 2.0).min(0.0)) * f;
        if v < min_value {
            min_value = v;
            worst_node = nd;
        }
    }
    if probes == 0 {
        return Err(Error::NoProbePoints);
    }
    Ok(DefectReport {
        epsilon: eps,
        q: res.config.q,
        r_eps: res.config.r_eps,
        defect: (-min_value).max(0.0),
        min_value,
        worst_node,
        probe_nodes: probes,
        skipped_nodes: skipped,
        sup_u_minus_u_eps: u.sup_diff(&res.u_eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Grid on [−1, 1] with a node at 0 and h = 2/(n+1).
    fn sym_line(n_plus_one: usize) -> Domain {
        Domain::new_1d(-1.0, 1.0, n_plus_one - 1).unwrap()
    }

    fn huber(x: f64, eps: f64) -> f64 {
        if x.abs() < eps {
            x * x / (2.0 * eps)
        } else {
            x.abs() - eps / 2.0
        }
    }

    #[test]
    fn q_min_examples() {
        assert_eq!(q_min(2.0).unwrap(), 2.0);
        assert!((q_min(1.5).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(q_min(4.0).unwrap(), 2.0);
        assert!(q_min(1.0).is_err());
        // oracle: (q−2)/(q−1) = 2 − p⁻
        for pm in [1.1, 1.3, 1.707, 1.9] {
            let q = q_min(pm).unwrap();
            assert!(((q - 2.0) / (q - 1.0) - (2.0 - pm)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_function_is_fixed() {
        let d = sym_line(40);
        let u = GridFunction::from_fn(&d, |_| 1.7);
        let r = inf_convolve(&u, 0.1, 2.0).unwrap();
        assert_eq!(r.u_eps.values(), u.values());
        assert!(r.minimizer_offset.iter().all(|o| *o == [0.0, 0.0]));
        let rep = verify_properties(&u, &r, &PropertyTolerances::default());
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn abs_matches_huber_envelope() {
        let d = sym_line(400);
        let u = GridFunction::from_fn(&d, |x| x[0].abs());
        for eps in [0.1, 0.05, 0.025] {
            let r = inf_convolve(&u, eps, 2.0).unwrap();
            let h = d.h()[0];
            for nd in d.interior_nodes() {
                let x = d.coord(nd)[0];
                let err = (r.u_eps.get(nd) - huber(x, eps)).abs();
                assert!(err <= h * h / (2.0 * eps) + 1e-14, "eps {eps} x {x} err {err}");
                if x.abs() >= eps - 1e-12 {
                    assert!((u.get(nd) - r.u_eps.get(nd) - eps / 2.0).abs() < 1e-12);
                }
            }
            let rep = verify_properties(&u, &r, &PropertyTolerances::default());
            assert!(rep.passed, "{rep:?}");
            // curvature of the envelope is exactly 1/ε inside (−ε, ε)
            let mid = d.index([200, 0]);
            let second = (r.u_eps.values()[mid + 1] - 2.0 * r.u_eps.values()[mid] + r.u_eps.values()[mid - 1])
                / (h * h);
            assert!((second - 1.0 / eps).abs() < 1e-6 / eps);
        }
    }

    #[test]
    fn affine_shift_matches_calculus_oracle() {
        let d = Domain::new_1d(-1.0, 1.0, 799).unwrap();
        let h = d.h()[0];
        for q in [2.0, 3.0] {
            for a in [0.5, -1.3] {
                let u = GridFunction::from_fn(&d, |x| a * x[0] + 0.2);
                let eps = 0.05;
                let r = inf_convolve(&u, eps, q).unwrap();
                let c = eps * f64::abs(a).powf(q / (q - 1.0)) * (1.0 - 1.0 / q);
                let t_star = eps * f64::abs(a).powf(1.0 / (q - 1.0));
                let quant = (q - 1.0) * (t_star + h).powf(q - 2.0) / eps.powf(q - 1.0) * h * h / 8.0;
                for nd in d.interior_nodes() {
                    if !d.in_inset(nd, r.config.r_eps + h) {
                        continue;
                    }
                    let shift = u.get(nd) - r.u_eps.get(nd);
                    assert!(shift <= c + 1e-12 && shift >= c - quant - 1e-12, "q {q} a {a}: {shift} vs {c}");
                }
            }
        }
    }

    #[test]
    fn sine_ladder_decreases_and_passes() {
        let d = sym_line(400);
        let u = GridFunction::from_fn(&d, |x| (PI * x[0]).sin());
        let mut last = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let r = inf_convolve(&u, eps, 2.0).unwrap();
            let rep = verify_properties(&u, &r, &PropertyTolerances::default());
            assert!(rep.passed, "{rep:?}");
            assert!(rep.sup_u_minus_u_eps < last);
            last = rep.sup_u_minus_u_eps;
        }
    }

    #[test]
    fn unresolved_radius_returns_u() {
        let d = sym_line(10);
        let u = GridFunction::from_fn(&d, |x| 1e-6 * x[0]);
        let r = inf_convolve(&u, 1e-3, 2.0).unwrap();
        assert!(!r.resolved);
        assert_eq!(r.u_eps.values(), u.values());
    }

    #[test]
    fn local_search_equals_global_search_2d() {
        let d = Domain::square(-1.0, 1.0, 30).unwrap();
        let u = GridFunction::from_fn(&d, |x| (3.0 * x[0]).sin() * x[1] + (x[0] * x[1]).abs());
        for q in [2.0, 2.5, 4.0] {
            let a = inf_convolve(&u, 0.2, q).unwrap();
            let b = inf_convolve_global(&u, 0.2, q).unwrap();
            assert_eq!(a.u_eps.values(), b.u_eps.values());
        }
    }

    #[test]
    fn directional_curvature_bounds_a_min_of_paraboloids() {
        // two unit-curvature paraboloids meeting along an oblique line; the
        // assembled Hessian sees the concave kink through its cross term
        let d = Domain::square(-1.0, 1.0, 20).unwrap();
        let c = [0.6, 0.8];
        let u = GridFunction::from_fn(&d, |x| {
            let a = 0.5 * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2));
            let b = 0.5 * ((x[0] + c[0]).powi(2) + (x[1] + c[1]).powi(2));
            a.min(b)
        });
        let mut worst_lmax = f64::NEG_INFINITY;
        for nd in d.interior_nodes() {
            assert!(directional_curvature(&u, nd) <= 1.0 + 1e-9);
            worst_lmax = worst_lmax.max(jet_unchecked(&u, nd).max_eigenvalue());
        }
        assert!(worst_lmax > 1.5, "{worst_lmax}");
    }

    #[test]
    fn defect_of_affine_is_zero() {
        let d = Domain::square(0.0, 1.0, 40).unwrap();
        let u = GridFunction::from_fn(&d, |x| 1.0 + 2.0 * x[0] - x[1]);
        let p = ExponentField::affine(1.5, &[0.5, 0.5], &d).unwrap();
        let rep = supersolution_defect(&u, &p, 0.05, 3.0, None).unwrap();
        assert!(rep.defect < 1e-8, "{rep:?}");
    }

    #[test]
    fn defect_without_gradient_errors() {
        let d = Domain::square(0.0, 1.0, 20).unwrap();
        let u = GridFunction::from_fn(&d, |_| 2.0);
        let p = ExponentField::constant(3.0, 2).unwrap();
        assert!(matches!(
            supersolution_defect(&u, &p, 0.05, 2.0, None),
            Err(Error::NoProbePoints)
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn below_and_monotone_in_epsilon(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 4),
            e1 in 0.01f64..0.3,
            e2 in 0.01f64..0.3,
            q in 2.0f64..4.0,
        ) {
            let d = Domain::square(-1.0, 1.0, 16).unwrap();
            let u = GridFunction::from_fn(&d, |x| {
                coeffs[0] * x[0] + coeffs[1] * (2.0 * x[1]).sin() + coeffs[2] * (x[0] * x[1]).abs() + coeffs[3] * x[0] * x[0]
            });
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let a = inf_convolve(&u, lo, q).unwrap();
            let b = inf_convolve(&u, hi, q).unwrap();
            for k in 0..d.len() {
                proptest::prop_assert!(a.u_eps.values()[k] <= u.values()[k]);
                proptest::prop_assert!(b.u_eps.values()[k] <= a.u_eps.values()[k]);
            }
            let g = inf_convolve_global(&u, hi, q).unwrap();
            proptest::prop_assert_eq!(g.u_eps.values(), b.u_eps.values());
        }
    }
}
