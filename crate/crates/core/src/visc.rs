//! Pseudo-time relaxation for the normalized equation
//! `−tr X − (p(x)−2)⟨Xη,η⟩/|η|² = 0` and the discrete viscosity-residual probe.
//!
//! The relaxation iterates `u ← u + τ G(u)` on free nodes, where
//! `G = tr X + (p−2)/(δ+|η|²) ⟨Xη,η⟩` is evaluated on centered discrete jets.
//! The matrix `I + (p−2)ηη/(δ+|η|²)` has trace at most `N + max(p−2, 0)`, which
//! fixes the explicit stability step `τ = θ h²/(2(N + max(p⁺−2, 0)))`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{jet_unchecked, GridFunction, Node};
use crate::operators::{normalized_part, normalized_pxlap, OperatorSample};
use crate::weak::{harmonic_extension, DirichletProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    /// Gradient regularization inside the normalizing denominator.
    pub delta: f64,
    /// Fraction of the explicit stability step.
    pub tau_factor: f64,
    /// Steady state: `sup |G| < tol`.
    pub tol: f64,
    pub max_steps: usize,
    /// In-place lexicographic sweeps instead of Jacobi steps. Single-threaded.
    pub gauss_seidel: bool,
    /// Record a history row every this many steps.
    pub record_every: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            tau_factor: 0.9,
            tol: 1e-8,
            max_steps: 2_000_000,
            gauss_seidel: false,
            record_every: 100,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.tau_factor > 0.0 && self.tau_factor <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_factor must lie in (0, 1], got {}",
                self.tau_factor
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidArgument("max_steps and record_every must be positive".into()));
        }
        Ok(())
    }
}

/// `τ = θ h_min² / (2(N + max(p⁺−2, 0)))`.
pub fn time_step(problem: &DirichletProblem, tau_factor: f64) -> f64 {
    let d = problem.domain();
    let h = d.h_min();
    tau_factor * h * h / (2.0 * (d.dim() as f64 + (problem.p.p_plus() - 2.0).max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRow {
    pub step: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Relaxed {
    pub u: GridFunction,
    pub steps: usize,
    /// `sup |G|` at the returned iterate.
    pub residual: f64,
    pub tau: f64,
    pub history: Vec<RelaxationRow>,
}

impl Relaxed {
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["step", "residual"])?;
        for r in &self.history {
            wr.write_record(&[r.step.to_string(), format!("{:e}", r.residual)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn g_at(u: &GridFunction, nd: Node, p: f64, delta: f64) -> f64 {
    let jet = jet_unchecked(u, nd);
    let s = OperatorSample::new(jet, p);
    normalized_part(&s, delta + jet.eta_norm_sq())
}

struct Free {
    nodes: Vec<Node>,
    idx: Vec<usize>,
    p: Vec<f64>,
}

impl Free {
    fn new(u: &GridFunction, p: &ExponentField) -> Self {
        let d = u.domain();
        let nodes: Vec<Node> = u.free_nodes().collect();
        let idx = nodes.iter().map(|&nd| d.index(nd)).collect();
        let p = nodes.iter().map(|&nd| p.eval(d.coord(nd))).collect();
        Self { nodes, idx, p }
    }

    fn operator(&self, u: &GridFunction, delta: f64, out: &mut [f64]) -> f64 {
        out.par_iter_mut()
            .zip(self.nodes.par_iter().zip(self.p.par_iter()))
            .for_each(|(g, (&nd, &pv))| *g = g_at(u, nd, pv, delta));
        out.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// One Jacobi step `u + τ G(u)` on free nodes.
pub fn relax_step(u: &GridFunction, p: &ExponentField, delta: f64, tau: f64) -> GridFunction {
    let free = Free::new(u, p);
    let mut g = vec![0.0; free.idx.len()];
    free.operator(u, delta, &mut g);
    let mut out = u.clone();
    for (&i, gv) in free.idx.iter().zip(&g) {
        out.values_mut()[i] += tau * gv;
    }
    out
}

/// Relaxes from the harmonic extension of the data to a steady state of
/// the regularized normalized operator.
pub fn relax(problem: &DirichletProblem, cfg: &RelaxationConfig) -> Result<Relaxed> {
    cfg.validate()?;
    let start = harmonic_extension(problem)?;
    relax_from(problem, start, cfg)
}

/// As [`relax`] from a given starting iterate (its fixed-node values are
/// overwritten by the data).
pub fn relax_from(problem: &DirichletProblem, start: GridFunction, cfg: &RelaxationConfig) -> Result<Relaxed> {
    cfg.validate()?;
    let data = &problem.data;
    if start.domain() != data.domain() {
        return Err(Error::InvalidArgument("starting iterate and data live on different grids".into()));
    }
    let mut u = data.clone();
    for nd in data.free_nodes() {
        u.set(nd, start.get(nd));
    }
    run(problem, u, cfg, time_step(problem, cfg.tau_factor))
}

fn run(problem: &DirichletProblem, mut u: GridFunction, cfg: &RelaxationConfig, tau: f64) -> Result<Relaxed> {
    let free = Free::new(&u, &problem.p);
    let blowup = 2.0 * u.sup_norm().max(f64::MIN_POSITIVE);
    let mut g = vec![0.0; free.idx.len()];
    let mut history = Vec::new();
    for step in 0..=cfg.max_steps {
        let residual = if cfg.gauss_seidel {
            // residual of the current iterate, then one in-place sweep
            let r = free.operator(&u, cfg.delta, &mut g);
            if r >= cfg.tol && step < cfg.max_steps {
                for k in 0..free.idx.len() {
                    let gv = g_at(&u, free.nodes[k], free.p[k], cfg.delta);
                    u.values_mut()[free.idx[k]] += tau * gv;
                }
            }
            r
        } else {
            let r = free.operator(&u, cfg.delta, &mut g);
            if r >= cfg.tol && step < cfg.max_steps {
                let vals = u.values_mut();
                for (&i, gv) in free.idx.iter().zip(&g) {
                    vals[i] += tau * gv;
                }
            }
            r
        };
        if !residual.is_finite() {
            return Err(Error::NonFinite(format!("relaxation residual at step {step}")));
        }
        let done = residual < cfg.tol;
        if step % cfg.record_every == 0 || done {
            history.push(RelaxationRow { step, residual });
        }
        if done {
            return Ok(Relaxed {
                u,
                steps: step,
                residual,
                tau,
                history,
            });
        }
        if step == cfg.max_steps {
            return Err(Error::MaxSteps { steps: step, residual });
        }
        let sup = u.sup_norm();
        if !(sup <= blowup) {
            return Err(Error::Divergence { step, sup });
        }
    }
    unreachable!("loop returns on its last step")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityResidualReport {
    pub gamma: f64,
    pub nodes: Vec<[usize; 2]>,
    /// `F(x, η, X)` at the probe nodes.
    pub values: Vec<f64>,
    /// `max(0, −min F)`: supersolution defect.
    pub worst_negative: f64,
    /// `max(0, max F)`: subsolution defect.
    pub worst_positive: f64,
    pub max_abs: f64,
    /// Free nodes with `|η| ≤ γ`.
    pub skipped: usize,
}

/// Evaluates `F` from centered jets at free nodes with `|η| > γ`.
pub fn viscosity_residual(u: &GridFunction, p: &ExponentField, gamma: f64) -> ViscosityResidualReport {
    let d = u.domain();
    let mut rep = ViscosityResidualReport {
        gamma,
        nodes: Vec::new(),
        values: Vec::new(),
        worst_negative: 0.0,
        worst_positive: 0.0,
        max_abs: 0.0,
        skipped: 0,
    };
    for nd in u.free_nodes() {
        let jet = jet_unchecked(u, nd);
        if jet.eta_norm() <= gamma {
            rep.skipped += 1;
            continue;
        }
        let f = normalized_pxlap(&OperatorSample::new(jet, p.eval(d.coord(nd))))
            .expect("gradient above threshold is nonzero");
        rep.nodes.push(nd);
        rep.values.push(f);
        rep.worst_negative = rep.worst_negative.max(-f);
        rep.worst_positive = rep.worst_positive.max(f);
        rep.max_abs = rep.max_abs.max(f.abs());
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{make_exponent, ExponentSpec};
    use crate::grid::Domain;

    #[test]
    fn heat_step_for_p_two() {
        let d = Domain::square(0.0, 1.0, 12).unwrap();
        let p = ExponentField::constant(2.0, 2).unwrap();
        let u = GridFunction::from_fn(&d, |x| (3.0 * x[0]).sin() * (x[1] * x[1] + 0.3) + x[0] * x[1]);
        let h = d.h()[0];
        let tau = h * h / 4.0;
        let next = relax_step(&u, &p, 1e-8, tau);
        let s1 = d.shape()[1];
        for nd in d.interior_nodes() {
            let i = d.index(nd);
            let v = u.values();
            let lap = (v[i + s1] + v[i - s1] + v[i + 1] + v[i - 1] - 4.0 * v[i]) / (h * h);
            let heat = v[i] + tau * lap;
            assert!((next.values()[i] - heat).abs() <= 1e-14, "{nd:?}");
        }
        for nd in d.nodes().filter(|&nd| d.is_box_boundary(nd)) {
            assert_eq!(next.get(nd), u.get(nd));
        }
    }

    #[test]
    fn time_step_formula() {
        let d = Domain::square(0.0, 1.0, 9).unwrap();
        let data = GridFunction::from_fn(&d, |x| x[0]);
        let p = ExponentField::affine(2.0, &[1.5, 0.0], &d).unwrap();
        let prob = DirichletProblem::new(data, p.clone(), "t").unwrap();
        let h = 0.1;
        let expect = 0.9 * h * h / (2.0 * (2.0 + p.p_plus() - 2.0));
        assert!((time_step(&prob, 0.9) - expect).abs() < 1e-15);
    }

    #[test]
    fn affine_data_is_steady() {
        let d = Domain::new_1d(0.0, 1.0, 31).unwrap();
        let p = make_exponent(&ExponentSpec::Affine { offset: 2.0, slope: vec![0.5] }, &d).unwrap();
        let data = GridFunction::from_fn(&d, |x| x[0]);
        let prob = DirichletProblem::new(data.clone(), p, "affine").unwrap();
        let out = relax(&prob, &RelaxationConfig::default()).unwrap();
        assert!(out.u.sup_diff(&data) < 1e-10);
        assert!(out.steps <= 1);
    }

    #[test]
    fn affine_2d_variable_p() {
        let d = Domain::square(0.0, 1.0, 15).unwrap();
        let p = make_exponent(
            &ExponentSpec::Sine {
                base: 2.5,
                amplitude: 0.5,
                frequency: 1.0,
                axis: 0,
            },
            &d,
        )
        .unwrap();
        let data = GridFunction::from_fn(&d, |x| 0.2 - x[0] + 0.4 * x[1]);
        let prob = DirichletProblem::new(data.clone(), p, "affine").unwrap();
        let out = relax(&prob, &RelaxationConfig::default()).unwrap();
        assert!(out.u.sup_diff(&data) < 1e-8);
    }

    #[test]
    fn jacobi_and_gauss_seidel_reach_the_same_state() {
        let d = Domain::square(0.0, 1.0, 9).unwrap();
        let p = ExponentField::constant(3.0, 2).unwrap();
        let data = GridFunction::from_fn(&d, |x| x[0] + 0.3 * (x[0] * x[1]).powi(2));
        let prob = DirichletProblem::new(data, p, "mix").unwrap();
        let cfg = RelaxationConfig {
            tol: 1e-10,
            ..Default::default()
        };
        let a = relax(&prob, &cfg).unwrap();
        let b = relax(
            &prob,
            &RelaxationConfig {
                gauss_seidel: true,
                ..cfg
            },
        )
        .unwrap();
        assert!(a.u.sup_diff(&b.u) < 1e-8);
        assert!(b.steps < a.steps);
    }

    #[test]
    fn max_steps_reports_residual() {
        let d = Domain::square(0.0, 1.0, 9).unwrap();
        let p = ExponentField::constant(3.0, 2).unwrap();
        let data = GridFunction::from_fn(&d, |x| (x[0] * x[1]).powi(2));
        let prob = DirichletProblem::new(data, p, "cap").unwrap();
        let cfg = RelaxationConfig {
            max_steps: 3,
            ..Default::default()
        };
        match relax(&prob, &cfg) {
            Err(Error::MaxSteps { steps, residual }) => {
                assert_eq!(steps, 3);
                assert!(residual > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_beyond_stability_limit_is_caught() {
        let d = Domain::square(0.0, 1.0, 9).unwrap();
        let p = ExponentField::constant(2.0, 2).unwrap();
        let data = GridFunction::from_fn(&d, |x| x[0] * x[1]);
        let prob = DirichletProblem::new(data.clone(), p, "cfl").unwrap();
        let mut start = data.clone();
        for nd in d.interior_nodes() {
            start.set(nd, if (nd[0] + nd[1]) % 2 == 0 { 0.5 } else { -0.5 });
        }
        let cfg = RelaxationConfig::default();
        assert!(run(&prob, start.clone(), &cfg, 2.0 * time_step(&prob, 1.0)).is_err_and(|e| matches!(e, Error::Divergence { .. })));
        assert!(relax_from(&prob, start, &cfg).is_ok());
    }

    #[test]
    fn viscosity_residual_of_affine_and_bumps() {
        let d = Domain::square(0.0, 1.0, 19).unwrap();
        let p = ExponentField::affine(2.5, &[0.5, -0.3], &d).unwrap();
        let aff = |x: [f64; 2]| 0.5 + x[0] - 0.5 * x[1];
        let u = GridFunction::from_fn(&d, aff);
        let rep = viscosity_residual(&u, &p, 0.1);
        assert_eq!(rep.skipped, 0);
        assert!(rep.max_abs < 1e-10);
        let kappa = 0.2;
        let sup = u.map_with_coord(|x, v| v + kappa * (1.0 - (x[0] - 0.5).powi(2) - (x[1] - 0.5).powi(2)));
        let rep = viscosity_residual(&sup, &p, 0.1);
        assert!(rep.worst_negative < 1e-10);
        assert!(rep.values.iter().all(|&f| f > 0.0));
        let sub = u.map_with_coord(|x, v| v + kappa * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)));
        let rep = viscosity_residual(&sub, &p, 0.1);
        assert!(rep.worst_positive < 1e-10);
        assert!(rep.worst_negative > 0.1);
    }

    #[test]
    fn gradient_threshold_skips_flat_nodes() {
        let d = Domain::square(-1.0, 1.0, 20).unwrap();
        let p = ExponentField::constant(3.0, 2).unwrap();
        let u = GridFunction::from_fn(&d, |x| x[0] * x[0] + x[1] * x[1]);
        let rep = viscosity_residual(&u, &p, 0.5);
        assert!(rep.skipped > 0);
        assert_eq!(rep.skipped + rep.values.len(), 400);
        // F = −(2N + (p−2)·2) for a paraboloid
        for f in &rep.values {
            assert!((f + 6.0).abs() < 1e-10);
        }
    }

    #[test]
    fn history_csv() {
        let d = Domain::new_1d(0.0, 1.0, 7).unwrap();
        let p = ExponentField::constant(2.0, 1).unwrap();
        let data = GridFunction::from_fn(&d, |x| x[0] * x[0]);
        let prob = DirichletProblem::new(data, p, "h").unwrap();
        let out = relax(&prob, &RelaxationConfig::default()).unwrap();
        let mut buf = Vec::new();
        out.write_history_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("step,residual\n"));
    }
}
