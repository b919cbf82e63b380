//! Weak and viscosity solutions of the same Dirichlet problem, compared on
//! a grid ladder and each audited under the other solution concept.

use serde::{Deserialize, Serialize};

use super::config::EquivalenceStudy;
use super::observed_orders;
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::tolerances::{
    AFFINE_EQUIVALENCE, CROSS_VISC_C, CROSS_WEAK_C, EQUIVALENCE_FLOOR, SELF_CONVERGENCE_FACTOR,
};
use crate::visc::{relax, viscosity_residual, RelaxationConfig};
use crate::weak::{audit_supersolution, solve, SolverConfig, TestFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub grid: usize,
    pub h: f64,
    pub sup_difference: f64,
    pub weak_error: Option<f64>,
    pub visc_error: Option<f64>,
    /// Max normalized weak residual of the relaxed solution over nodal hats.
    pub weak_residual_of_visc: f64,
    pub weak_residual_tolerance: f64,
    /// Max `|F|` of the weak solution at probe nodes.
    pub visc_residual_of_weak: f64,
    pub visc_residual_tolerance: f64,
    pub visc_probe_nodes: usize,
    pub cross_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEquivalence {
    pub label: String,
    pub exponent: String,
    pub variable_exponent: bool,
    pub affine_data: bool,
    pub rows: Vec<EquivalenceRow>,
    /// Orders of `sup|u_weak − u_visc|`; absent when the differences sit
    /// at roundoff.
    pub difference_orders: Vec<f64>,
    pub non_increasing: bool,
    /// For problems without an exact solution: finest difference within
    /// the allowed factor of the coarse difference scaled by `h`.
    pub self_convergence: Option<bool>,
    /// Affine data: every difference within the roundoff tolerance.
    pub affine_within: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub problems: Vec<ProblemEquivalence>,
    /// Problems with a variable exponent and non-affine data.
    pub variable_problems: usize,
    pub passed: bool,
}

fn is_affine(spec: &ProblemSpec) -> bool {
    matches!(spec.data, crate::problems::DataSpec::Affine { .. }) && spec.mask.is_none()
}

/// Runs both solvers on every grid of the ladder for one problem.
pub fn run_problem(
    spec: &ProblemSpec,
    grids: &[usize],
    gamma_factor: f64,
    weak: &SolverConfig,
    visc: &RelaxationConfig,
) -> Result<ProblemEquivalence> {
    let mut rows = Vec::new();
    let mut exponent = String::new();
    let mut variable = false;
    for &n in grids {
        let ctx = |e: Error| e.at_grid(&spec.label, n);
        let prob = spec.build(n).map_err(ctx)?;
        exponent = prob.p.info().description;
        variable = !prob.p.is_constant();
        let h = prob.domain().h_max();
        let w = solve(&prob, weak).map_err(ctx)?;
        let v = relax(&prob, visc).map_err(ctx)?;
        let exact = spec.exact_on(prob.domain());
        let weak_tol = CROSS_WEAK_C * h;
        let visc_tol = CROSS_VISC_C * h;
        let wr = audit_supersolution(&v.u, &prob.p, TestFamily::Hats, weak_tol);
        let vr = viscosity_residual(&w.u, &prob.p, gamma_factor * h);
        let probes = vr.values.len();
        rows.push(EquivalenceRow {
            grid: n,
            h,
            sup_difference: w.u.sup_diff(&v.u),
            weak_error: exact.as_ref().map(|e| w.u.sup_diff(e)),
            visc_error: exact.as_ref().map(|e| v.u.sup_diff(e)),
            weak_residual_of_visc: wr.max_abs,
            weak_residual_tolerance: weak_tol,
            visc_residual_of_weak: vr.max_abs,
            visc_residual_tolerance: visc_tol,
            visc_probe_nodes: probes,
            cross_passed: wr.max_abs <= weak_tol && vr.max_abs <= visc_tol && probes > 0,
        });
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r.sup_difference).collect();
    let non_increasing = diffs
        .windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= EQUIVALENCE_FLOOR);
    let difference_orders = if diffs.iter().all(|&d| d > EQUIVALENCE_FLOOR) {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        observed_orders(&hs, &diffs)
    } else {
        Vec::new()
    };
    let affine_within = is_affine(spec).then(|| diffs.iter().all(|&d| d <= AFFINE_EQUIVALENCE));
    let self_convergence = (!spec.exact && rows.len() >= 2).then(|| {
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        last.sup_difference <= SELF_CONVERGENCE_FACTOR * first.sup_difference * (last.h / first.h)
    });
    let passed = non_increasing
        && rows.iter().all(|r| r.cross_passed)
        && affine_within.unwrap_or(true)
        && self_convergence.unwrap_or(true);
    Ok(ProblemEquivalence {
        label: spec.label.clone(),
        exponent,
        variable_exponent: variable,
        affine_data: is_affine(spec),
        rows,
        difference_orders,
        non_increasing,
        self_convergence,
        affine_within,
        passed,
    })
}

pub fn run_equivalence(
    study: &EquivalenceStudy,
    weak: &SolverConfig,
    visc: &RelaxationConfig,
) -> Result<EquivalenceReport> {
    let problems = study
        .problems
        .iter()
        .map(|spec| run_problem(spec, &study.grids, study.gamma_factor, weak, visc))
        .collect::<Result<Vec<_>>>()?;
    let variable_problems = problems
        .iter()
        .filter(|p| p.variable_exponent && !p.affine_data)
        .count();
    Ok(EquivalenceReport {
        passed: problems.iter().all(|p| p.passed),
        variable_problems,
        problems,
    })
}
