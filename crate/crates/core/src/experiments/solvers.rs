//! Affine exactness and refinement studies for both solvers.

use serde::{Deserialize, Serialize};

use super::config::{AffineStudy, ConvergenceStudy};
use super::{gradient_holder_quotient, observed_orders};
use crate::error::Result;
use crate::problems::ProblemSpec;
use crate::tolerances::{AFFINE_VISC, AFFINE_WEAK, ANNULUS_VISC_C, ANNULUS_WEAK_C, MIN_ORDER};
use crate::visc::{relax, RelaxationConfig};
use crate::weak::{solve, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineRow {
    pub exponent: String,
    pub dim: usize,
    pub grid: usize,
    pub p_minus: f64,
    pub weak_error: f64,
    pub visc_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineReport {
    pub rows: Vec<AffineRow>,
    pub weak_tolerance: f64,
    pub visc_tolerance: f64,
    pub passed: bool,
}

/// Solves affine Dirichlet problems with both solvers and records the
/// sup-errors.
pub fn run_affine(study: &AffineStudy, weak: &SolverConfig, visc: &RelaxationConfig) -> Result<AffineReport> {
    let mut rows = Vec::new();
    for exponent in &study.exponents {
        for (dim, grid) in [(1, study.grid_1d), (2, study.grid_2d)] {
            let spec = ProblemSpec::affine("affine", dim, exponent.clone());
            let prob = spec.build(grid).map_err(|e| e.at_grid(&spec.label, grid))?;
            let exact = spec.exact_on(prob.domain()).expect("affine problems are exact");
            let w = solve(&prob, weak).map_err(|e| e.at_grid(&spec.label, grid))?;
            let v = relax(&prob, visc).map_err(|e| e.at_grid(&spec.label, grid))?;
            let (weak_error, visc_error) = (w.u.sup_diff(&exact), v.u.sup_diff(&exact));
            rows.push(AffineRow {
                exponent: prob.p.info().description,
                dim,
                grid,
                p_minus: prob.p.p_minus(),
                weak_error,
                visc_error,
                passed: weak_error <= AFFINE_WEAK && visc_error <= AFFINE_VISC,
            });
        }
    }
    Ok(AffineReport {
        passed: rows.iter().all(|r| r.passed),
        rows,
        weak_tolerance: AFFINE_WEAK,
        visc_tolerance: AFFINE_VISC,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub grid: usize,
    pub h: f64,
    pub weak_error: f64,
    pub visc_error: f64,
    pub weak_tolerance: f64,
    pub visc_tolerance: f64,
    pub picard_iterations: usize,
    pub relaxation_steps: usize,
    /// Diagnostic: gradient Hölder quotient of the weak solution, exponent ½.
    pub gradient_holder_quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
    pub weak_orders: Vec<f64>,
    pub visc_orders: Vec<f64>,
    pub min_order: f64,
    pub passed: bool,
}

const HOLDER_EXPONENT: f64 = 0.5;

/// Refinement study against the exact solution of an exact problem.
pub fn run_convergence(
    study: &ConvergenceStudy,
    weak: &SolverConfig,
    visc: &RelaxationConfig,
) -> Result<ConvergenceReport> {
    let spec = &study.problem;
    let mut rows = Vec::new();
    for &n in &study.grids {
        let prob = spec.build(n).map_err(|e| e.at_grid(&spec.label, n))?;
        let exact = spec
            .exact_on(prob.domain())
            .ok_or_else(|| crate::Error::Config(format!("{} has no exact solution", spec.label)))?;
        let h = prob.domain().h_max();
        let w = solve(&prob, weak).map_err(|e| e.at_grid(&spec.label, n))?;
        let v = relax(&prob, visc).map_err(|e| e.at_grid(&spec.label, n))?;
        rows.push(ConvergenceRow {
            grid: n,
            h,
            weak_error: w.u.sup_diff(&exact),
            visc_error: v.u.sup_diff(&exact),
            weak_tolerance: ANNULUS_WEAK_C * h,
            visc_tolerance: ANNULUS_VISC_C * h,
            picard_iterations: w.history.len(),
            relaxation_steps: v.steps,
            gradient_holder_quotient: gradient_holder_quotient(&w.u, HOLDER_EXPONENT),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let weak_orders = observed_orders(&hs, &rows.iter().map(|r| r.weak_error).collect::<Vec<_>>());
    let visc_orders = observed_orders(&hs, &rows.iter().map(|r| r.visc_error).collect::<Vec<_>>());
    let within = rows
        .iter()
        .all(|r| r.weak_error <= r.weak_tolerance && r.visc_error <= r.visc_tolerance);
    let orders_ok = weak_orders.iter().chain(&visc_orders).all(|&o| o >= MIN_ORDER);
    Ok(ConvergenceReport {
        label: spec.label.clone(),
        rows,
        weak_orders,
        visc_orders,
        min_order: MIN_ORDER,
        passed: within && orders_ok,
    })
}
