//! The composite verification run: every study of the configuration, one
//! verdict per acceptance criterion, and plot-ready tables on disk.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::equivalence::{run_equivalence, EquivalenceReport};
use super::fuzz::{run_fuzz, FuzzReport};
use super::infconv_study::{run_defect_study, run_infconv_study, DefectReport, InfConvReport};
use super::rado::{run_rado_study, RadoStudyReport};
use super::solvers::{run_affine, run_convergence, AffineReport, ConvergenceReport};
use super::spaces::{run_spaces, SpacesReport};
use super::{write_csv, write_json};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub affine: AffineReport,
    pub convergence: ConvergenceReport,
    pub equivalence: EquivalenceReport,
    pub infconv: InfConvReport,
    pub defect: DefectReport,
    pub fuzz: FuzzReport,
    pub spaces: SpacesReport,
    pub rado: RadoStudyReport,
    pub passed: bool,
}

fn worst<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    it.copied().fold(0.0, f64::max)
}

fn criterion(id: u32, name: &str, passed: bool, summary: String) -> Criterion {
    Criterion {
        id,
        name: name.into(),
        passed,
        summary,
    }
}

/// Runs every study. Solver failures propagate as errors; tolerance
/// failures show up as failed criteria.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    log::info!("affine exactness");
    let affine = run_affine(&cfg.affine, &cfg.weak, &cfg.visc)?;
    log::info!("manufactured convergence");
    let convergence = run_convergence(&cfg.convergence, &cfg.weak, &cfg.visc)?;
    log::info!("equivalence ladder");
    let equivalence = run_equivalence(&cfg.equivalence, &cfg.weak, &cfg.visc)?;
    log::info!("inf-convolution properties");
    let infconv = run_infconv_study(&cfg.infconv)?;
    log::info!("supersolution defect");
    let defect = run_defect_study(&cfg.defect)?;
    log::info!("inequality fuzz");
    let fuzz = run_fuzz(&cfg.fuzz, cfg.seed);
    log::info!("variable-exponent spaces");
    let spaces = run_spaces(&cfg.spaces, cfg.seed)?;
    log::info!("removability audit");
    let rado = run_rado_study(&cfg.rado, &cfg.weak)?;

    let failing: Vec<&str> = fuzz
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    let criteria = vec![
        criterion(
            1,
            "affine exactness",
            affine.passed,
            format!(
                "{} cases; worst weak {:.2e}, worst relaxation {:.2e}",
                affine.rows.len(),
                worst(affine.rows.iter().map(|r| &r.weak_error)),
                worst(affine.rows.iter().map(|r| &r.visc_error)),
            ),
        ),
        criterion(
            2,
            "manufactured convergence",
            convergence.passed,
            format!(
                "{}: weak orders {:?}, relaxation orders {:?}",
                convergence.label, convergence.weak_orders, convergence.visc_orders
            ),
        ),
        criterion(
            3,
            "weak/viscosity equivalence",
            equivalence.passed && equivalence.problems.len() >= 3 && equivalence.variable_problems >= 1,
            format!(
                "{} problems ({} variable-exponent); passing: {:?}",
                equivalence.problems.len(),
                equivalence.variable_problems,
                equivalence.problems.iter().map(|p| (p.label.as_str(), p.passed)).collect::<Vec<_>>()
            ),
        ),
        criterion(
            4,
            "inf-convolution properties",
            infconv.passed,
            format!(
                "{} base/epsilon pairs, {} failing",
                infconv.rows.len(),
                infconv.rows.iter().filter(|r| !r.passed).count()
            ),
        ),
        criterion(
            5,
            "supersolution defect decay",
            defect.passed,
            format!(
                "{}: defects {:?}, final bound {:.2e}",
                defect.label,
                defect.rows.iter().map(|r| r.defect).collect::<Vec<_>>(),
                defect.final_bound
            ),
        ),
        criterion(
            6,
            "inequality fuzz",
            fuzz.passed,
            if failing.is_empty() {
                format!("{} checks, no violations", fuzz.checks.len())
            } else {
                format!("violations in {failing:?}")
            },
        ),
        criterion(
            7,
            "variable-exponent spaces",
            spaces.passed,
            format!(
                "{} functions; sandwich {}, Hölder {}, constant-norm {} violations; worst constant rel {:.1e}",
                spaces.functions,
                spaces.sandwich_violations,
                spaces.holder_violations,
                spaces.constant_violations,
                spaces.constant_worst_rel
            ),
        ),
        criterion(
            8,
            "removability audit",
            rado.passed,
            format!(
                "ratios {:?}",
                rado.cases.iter().map(|c| (c.label.as_str(), c.report.ratio)).collect::<Vec<_>>()
            ),
        ),
    ];
    Ok(VerifyReport {
        seed: cfg.seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
        affine,
        convergence,
        equivalence,
        infconv,
        defect,
        fuzz,
        spaces,
        rado,
    })
}

#[derive(Debug, Serialize)]
struct EquivalenceCsvRow<'a> {
    problem: &'a str,
    grid: usize,
    h: f64,
    sup_difference: f64,
    weak_residual_of_visc: f64,
    visc_residual_of_weak: f64,
    visc_probe_nodes: usize,
    cross_passed: bool,
}

#[derive(Debug, Serialize)]
struct FuzzCsvRow<'a> {
    check: &'a str,
    samples: usize,
    violations: usize,
    worst_excess: f64,
}

/// Writes `verify.json` and one CSV table per study into `dir`.
pub fn write_verify_outputs(report: &VerifyReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_json(dir.join("verify.json"), report)?;
    write_csv(dir.join("affine.csv"), &report.affine.rows)?;
    write_csv(dir.join("convergence.csv"), &report.convergence.rows)?;
    let eq: Vec<EquivalenceCsvRow> = report
        .equivalence
        .problems
        .iter()
        .flat_map(|p| {
            p.rows.iter().map(|r| EquivalenceCsvRow {
                problem: &p.label,
                grid: r.grid,
                h: r.h,
                sup_difference: r.sup_difference,
                weak_residual_of_visc: r.weak_residual_of_visc,
                visc_residual_of_weak: r.visc_residual_of_weak,
                visc_probe_nodes: r.visc_probe_nodes,
                cross_passed: r.cross_passed,
            })
        })
        .collect();
    write_csv(dir.join("equivalence.csv"), &eq)?;
    write_csv(dir.join("infconv.csv"), &report.infconv.rows)?;
    write_csv(dir.join("defect.csv"), &report.defect.rows)?;
    let fz: Vec<FuzzCsvRow> = report
        .fuzz
        .checks
        .iter()
        .chain(&report.fuzz.diagnostics)
        .map(|c| FuzzCsvRow {
            check: &c.name,
            samples: c.samples,
            violations: c.violations,
            worst_excess: c.worst_excess,
        })
        .collect();
    write_csv(dir.join("fuzz.csv"), &fz)?;
    Ok(())
}
