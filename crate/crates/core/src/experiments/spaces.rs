//! Random checks of the variable-exponent Lebesgue quantities: the
//! norm/modular sandwich, the Hölder pairing and the constant-exponent
//! reduction of the Luxemburg norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SpacesStudy;
use crate::error::Result;
use crate::exponent::ExponentField;
use crate::grid::{Domain, GridFunction};
use crate::tolerances::{FUZZ_REL, LUXEMBURG_CONST_REL};
use crate::varexp::{check_norm_modular, holder_pairing, luxemburg_norm, modular};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacesFailure {
    pub index: usize,
    pub check: String,
    pub dim: usize,
    pub exponent: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacesReport {
    pub seed: u64,
    pub functions: usize,
    pub sandwich_violations: usize,
    pub holder_violations: usize,
    /// Largest `∫|u||v| / (2‖u‖‖v‖')`.
    pub holder_worst_ratio: f64,
    pub constant_cases: usize,
    pub constant_violations: usize,
    /// Largest relative gap between the Luxemburg norm and `(∫|u|^p)^{1/p}`.
    pub constant_worst_rel: f64,
    pub failures: Vec<SpacesFailure>,
    pub passed: bool,
}

enum Kind {
    Constant,
    Affine,
    Sampled,
}

fn exponent(rng: &mut ChaCha8Rng, d: &Domain, kind: &Kind) -> Result<ExponentField> {
    match kind {
        Kind::Constant => ExponentField::constant(rng.random_range(1.1..6.0), d.dim()),
        Kind::Affine => {
            // corners of the unit box keep p within [1.1, 5.9]
            let slope: Vec<f64> = (0..d.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
            let low: f64 = slope.iter().map(|s| s.min(0.0)).sum();
            let high: f64 = slope.iter().map(|s| s.max(0.0)).sum();
            let offset = rng.random_range((1.1 - low)..(5.9 - high));
            ExponentField::affine(offset, &slope, d)
        }
        Kind::Sampled => {
            let samples = GridFunction::zeros(d).map(|_| rng.random_range(1.1..6.0));
            ExponentField::from_grid(samples)
        }
    }
}

/// Random values with a log-uniform amplitude and about a tenth of the
/// nodes set to zero.
fn function(rng: &mut ChaCha8Rng, d: &Domain) -> GridFunction {
    let amp = 10f64.powf(rng.random_range(-2.0..2.0));
    GridFunction::zeros(d).map(|_| {
        if rng.random_range(0..10) == 0 {
            0.0
        } else {
            amp * rng.random_range(-1.0..1.0)
        }
    })
}

pub fn run_spaces(study: &SpacesStudy, seed: u64) -> Result<SpacesReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(20);
    let line = Domain::new_1d(0.0, 1.0, study.grid_1d)?;
    let square = Domain::square(0.0, 1.0, study.grid_2d)?;
    let mut rep = SpacesReport {
        seed,
        functions: study.functions,
        sandwich_violations: 0,
        holder_violations: 0,
        holder_worst_ratio: 0.0,
        constant_cases: 0,
        constant_violations: 0,
        constant_worst_rel: 0.0,
        failures: Vec::new(),
        passed: false,
    };
    for i in 0..study.functions {
        let d = if i % 2 == 0 { &line } else { &square };
        let kind = match i % 3 {
            0 => Kind::Constant,
            1 => Kind::Affine,
            _ => Kind::Sampled,
        };
        let p = exponent(&mut rng, d, &kind)?;
        let (u, v) = (function(&mut rng, d), function(&mut rng, d));
        let mut fail = |check: &str, lhs: f64, rhs: f64| {
            rep.failures.push(SpacesFailure {
                index: i,
                check: check.into(),
                dim: d.dim(),
                exponent: p.info().description,
                lhs,
                rhs,
            })
        };

        let sandwich = check_norm_modular(&u, &p)?;
        if sandwich.violated {
            rep.sandwich_violations += 1;
            fail("sandwich", sandwich.norm, sandwich.upper_bound);
        }
        let (lhs, rhs) = holder_pairing(&u, &v, &p)?;
        if rhs > 0.0 {
            rep.holder_worst_ratio = rep.holder_worst_ratio.max(lhs / rhs);
        }
        if lhs > rhs * (1.0 + FUZZ_REL) {
            rep.holder_violations += 1;
            fail("holder", lhs, rhs);
        }
        if let Kind::Constant = kind {
            rep.constant_cases += 1;
            let pc = p.p_minus();
            let norm = luxemburg_norm(&u, &p)?;
            let closed = modular(&u, &p).powf(1.0 / pc);
            let rel = (norm - closed).abs() / closed.max(f64::MIN_POSITIVE);
            rep.constant_worst_rel = rep.constant_worst_rel.max(rel);
            if rel > LUXEMBURG_CONST_REL {
                rep.constant_violations += 1;
                fail("constant_exponent_norm", norm, closed);
            }
        }
    }
    rep.passed = rep.sandwich_violations == 0 && rep.holder_violations == 0 && rep.constant_violations == 0;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_passes() {
        let study = SpacesStudy {
            functions: 60,
            grid_1d: 20,
            grid_2d: 6,
        };
        let rep = run_spaces(&study, 3).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.constant_cases, 20);
        assert!(rep.holder_worst_ratio > 0.0 && rep.holder_worst_ratio <= 1.0);
    }
}
