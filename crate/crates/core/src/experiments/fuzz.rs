//! Seeded fuzz campaigns over the pointwise inequalities and identities.
//!
//! Each check draws from its own ChaCha8 stream derived from the campaign
//! seed, so adding a check never perturbs the samples of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::FuzzStudy;
use crate::grid::Jet;
use crate::operators::{
    a_matrix, continuity_gap, continuity_reference_bound, log_inequalities, monotonicity_gap,
    normalized_pxlap, strong_nondivergence_identity, trace_form_identity, OperatorSample,
};
use crate::tolerances::{FUZZ_REL, IDENTITY_REL, TRACE_FORM_REL};

/// A violating sample, stored with full-precision inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSample {
    pub index: usize,
    /// Vectors `a`, `b`; for log checks `a = [a]`, `b = [s]`; for jets
    /// `a = η` and `b` the row-major Hessian.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Violation divided by the check's scale.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzCheck {
    pub name: String,
    pub samples: usize,
    pub tolerance: f64,
    pub violations: usize,
    /// Largest scaled violation; negative when every sample holds strictly.
    pub worst_excess: f64,
    pub failures: Vec<FuzzSample>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub checks: Vec<FuzzCheck>,
    /// Reference bounds reported alongside, not part of the verdict.
    pub diagnostics: Vec<FuzzCheck>,
    pub passed: bool,
}

struct Tally {
    check: FuzzCheck,
    keep: usize,
}

impl Tally {
    fn new(name: &str, tolerance: f64, keep: usize) -> Self {
        Self {
            check: FuzzCheck {
                name: name.into(),
                samples: 0,
                tolerance,
                violations: 0,
                worst_excess: f64::NEG_INFINITY,
                failures: Vec::new(),
                passed: true,
            },
            keep,
        }
    }

    /// Records `lhs ≤ rhs` with the violation measured against `scale`.
    fn record(&mut self, a: &[f64], b: &[f64], p: f64, lhs: f64, rhs: f64, scale: f64) {
        let c = &mut self.check;
        let excess = (lhs - rhs) / scale;
        let index = c.samples;
        c.samples += 1;
        c.worst_excess = c.worst_excess.max(excess);
        if excess > c.tolerance || !excess.is_finite() {
            c.violations += 1;
            if c.failures.len() < self.keep {
                c.failures.push(FuzzSample {
                    index,
                    a: a.to_vec(),
                    b: b.to_vec(),
                    p,
                    lhs,
                    rhs,
                    excess,
                });
            }
        }
    }

    /// Records the two-sided `|lhs − rhs| ≤ tol · scale`.
    fn record_eq(&mut self, a: &[f64], b: &[f64], p: f64, lhs: f64, rhs: f64, scale: f64) {
        let c = &mut self.check;
        let excess = (lhs - rhs).abs() / scale;
        let index = c.samples;
        c.samples += 1;
        c.worst_excess = c.worst_excess.max(excess);
        if excess > c.tolerance || !excess.is_finite() {
            c.violations += 1;
            if c.failures.len() < self.keep {
                c.failures.push(FuzzSample {
                    index,
                    a: a.to_vec(),
                    b: b.to_vec(),
                    p,
                    lhs,
                    rhs,
                    excess,
                });
            }
        }
    }

    fn finish(mut self) -> FuzzCheck {
        self.check.passed = self.check.violations == 0;
        self.check
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Log-uniform magnitude in `[10^lo, 10^hi]`.
fn magnitude(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

/// A vector of dimension 1 or 2 with a log-uniform length and uniform
/// direction.
fn vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let r = magnitude(rng, -3.0, 2.0);
    if dim == 1 {
        vec![if rng.random_bool(0.5) { r } else { -r }]
    } else {
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        vec![r * t.cos(), r * t.sin()]
    }
}

fn pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let dim = if rng.random_bool(0.5) { 1 } else { 2 };
    let a = vector(rng, dim);
    // every tenth pair sits close to the diagonal
    let b = if rng.random_range(0..10) == 0 {
        let d = vector(rng, dim);
        a.iter().zip(&d).map(|(x, y)| x + 1e-3 * y).collect()
    } else {
        vector(rng, dim)
    };
    (a, b)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn monotonicity(seed: u64, id: u64, n: usize, p_range: (f64, f64), keep: usize, name: &str) -> FuzzCheck {
    let mut rng = stream(seed, id);
    let mut t = Tally::new(name, FUZZ_REL, keep);
    for _ in 0..n {
        let (a, b) = pair(&mut rng);
        let p = rng.random_range(p_range.0..p_range.1);
        let (gap, lower) = monotonicity_gap(&a, &b, p);
        let scale = (norm(&a) + norm(&b)).powf(p).max(1.0);
        t.record(&a, &b, p, lower, gap, scale);
    }
    t.finish()
}

fn continuity(seed: u64, id: u64, n: usize, p_range: (f64, f64), keep: usize) -> (FuzzCheck, Option<FuzzCheck>) {
    let name = if p_range.0 < 2.0 { "continuity_p_below_2" } else { "continuity_p_at_least_2" };
    let mut rng = stream(seed, id);
    let mut t = Tally::new(name, FUZZ_REL, keep);
    let mut reference = (p_range.0 >= 2.0).then(|| Tally::new("continuity_mean_value_reference", FUZZ_REL, keep));
    for _ in 0..n {
        let (a, b) = pair(&mut rng);
        let p = rng.random_range(p_range.0..p_range.1);
        let (lhs, upper) = continuity_gap(&a, &b, p);
        let scale = (norm(&a) + norm(&b)).powf(p - 1.0).max(1.0);
        t.record(&a, &b, p, lhs, upper, scale);
        if let Some(r) = reference.as_mut() {
            r.record(&a, &b, p, lhs, continuity_reference_bound(&a, &b, p), scale);
        }
    }
    (t.finish(), reference.map(Tally::finish))
}

fn logs(seed: u64, id: u64, n: usize, keep: usize) -> Vec<FuzzCheck> {
    let mut rng = stream(seed, id);
    let mut dim = Tally::new("log_dimension", FUZZ_REL, keep);
    let mut half = Tally::new("log_half", FUZZ_REL, keep);
    for _ in 0..n {
        let a = magnitude(&mut rng, -8.0, 8.0);
        let s = rng.random_range(0.01..4.0);
        let nd = rng.random_range(1..=2u32);
        let c = log_inequalities(a, s, nd);
        dim.record(&[a], &[s], nd as f64, c.lhs_dim, c.rhs_dim, c.rhs_dim.max(1.0));
        half.record(&[a], &[s], nd as f64, c.lhs_half, c.rhs_half, c.rhs_half.max(1.0));
    }
    vec![dim.finish(), half.finish()]
}

fn psd(seed: u64, id: u64, n: usize, keep: usize) -> FuzzCheck {
    let mut rng = stream(seed, id);
    let mut t = Tally::new("a_matrix_psd", FUZZ_REL, keep);
    for _ in 0..n {
        let dim = rng.random_range(1..=2);
        let eta = vector(&mut rng, dim);
        let p = rng.random_range(1.01..8.0);
        let e2 = eta.iter().map(|x| x * x).sum::<f64>();
        let m = a_matrix(&eta, p).min_eigenvalue();
        t.record(&eta, &[], p, -m, 0.0, e2.max(f64::MIN_POSITIVE));
    }
    t.finish()
}

fn random_jet(rng: &mut ChaCha8Rng) -> (Jet, Vec<f64>) {
    let dim = rng.random_range(1..=2);
    let eta = vector(rng, dim);
    let mut hess = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-10.0..10.0);
            hess[i * dim + j] = v;
            hess[j * dim + i] = v;
        }
    }
    (Jet::new(&eta, &hess).expect("symmetric by construction"), hess)
}

fn identities(seed: u64, id: u64, n: usize, keep: usize) -> Vec<FuzzCheck> {
    let mut rng = stream(seed, id);
    let mut strong = Tally::new("strong_normalized_identity", IDENTITY_REL, keep);
    let mut trace = Tally::new("trace_form_assembly", TRACE_FORM_REL, keep);
    let mut reform = Tally::new("trace_form_reformulation", IDENTITY_REL, keep);
    for _ in 0..n {
        let (jet, hess) = random_jet(&mut rng);
        let p = rng.random_range(1.05..6.0);
        let dp: Vec<f64> = (0..jet.dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = OperatorSample::new(jet, p).with_dp(&dp);
        let eta = jet.eta().to_vec();
        let (lhs, rhs, scale) = strong_nondivergence_identity(&s).expect("η ≠ 0");
        strong.record_eq(&eta, &hess, p, lhs, rhs, scale);

        let (tr, expanded) = trace_form_identity(&s);
        let e2 = jet.eta_norm_sq();
        let mag = e2 * jet.trace().abs() + (p - 2.0).abs() * jet.quad_form(jet.eta()).abs();
        trace.record_eq(&eta, &hess, p, tr, expanded, mag.max(f64::MIN_POSITIVE));
        let f = normalized_pxlap(&s).expect("η ≠ 0");
        reform.record_eq(&eta, &hess, p, expanded, -e2 * f, mag.max(f64::MIN_POSITIVE));
    }
    vec![strong.finish(), trace.finish(), reform.finish()]
}

/// Degenerate pairs `a = b` must give both gaps exactly zero.
fn degenerate(seed: u64, id: u64, n: usize, keep: usize) -> FuzzCheck {
    let mut rng = stream(seed, id);
    let mut t = Tally::new("degenerate_equal_vectors", 0.0, keep);
    for _ in 0..n {
        let dim = rng.random_range(1..=2);
        let a = vector(&mut rng, dim);
        let p = rng.random_range(1.05..6.0);
        let (gap, lower) = monotonicity_gap(&a, &a, p);
        let (lhs, upper) = continuity_gap(&a, &a, p);
        let worst = gap.abs().max(lower.abs()).max(lhs.abs()).max(upper.abs());
        t.record(&a, &a, p, worst, 0.0, 1.0);
    }
    t.finish()
}

/// At `p = 2` both inequalities are equalities with `|a − b|²` and `|a − b|`.
fn p2_slice(seed: u64, id: u64, n: usize, keep: usize) -> FuzzCheck {
    let mut rng = stream(seed, id);
    let mut t = Tally::new("p2_equality", FUZZ_REL, keep);
    for _ in 0..n {
        let (a, b) = pair(&mut rng);
        let (gap, lower) = monotonicity_gap(&a, &b, 2.0);
        let (lhs, upper) = continuity_gap(&a, &b, 2.0);
        let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        t.record_eq(&a, &b, 2.0, gap, lower, d.max(f64::MIN_POSITIVE));
        t.record_eq(&a, &b, 2.0, lhs, upper, d.sqrt().max(f64::MIN_POSITIVE));
    }
    t.finish()
}

pub fn run_fuzz(study: &FuzzStudy, seed: u64) -> FuzzReport {
    let (n, keep) = (study.samples, study.keep_failures);
    let mut checks = vec![
        monotonicity(seed, 1, n, (1.01, 2.0), keep, "monotonicity_p_below_2"),
        monotonicity(seed, 2, n, (2.0, 8.0), keep, "monotonicity_p_at_least_2"),
    ];
    let mut diagnostics = Vec::new();
    let (low, _) = continuity(seed, 3, n, (1.01, 2.0), keep);
    checks.push(low);
    let (high, reference) = continuity(seed, 4, n, (2.0, 8.0), keep);
    checks.push(high);
    diagnostics.extend(reference);
    checks.extend(logs(seed, 5, n, keep));
    checks.push(psd(seed, 6, n, keep));
    checks.extend(identities(seed, 7, study.jets, keep));
    checks.push(degenerate(seed, 8, (n / 100).max(1), keep));
    checks.push(p2_slice(seed, 9, (n / 100).max(1), keep));
    FuzzReport {
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FuzzStudy {
        FuzzStudy {
            samples: 2000,
            jets: 500,
            keep_failures: 3,
        }
    }

    fn check<'a>(rep: &'a FuzzReport, name: &str) -> &'a FuzzCheck {
        rep.checks
            .iter()
            .chain(&rep.diagnostics)
            .find(|c| c.name == name)
            .unwrap()
    }

    #[test]
    fn true_inequalities_hold() {
        let rep = run_fuzz(&small(), 0);
        for name in [
            "monotonicity_p_below_2",
            "monotonicity_p_at_least_2",
            "continuity_p_below_2",
            "continuity_mean_value_reference",
            "log_dimension",
            "log_half",
            "a_matrix_psd",
            "strong_normalized_identity",
            "trace_form_assembly",
            "trace_form_reformulation",
            "degenerate_equal_vectors",
            "p2_equality",
        ] {
            let c = check(&rep, name);
            assert!(c.passed, "{c:?}");
            assert!(c.samples > 0);
        }
    }

    #[test]
    fn printed_high_exponent_continuity_fails_with_kept_samples() {
        let rep = run_fuzz(&small(), 0);
        let c = check(&rep, "continuity_p_at_least_2");
        assert!(c.violations > 0 && !rep.passed);
        assert_eq!(c.failures.len(), 3);
        let f = &c.failures[0];
        let (lhs, upper) = continuity_gap(&f.a, &f.b, f.p);
        assert_eq!((lhs, upper), (f.lhs, f.rhs));
    }

    #[test]
    fn campaign_is_seed_deterministic() {
        assert_eq!(run_fuzz(&small(), 7), run_fuzz(&small(), 7));
        assert_ne!(run_fuzz(&small(), 7), run_fuzz(&small(), 8));
    }
}
