//! Variable-exponent Lebesgue quantities on the trapezoid measure: the
//! modular `∫|u|^{p(x)}`, the Luxemburg norm, the norm/modular sandwich and
//! the Hölder pairing.
//!
//! All integrals use the node weights of [`Domain::quadrature_weight`], so
//! the statements being checked are exact statements about a discrete
//! measure and hold without quadrature slack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Domain, GridFunction};

/// Relative tolerance of the Luxemburg bisection.
pub const NORM_RTOL: f64 = 1e-12;
/// Slack allowed when checking the norm against the modular bounds.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularReport {
    pub modular: f64,
    pub norm: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub violated: bool,
}

struct Sampled {
    abs: Vec<f64>,
    weights: Vec<f64>,
    exps: Vec<f64>,
}

impl Sampled {
    fn new(u: &GridFunction, exps: Vec<f64>) -> Result<Self> {
        let d = u.domain();
        if let Some(pos) = u.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("u at node {:?}", d.node(pos))));
        }
        Ok(Self {
            abs: u.values().iter().map(|v| v.abs()).collect(),
            weights: d.nodes().map(|nd| d.quadrature_weight(nd)).collect(),
            exps,
        })
    }

    fn modular_scaled(&self, log_lambda: f64) -> f64 {
        self.abs
            .iter()
            .zip(&self.weights)
            .zip(&self.exps)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, w), p)| w * (p * (a.ln() - log_lambda)).exp())
            .sum()
    }

    fn max_abs(&self) -> f64 {
        self.abs.iter().copied().fold(0.0, f64::max)
    }

    /// `inf{λ > 0 : ϱ(u/λ) ≤ 1}` by bisection on `ln λ`.
    fn luxemburg(&self, measure: f64) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        // ϱ(u/hi) ≤ |Ω|/(1+|Ω|) < 1 since |u/hi| ≤ 1/(1+|Ω|) < 1 and p > 1
        let mut hi = (m * (1.0 + measure)).ln();
        let mut lo = f64::EPSILON.ln();
        while self.modular_scaled(lo) <= 1.0 {
            hi = lo;
            lo -= 40.0;
        }
        while hi - lo > NORM_RTOL {
            let mid = 0.5 * (lo + hi);
            if self.modular_scaled(mid) <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi.exp()
    }
}

fn exponents(u: &GridFunction, p: &ExponentField) -> Vec<f64> {
    let d = u.domain();
    d.nodes().map(|nd| p.eval(d.coord(nd))).collect()
}

fn conjugate_exponents(u: &GridFunction, p: &ExponentField) -> Vec<f64> {
    exponents(u, p).into_iter().map(|q| q / (q - 1.0)).collect()
}

/// `∫ |u|^{p(x)} dx` on the trapezoid measure.
pub fn modular(u: &GridFunction, p: &ExponentField) -> f64 {
    let d = u.domain();
    d.nodes()
        .zip(u.values())
        .filter(|(_, v)| **v != 0.0)
        .map(|(nd, v)| d.quadrature_weight(nd) * v.abs().powf(p.eval(d.coord(nd))))
        .sum()
}

pub fn luxemburg_norm(u: &GridFunction, p: &ExponentField) -> Result<f64> {
    let s = Sampled::new(u, exponents(u, p))?;
    Ok(s.luxemburg(u.domain().measure()))
}

/// Luxemburg norm for the conjugate exponent `p' = p/(p−1)`.
pub fn conjugate_norm(u: &GridFunction, p: &ExponentField) -> Result<f64> {
    let s = Sampled::new(u, conjugate_exponents(u, p))?;
    Ok(s.luxemburg(u.domain().measure()))
}

/// Checks `min(ϱ^{1/p⁻}, ϱ^{1/p⁺}) ≤ ‖u‖ ≤ max(ϱ^{1/p⁻}, ϱ^{1/p⁺})` with
/// `p±` the extremes of `p` over the nodes (the support of the measure).
pub fn check_norm_modular(u: &GridFunction, p: &ExponentField) -> Result<ModularReport> {
    let exps = exponents(u, p);
    let s = Sampled::new(u, exps)?;
    let rho = s.modular_scaled(0.0);
    if rho == 0.0 {
        return Ok(ModularReport {
            modular: 0.0,
            norm: 0.0,
            lower_bound: 0.0,
            upper_bound: 0.0,
            p_minus: 0.0,
            p_plus: 0.0,
            violated: false,
        });
    }
    let p_minus = s.exps.iter().copied().fold(f64::INFINITY, f64::min);
    let p_plus = s.exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = s.luxemburg(u.domain().measure());
    let (a, b) = (rho.powf(1.0 / p_minus), rho.powf(1.0 / p_plus));
    let (lower, upper) = (a.min(b), a.max(b));
    let slack = SANDWICH_TOL * upper.max(1.0);
    Ok(ModularReport {
        modular: rho,
        norm,
        lower_bound: lower,
        upper_bound: upper,
        p_minus,
        p_plus,
        violated: norm < lower - slack || norm > upper + slack,
    })
}

/// `(∫|u||v|, 2‖u‖_{p(·)}‖v‖_{p'(·)})`.
pub fn holder_pairing(u: &GridFunction, v: &GridFunction, p: &ExponentField) -> Result<(f64, f64)> {
    if u.domain() != v.domain() {
        return Err(Error::InvalidArgument("u and v live on different grids".into()));
    }
    let d: &Domain = u.domain();
    let lhs = d
        .nodes()
        .zip(u.values().iter().zip(v.values()))
        .map(|(nd, (a, b))| d.quadrature_weight(nd) * (a * b).abs())
        .sum();
    let rhs = 2.0 * luxemburg_norm(u, p)? * conjugate_norm(v, p)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Domain {
        Domain::new_1d(0.0, 1.0, n).unwrap()
    }

    fn affine_p(d: &Domain) -> ExponentField {
        ExponentField::affine(2.0, &[1.0], d).unwrap()
    }

    /// Root of `(r⁴ − r²)/ln r = 1`, i.e. `∫₀² r^{2+x} dx = 1`.
    fn unit_modular_root() -> f64 {
        let g = |r: f64| (r.powi(4) - r * r) / r.ln() - 1.0;
        let (mut lo, mut hi) = (0.1f64, 0.99f64);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn modular_trivial_cases() {
        let d = line(99);
        let p2 = ExponentField::constant(2.0, 1).unwrap();
        assert!((modular(&GridFunction::from_fn(&d, |_| 1.0), &p2) - 1.0).abs() < 1e-12);
        assert_eq!(modular(&GridFunction::zeros(&d), &p2), 0.0);
    }

    #[test]
    fn modular_of_constant_with_affine_exponent() {
        let d = line(999);
        let u = GridFunction::from_fn(&d, |_| 3.0);
        let exact = 18.0 / 3.0f64.ln();
        let got = modular(&u, &affine_p(&d));
        assert!((got - exact).abs() / exact < 1e-5, "{got} vs {exact}");
    }

    #[test]
    fn luxemburg_trivial_cases() {
        let d = line(99);
        let p3 = ExponentField::constant(3.0, 1).unwrap();
        let one = GridFunction::from_fn(&d, |_| 1.0);
        assert!((luxemburg_norm(&one, &p3).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(luxemburg_norm(&GridFunction::zeros(&d), &p3).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_against_scalar_root() {
        // on [0,1] the constant 3 has norm 3 (u/3 ≡ 1 has unit modular)
        let d = line(999);
        let u = GridFunction::from_fn(&d, |_| 3.0);
        assert!((luxemburg_norm(&u, &affine_p(&d)).unwrap() - 3.0).abs() < 3e-10);
        // on [0,2] the root is non-trivial
        let d = Domain::new_1d(0.0, 2.0, 3999).unwrap();
        let u = GridFunction::from_fn(&d, |_| 3.0);
        let lambda = 3.0 / unit_modular_root();
        let got = luxemburg_norm(&u, &affine_p(&d)).unwrap();
        assert!((got - lambda).abs() / lambda < 1e-6, "{got} vs {lambda}");
    }

    #[test]
    fn constant_exponent_norm_is_power_of_modular() {
        let d = Domain::square(0.0, 1.0, 31).unwrap();
        let u = GridFunction::from_fn(&d, |x| (3.0 * x[0]).sin() + x[1]);
        for pv in [1.3, 2.0, 3.7] {
            let p = ExponentField::constant(pv, 2).unwrap();
            let expect = modular(&u, &p).powf(1.0 / pv);
            let got = luxemburg_norm(&u, &p).unwrap();
            assert!((got - expect).abs() / expect < 1e-10);
            let rep = check_norm_modular(&u, &p).unwrap();
            assert!((rep.lower_bound - rep.upper_bound).abs() < 1e-15);
            assert!(!rep.violated);
        }
    }

    #[test]
    fn sandwich_examples() {
        let d = line(999);
        let p = affine_p(&d);
        let rep = check_norm_modular(&GridFunction::from_fn(&d, |_| 1.0), &p).unwrap();
        assert!((rep.modular - 1.0).abs() < 1e-12);
        assert!((rep.lower_bound - 1.0).abs() < 1e-12 && (rep.upper_bound - 1.0).abs() < 1e-12);
        assert!((rep.norm - 1.0).abs() < 1e-10);
        let rep = check_norm_modular(&GridFunction::from_fn(&d, |_| 3.0), &p).unwrap();
        assert!((rep.lower_bound - rep.modular.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((rep.upper_bound - rep.modular.powf(0.5)).abs() < 1e-12);
        assert!(rep.lower_bound <= rep.norm && rep.norm <= rep.upper_bound);
        assert!(!rep.violated);
    }

    #[test]
    fn zero_modular_is_degenerate() {
        let d = line(9);
        let rep = check_norm_modular(&GridFunction::zeros(&d), &affine_p(&d)).unwrap();
        assert_eq!(rep.norm, 0.0);
        assert!(!rep.violated);
    }

    #[test]
    fn holder_examples() {
        let d = line(99);
        let p2 = ExponentField::constant(2.0, 1).unwrap();
        let one = GridFunction::from_fn(&d, |_| 1.0);
        let (l, r) = holder_pairing(&one, &one, &p2).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-9);
        let (l, r) = holder_pairing(&GridFunction::zeros(&d), &one, &p2).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let u = GridFunction::from_fn(&d, |x| (5.0 * x[0]).sin());
        let v = GridFunction::from_fn(&d, |x| 1.0 + x[0] * x[0]);
        let (l, r) = holder_pairing(&u, &v, &affine_p(&d)).unwrap();
        assert!(l <= r);
    }

    #[test]
    fn non_finite_values_rejected() {
        let d = line(5);
        let mut u = GridFunction::zeros(&d);
        u.values_mut()[2] = f64::NAN;
        assert!(matches!(
            luxemburg_norm(&u, &affine_p(&d)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn tiny_functions_have_tiny_norms() {
        let d = line(9);
        let u = GridFunction::from_fn(&d, |_| 1e-30);
        let p = ExponentField::constant(2.0, 1).unwrap();
        let n = luxemburg_norm(&u, &p).unwrap();
        assert!((n - 1e-30).abs() / 1e-30 < 1e-10);
    }

    #[test]
    fn random_functions_satisfy_sandwich_and_holder() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Domain::square(0.0, 1.0, 11).unwrap();
        for _ in 0..200 {
            let a: f64 = rng.random_range(1.1..3.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let p = ExponentField::affine(a + 0.5, &[b.abs() * 0.5, b * 0.5], &d).unwrap();
            let scale: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
            let vals = (0..d.len()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let mask = d.nodes().map(|nd| d.is_box_boundary(nd)).collect();
            let u = GridFunction::new(d.clone(), vals, mask).unwrap();
            let rep = check_norm_modular(&u, &p).unwrap();
            assert!(!rep.violated, "{rep:?}");
            let v = u.map(|x| x * x - 0.3);
            let (l, r) = holder_pairing(&u, &v, &p).unwrap();
            assert!(l <= r * (1.0 + 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn norm_is_homogeneous(c in -50.0f64..50.0, amp in 0.1f64..10.0, slope in -1.0f64..1.0) {
            proptest::prop_assume!(c.abs() > 1e-3);
            let d = line(31);
            let p = ExponentField::affine(2.5, &[slope], &d).unwrap();
            let u = GridFunction::from_fn(&d, |x| amp * (4.0 * x[0]).cos());
            let n1 = luxemburg_norm(&u, &p).unwrap();
            let n2 = luxemburg_norm(&u.map(|v| c * v), &p).unwrap();
            proptest::prop_assert!((n2 - c.abs() * n1).abs() <= 1e-9 * c.abs() * n1);
        }

        #[test]
        fn normalized_function_lies_in_unit_ball(amp in 0.01f64..100.0, slope in -1.0f64..1.0) {
            let d = line(31);
            let p = ExponentField::affine(2.0, &[slope], &d).unwrap();
            let u = GridFunction::from_fn(&d, |x| amp * (x[0] - 0.3));
            let n = luxemburg_norm(&u, &p).unwrap();
            proptest::prop_assert!(modular(&u.map(|v| v / n), &p) <= 1.0 + 1e-9);
        }
    }
}
