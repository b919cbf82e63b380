//! End-to-end use of the public API: build a problem, solve it, persist the
//! solution, audit it and regularize it.

use pxlap::infconv::inf_convolve;
use pxlap::problems::ProblemSpec;
use pxlap::tolerances::CROSS_WEAK_C;
use pxlap::weak::{discrete_weak_residual, sample_like, solve, w11_norm, SolverConfig};
use pxlap::GridFunction;

#[test]
fn weak_solution_survives_binary_round_trip_and_audits_clean() {
    let spec = ProblemSpec::sine_variable();
    let n = 24;
    let prob = spec.build(n).unwrap();
    let sol = solve(&prob, &SolverConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.bin");
    sol.u.save_binary(&path).unwrap();
    let back = GridFunction::load_binary(&path).unwrap();
    assert_eq!(back.values(), sol.u.values());
    assert_eq!(back.boundary_mask(), sol.u.boundary_mask());

    // a smooth bump vanishing on the box boundary
    let (lo, hi) = (prob.domain().lower(), prob.domain().upper());
    let phi = sample_like(&sol.u, |x| {
        (0..prob.domain().dim())
            .map(|k| ((x[k] - lo[k]) * (hi[k] - x[k])).max(0.0))
            .product()
    });
    let r = discrete_weak_residual(&back, &prob.p, &phi).unwrap() / w11_norm(&phi);
    let h = prob.domain().h_max();
    assert!(r.abs() <= CROSS_WEAK_C * h, "normalized residual {r:e}, h {h}");
}

#[test]
fn inf_convolution_of_a_solution_lies_below_and_closes_in() {
    let prob = ProblemSpec::radial_variable().build(31).unwrap();
    let u = solve(&prob, &SolverConfig::default()).unwrap().u;
    let mut gaps = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let ic = inf_convolve(&u, eps, 2.0).unwrap();
        let below = u.values().iter().zip(ic.u_eps.values()).all(|(a, b)| b <= a);
        assert!(below, "eps {eps}: u_eps exceeds u");
        gaps.push(u.sup_diff(&ic.u_eps));
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
}
