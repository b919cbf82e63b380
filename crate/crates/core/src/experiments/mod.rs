//! Experiment harness: solver studies, the equivalence study, inf-convolution
//! and defect studies, the removability audit, fuzz campaigns and the
//! composite verification run.
//!
//! Reports are plain serde structs without maps or timings, so equal inputs
//! serialize to byte-identical JSON.

pub mod config;
pub mod equivalence;
pub mod fuzz;
pub mod infconv_study;
pub mod rado;
pub mod solvers;
pub mod spaces;
pub mod verify;

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::grid::{gradient_centered, GridFunction};

pub use config::ExperimentConfig;

/// Observed orders `log(e_k/e_{k+1}) / log(h_k/h_{k+1})`.
pub fn observed_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(hw, ew)| (ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
        .collect()
}

/// Largest `|Du(x) − Du(y)| / |x − y|^α` over grid-adjacent free nodes,
/// with centered gradients. A diagnostic for gradient regularity trends
/// under refinement; never a pass/fail criterion.
pub fn gradient_holder_quotient(u: &GridFunction, alpha: f64) -> f64 {
    let d = u.domain();
    let mut worst = 0.0f64;
    for nd in u.free_nodes() {
        let Ok(g) = gradient_centered(u, nd) else { continue };
        for k in 0..d.dim() {
            let mut nb = nd;
            nb[k] += 1;
            if nb[k] >= d.shape()[k] || u.is_fixed(nb) {
                continue;
            }
            let Ok(gn) = gradient_centered(u, nb) else { continue };
            let diff = ((g[0] - gn[0]).powi(2) + (g[1] - gn[1]).powi(2)).sqrt();
            worst = worst.max(diff / d.h()[k].powf(alpha));
        }
    }
    worst
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Writes rows to a CSV file with a header taken from the row type.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_quotient_of_quadratic_is_h_to_one_minus_alpha() {
        let d = crate::grid::Domain::new_1d(0.0, 1.0, 9).unwrap();
        let u = GridFunction::from_fn(&d, |x| x[0] * x[0]);
        let h = d.h()[0];
        // centered gradient of x² is exact, so adjacent gradients differ by 2h
        assert!((gradient_holder_quotient(&u, 0.5) - 2.0 * h.sqrt()).abs() < 1e-12);
        let flat = GridFunction::from_fn(&d, |x| 3.0 * x[0]);
        assert!(gradient_holder_quotient(&flat, 0.5) < 1e-12);
    }

    #[test]
    fn orders_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        for o in observed_orders(&h, &e) {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }
}
