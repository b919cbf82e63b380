//! Configurable Dirichlet problems and the built-in manufactured cases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{make_exponent, ExponentSpec};
use crate::grid::{Domain, GridFunction, Point};
use crate::weak::DirichletProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn unit(dim: usize) -> Self {
        Self {
            dim,
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    /// Grid with `n` interior points per axis.
    pub fn grid(&self, n: usize) -> Result<Domain> {
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::Config(format!(
                "domain: lower and upper need {} entries each",
                self.dim
            )));
        }
        let mut lo = [0.0; 2];
        let mut up = [0.0; 2];
        lo[..self.dim].copy_from_slice(&self.lower);
        up[..self.dim].copy_from_slice(&self.upper);
        Domain::new(self.dim, lo, up, [n, if self.dim == 2 { n } else { 0 }])
    }
}

/// Boundary data, which doubles as the exact solution when the problem is
/// flagged exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `offset + slope · x`
    Affine { offset: f64, slope: Vec<f64> },
    /// `|x − center|^power`
    RadialPower {
        #[serde(default)]
        center: [f64; 2],
        power: f64,
    },
    /// `amplitude · exp(−rate |x − center|)`
    RadialExp {
        #[serde(default)]
        center: [f64; 2],
        amplitude: f64,
        rate: f64,
    },
    /// `offset + slope · x + amplitude · sin(fπx) cos(fπy)`
    AffineTrig {
        #[serde(default)]
        offset: f64,
        slope: Vec<f64>,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// `|x_axis − center| + shift`
    Abs {
        center: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DataSpec {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            DataSpec::Affine { offset, slope } => offset + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
            DataSpec::RadialPower { center, power } => {
                (x[0] - center[0]).hypot(x[1] - center[1]).powf(*power)
            }
            DataSpec::RadialExp { center, amplitude, rate } => {
                amplitude * (-rate * (x[0] - center[0]).hypot(x[1] - center[1])).exp()
            }
            DataSpec::AffineTrig {
                offset,
                slope,
                amplitude,
                frequency,
            } => {
                let w = frequency * PI;
                offset
                    + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + amplitude * (w * x[0]).sin() * (w * x[1]).cos()
            }
            DataSpec::Abs { center, axis, shift } => (x[*axis] - center).abs() + shift,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let slope_len = match self {
            DataSpec::Affine { slope, .. } | DataSpec::AffineTrig { slope, .. } => Some(slope.len()),
            _ => None,
        };
        if let Some(len) = slope_len {
            if len != dim {
                return Err(Error::Config(format!("data: slope needs {dim} entries, got {len}")));
            }
        }
        if let DataSpec::Abs { axis, .. } = self {
            if *axis >= dim {
                return Err(Error::Config(format!("data: axis {axis} out of range for a {dim}-d domain")));
            }
        }
        Ok(())
    }
}

/// Region excluded from the unknowns; its nodes carry data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskSpec {
    /// Keeps only `inner ≤ |x − center| ≤ outer` free.
    Annulus {
        #[serde(default)]
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
}

impl MaskSpec {
    fn fixed(&self, x: Point) -> bool {
        match self {
            MaskSpec::Annulus { center, inner, outer } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                r < *inner || r > *outer
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub label: String,
    pub domain: BoxSpec,
    pub exponent: ExponentSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub mask: Option<MaskSpec>,
    /// The data solve the equation in the whole box.
    #[serde(default)]
    pub exact: bool,
}

impl ProblemSpec {
    pub fn build(&self, n: usize) -> Result<DirichletProblem> {
        let d = self.domain.grid(n)?;
        self.data.check(d.dim())?;
        let p = make_exponent(&self.exponent, &d)?;
        let mut data = GridFunction::from_fn(&d, |x| self.data.eval(x));
        if let Some(m) = &self.mask {
            if d.dim() != 2 {
                return Err(Error::Config(format!("{}: masks need a 2-d domain", self.label)));
            }
            data = data.with_mask(|x| m.fixed(x));
        }
        DirichletProblem::new(data, p, self.label.clone())
    }

    /// Exact solution sampled on the problem grid, for exact problems.
    pub fn exact_on(&self, domain: &Domain) -> Option<GridFunction> {
        self.exact.then(|| GridFunction::from_fn(domain, |x| self.data.eval(x)))
    }

    /// Affine data `0.3 + x − 0.4 y` (or `0.3 + x`) with the given exponent.
    pub fn affine(label: &str, dim: usize, exponent: ExponentSpec) -> Self {
        let slope = if dim == 1 { vec![1.0] } else { vec![1.0, -0.4] };
        Self {
            label: label.into(),
            domain: BoxSpec::unit(dim),
            exponent,
            data: DataSpec::Affine { offset: 0.3, slope },
            mask: None,
            exact: true,
        }
    }

    /// `p ≡ 4`, `u = r^{2/3}` on `0.5 ≤ r ≤ 1.5` inside `[−1.5, 1.5]²`.
    pub fn annulus() -> Self {
        Self {
            label: "annulus".into(),
            domain: BoxSpec {
                dim: 2,
                lower: vec![-1.5, -1.5],
                upper: vec![1.5, 1.5],
            },
            exponent: ExponentSpec::Constant { value: 4.0 },
            data: DataSpec::RadialPower {
                center: [0.0, 0.0],
                power: 2.0 / 3.0,
            },
            mask: Some(MaskSpec::Annulus {
                center: [0.0, 0.0],
                inner: 0.5,
                outer: 1.5,
            }),
            exact: true,
        }
    }

    /// `p = 2.5 + 0.5 sin(πx)` with data `x + 0.5y + 0.2 sin(πx) cos(πy)`.
    /// No exact solution.
    pub fn sine_variable() -> Self {
        Self {
            label: "sine-variable".into(),
            domain: BoxSpec::unit(2),
            exponent: ExponentSpec::Sine {
                base: 2.5,
                amplitude: 0.5,
                frequency: 1.0,
                axis: 0,
            },
            data: DataSpec::AffineTrig {
                offset: 0.0,
                slope: vec![1.0, 0.5],
                amplitude: 0.2,
                frequency: 1.0,
            },
            mask: None,
            exact: false,
        }
    }

    /// `p = 1 + 2/r`, `u = −2 e^{−r/2}` on `[0.5, 2]²`. In two dimensions
    /// `(p−1)u'' + u'/r = 0`, so `u` solves the normalized equation.
    pub fn radial_variable() -> Self {
        Self {
            label: "radial-variable".into(),
            domain: BoxSpec {
                dim: 2,
                lower: vec![0.5, 0.5],
                upper: vec![2.0, 2.0],
            },
            exponent: ExponentSpec::RadialInverse {
                base: 1.0,
                scale: 2.0,
                center: [0.0, 0.0],
            },
            data: DataSpec::RadialExp {
                center: [0.0, 0.0],
                amplitude: -2.0,
                rate: 0.5,
            },
            mask: None,
            exact: true,
        }
    }
}

/// `u + κ(R² − |x − c|²)`: adds `2κ(N + p − 2) > 0` to `F` wherever the
/// gradient of the sum is the gradient of `u` plus a small perturbation
/// (exactly, when `u` is affine).
pub fn concave_bump(u: &GridFunction, kappa: f64, center: Point, radius: f64) -> GridFunction {
    u.map_with_coord(|x, v| v + kappa * (radius * radius - (x[0] - center[0]).powi(2) - (x[1] - center[1]).powi(2)))
}

/// `u + κ|x − c|²`, the mirror image of [`concave_bump`].
pub fn convex_bump(u: &GridFunction, kappa: f64, center: Point) -> GridFunction {
    u.map_with_coord(|x, v| v + kappa * ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)))
}
