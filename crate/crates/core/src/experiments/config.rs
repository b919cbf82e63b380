//! Experiment configuration. TOML is the primary encoding; a `.json` file
//! is read as JSON with the same schema. Every section has defaults that
//! reproduce the reference verification run; only `seed` is required.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentSpec;
use crate::problems::{BoxSpec, DataSpec, ProblemSpec};
use crate::visc::RelaxationConfig;
use crate::weak::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub weak: SolverConfig,
    #[serde(default)]
    pub visc: RelaxationConfig,
    #[serde(default)]
    pub affine: AffineStudy,
    #[serde(default)]
    pub convergence: ConvergenceStudy,
    #[serde(default)]
    pub equivalence: EquivalenceStudy,
    #[serde(default)]
    pub infconv: InfConvStudy,
    #[serde(default)]
    pub defect: DefectStudy,
    #[serde(default)]
    pub rado: RadoStudy,
    #[serde(default)]
    pub fuzz: FuzzStudy,
    #[serde(default)]
    pub spaces: SpacesStudy,
}

/// Affine Dirichlet data under several exponents, in 1D and 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineStudy {
    pub grid_1d: usize,
    pub grid_2d: usize,
    /// Exponents written in the first coordinate only, so each applies in
    /// both dimensions.
    pub exponents: Vec<ExponentSpec>,
}

impl Default for AffineStudy {
    fn default() -> Self {
        let sine = |base, amplitude| ExponentSpec::Sine {
            base,
            amplitude,
            frequency: 1.0,
            axis: 0,
        };
        Self {
            grid_1d: 64,
            grid_2d: 64,
            exponents: vec![
                sine(1.2, 0.4),
                ExponentSpec::Kink {
                    base: 1.5,
                    slope: 1.0,
                    center: 0.5,
                    axis: 0,
                },
                ExponentSpec::Constant { value: 2.0 },
                sine(3.0, 1.0),
                ExponentSpec::Kink {
                    base: 4.0,
                    slope: 1.5,
                    center: 0.3,
                    axis: 0,
                },
            ],
        }
    }
}

/// Refinement study against an exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceStudy {
    pub problem: ProblemSpec,
    pub grids: Vec<usize>,
}

impl Default for ConvergenceStudy {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::annulus(),
            grids: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceStudy {
    pub problems: Vec<ProblemSpec>,
    pub grids: Vec<usize>,
    /// Viscosity probes skip nodes with `|Du| ≤ gamma_factor · h`.
    pub gamma_factor: f64,
}

impl Default for EquivalenceStudy {
    fn default() -> Self {
        Self {
            problems: vec![
                ProblemSpec::affine(
                    "affine-sine-exponent",
                    2,
                    ExponentSpec::Sine {
                        base: 2.5,
                        amplitude: 0.5,
                        frequency: 1.0,
                        axis: 0,
                    },
                ),
                ProblemSpec::annulus(),
                ProblemSpec::sine_variable(),
            ],
            grids: vec![16, 32, 64],
            gamma_factor: 2.0,
        }
    }
}

/// A function to regularize by inf-convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfConvBase {
    pub label: String,
    pub domain: BoxSpec,
    pub grid: usize,
    pub data: DataSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfConvStudy {
    pub bases: Vec<InfConvBase>,
    /// Decreasing.
    pub epsilons: Vec<f64>,
    pub q: f64,
}

impl Default for InfConvStudy {
    fn default() -> Self {
        let line = BoxSpec {
            dim: 1,
            lower: vec![-1.0],
            upper: vec![1.0],
        };
        let base = |label: &str, data| InfConvBase {
            label: label.into(),
            domain: line.clone(),
            grid: 399,
            data,
        };
        Self {
            bases: vec![
                base(
                    "constant",
                    DataSpec::Affine {
                        offset: 1.7,
                        slope: vec![0.0],
                    },
                ),
                base(
                    "abs",
                    DataSpec::Abs {
                        center: 0.0,
                        axis: 0,
                        shift: 0.0,
                    },
                ),
                base(
                    "sine",
                    DataSpec::AffineTrig {
                        offset: 0.0,
                        slope: vec![0.0],
                        amplitude: 1.0,
                        frequency: 1.0,
                    },
                ),
                InfConvBase {
                    label: "annulus-exact".into(),
                    domain: ProblemSpec::annulus().domain,
                    grid: 119,
                    data: ProblemSpec::annulus().data,
                },
            ],
            epsilons: vec![0.1, 0.05, 0.025],
            q: 2.0,
        }
    }
}

/// Supersolution-defect ladder of the inf-convolution of an exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectStudy {
    pub problem: ProblemSpec,
    pub grid: usize,
    pub q: f64,
    /// Decreasing.
    pub epsilons: Vec<f64>,
}

impl Default for DefectStudy {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::radial_variable(),
            grid: 119,
            q: 3.0,
            epsilons: vec![0.1, 0.04, 0.016, 0.0064],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadoStudy {
    /// Interior points of the 1D grids; odd so that `x = 1/2` is a node.
    pub grid_1d: usize,
    pub grid_2d: usize,
    /// Band half-width in cells.
    pub band_cells: f64,
}

impl Default for RadoStudy {
    fn default() -> Self {
        Self {
            grid_1d: 63,
            grid_2d: 48,
            band_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzStudy {
    /// Samples per inequality.
    pub samples: usize,
    /// Random jets per pointwise identity.
    pub jets: usize,
    /// Failing samples reproduced per inequality.
    pub keep_failures: usize,
}

impl Default for FuzzStudy {
    fn default() -> Self {
        Self {
            samples: 100_000,
            jets: 10_000,
            keep_failures: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacesStudy {
    pub functions: usize,
    pub grid_1d: usize,
    pub grid_2d: usize,
}

impl Default for SpacesStudy {
    fn default() -> Self {
        Self {
            functions: 1000,
            grid_1d: 40,
            grid_2d: 12,
        }
    }
}

fn check_grids(name: &str, grids: &[usize]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::Config(format!("{name}: grid ladder is empty")));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name}: grid ladder must increase, got {grids:?}")));
    }
    Ok(())
}

fn check_epsilons(name: &str, eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Config(format!("{name}: epsilon ladder is empty")));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "{name}: epsilon ladder must be positive and decreasing, got {eps:?}"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// The reference configuration with the given seed.
    pub fn reference(seed: u64) -> Self {
        Self {
            seed,
            output_dir: None,
            weak: SolverConfig::default(),
            visc: RelaxationConfig::default(),
            affine: AffineStudy::default(),
            convergence: ConvergenceStudy::default(),
            equivalence: EquivalenceStudy::default(),
            infconv: InfConvStudy::default(),
            defect: DefectStudy::default(),
            rado: RadoStudy::default(),
            fuzz: FuzzStudy::default(),
            spaces: SpacesStudy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weak.validate().map_err(|e| Error::Config(format!("weak: {e}")))?;
        self.visc.validate().map_err(|e| Error::Config(format!("visc: {e}")))?;
        if self.affine.exponents.is_empty() || self.affine.grid_1d == 0 || self.affine.grid_2d == 0 {
            return Err(Error::Config("affine: need exponents and positive grids".into()));
        }
        check_grids("convergence.grids", &self.convergence.grids)?;
        if !self.convergence.problem.exact {
            return Err(Error::Config("convergence.problem: needs an exact solution".into()));
        }
        check_grids("equivalence.grids", &self.equivalence.grids)?;
        if self.equivalence.problems.is_empty() {
            return Err(Error::Config("equivalence.problems is empty".into()));
        }
        if !(self.equivalence.gamma_factor > 0.0) {
            return Err(Error::Config("equivalence.gamma_factor must be positive".into()));
        }
        check_epsilons("infconv.epsilons", &self.infconv.epsilons)?;
        check_epsilons("defect.epsilons", &self.defect.epsilons)?;
        if self.infconv.bases.is_empty() {
            return Err(Error::Config("infconv.bases is empty".into()));
        }
        if !(self.infconv.q >= 2.0) || !(self.defect.q >= 2.0) {
            return Err(Error::Config("q must be at least 2".into()));
        }
        if self.rado.grid_1d % 2 == 0 {
            return Err(Error::Config(format!(
                "rado.grid_1d must be odd so that x = 1/2 is a node, got {}",
                self.rado.grid_1d
            )));
        }
        if !(self.rado.band_cells >= 1.0) {
            return Err(Error::Config("rado.band_cells must be at least 1 (band ≥ h)".into()));
        }
        if self.fuzz.samples == 0 || self.fuzz.jets == 0 {
            return Err(Error::Config("fuzz: sample counts must be positive".into()));
        }
        if self.spaces.functions == 0 || self.spaces.grid_1d == 0 || self.spaces.grid_2d == 0 {
            return Err(Error::Config("spaces: counts must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
