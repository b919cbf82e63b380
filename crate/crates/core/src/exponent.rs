//! The variable exponent `p(x)`: evaluation, gradient, certified bounds
//! `p⁻ ≤ p ≤ p⁺`, a Lipschitz bound, and mollification.
//!
//! Constant and affine fields carry analytic bounds. Closure fields get their
//! bounds from a dense node scan widened by `lip · h_scan · √N / 2`, and their
//! Lipschitz constant from the largest scanned gradient norm times 1.1.
//! Grid-sampled fields interpolate multilinearly; bounds are the sampled
//! extremes (exact for multilinear interpolation) and `lip` is the largest
//! edge slope times √N.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Safety factor applied to scanned Lipschitz constants.
pub const LIP_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentKind {
    Constant,
    Affine,
    SmoothClosure,
    GridSampled,
    Mollified,
}

#[derive(Clone)]
enum Repr {
    Constant(f64),
    Affine { offset: f64, slope: [f64; 2] },
    Closure { f: ScalarFn, grad: Option<VectorFn> },
    Grid(GridFunction),
}

/// Serializable summary of a field for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentInfo {
    pub kind: ExponentKind,
    pub description: String,
    pub p_minus: f64,
    pub p_plus: f64,
    pub lip: f64,
    pub lip_method: String,
}

#[derive(Clone)]
pub struct ExponentField {
    repr: Repr,
    kind: ExponentKind,
    dim: usize,
    p_minus: f64,
    p_plus: f64,
    lip: f64,
    description: String,
    lip_method: String,
}

impl fmt::Debug for ExponentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExponentField")
            .field("kind", &self.kind)
            .field("description", &self.description)
            .field("p_minus", &self.p_minus)
            .field("p_plus", &self.p_plus)
            .field("lip", &self.lip)
            .finish()
    }
}

fn check_p_minus(p_minus: f64) -> Result<()> {
    if !(p_minus > 1.0) || !p_minus.is_finite() {
        return Err(Error::ExponentTooSmall { p_minus });
    }
    Ok(())
}

impl ExponentField {
    pub fn constant(value: f64, dim: usize) -> Result<Self> {
        check_p_minus(value)?;
        Ok(Self {
            repr: Repr::Constant(value),
            kind: ExponentKind::Constant,
            dim,
            p_minus: value,
            p_plus: value,
            lip: 0.0,
            description: format!("p = {value}"),
            lip_method: "analytic".into(),
        })
    }

    /// `p(x) = offset + slope · x` with bounds taken at the box corners.
    pub fn affine(offset: f64, slope: &[f64], domain: &Domain) -> Result<Self> {
        let dim = domain.dim();
        if slope.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                got: slope.len(),
            });
        }
        let mut s = [0.0; 2];
        s[..dim].copy_from_slice(slope);
        let (lo, up) = (domain.lower(), domain.upper());
        let mut p_minus = offset;
        let mut p_plus = offset;
        for k in 0..dim {
            let (a, b) = (s[k] * lo[k], s[k] * up[k]);
            p_minus += a.min(b);
            p_plus += a.max(b);
        }
        check_p_minus(p_minus)?;
        Ok(Self {
            repr: Repr::Affine { offset, slope: s },
            kind: ExponentKind::Affine,
            dim,
            p_minus,
            p_plus,
            lip: s.iter().map(|v| v * v).sum::<f64>().sqrt(),
            description: format!("p = {offset} + {:?}·x", &s[..dim]),
            lip_method: "analytic".into(),
        })
    }

    /// A smooth exponent given by a closure, certified by scanning `scan_n`
    /// interior points per axis of `domain` (plus the boundary nodes).
    pub fn from_closure(
        f: ScalarFn,
        grad: Option<VectorFn>,
        domain: &Domain,
        scan_n: usize,
        description: impl Into<String>,
    ) -> Result<Self> {
        let dim = domain.dim();
        let scan = domain.with_n(scan_n)?;
        let mut field = Self {
            repr: Repr::Closure { f, grad },
            kind: ExponentKind::SmoothClosure,
            dim,
            p_minus: 0.0,
            p_plus: 0.0,
            lip: 0.0,
            description: description.into(),
            lip_method: String::new(),
        };
        let fd_step = 1e-3 * scan.h_min();
        let (mut lo, mut hi, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for nd in scan.nodes() {
            let x = scan.coord(nd);
            let v = field.eval(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("exponent at {x:?}")));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            let g = match &field.repr {
                Repr::Closure { grad: Some(g), .. } => g(x),
                _ => field.grad_fd(x, fd_step),
            };
            gmax = gmax.max((g[0] * g[0] + g[1] * g[1]).sqrt());
        }
        let lip = LIP_SAFETY * gmax;
        let margin = lip * scan.h_max() * (dim as f64).sqrt() / 2.0;
        field.p_minus = lo - margin;
        field.p_plus = hi + margin;
        field.lip = lip;
        field.lip_method = format!(
            "dense gradient scan on {} nodes x {LIP_SAFETY}; bounds widened by {margin:.3e}",
            scan.len()
        );
        check_p_minus(field.p_minus)?;
        Ok(field)
    }

    /// Multilinear interpolation of nodal samples.
    pub fn from_grid(samples: GridFunction) -> Result<Self> {
        let d = samples.domain().clone();
        let dim = d.dim();
        let v = samples.values();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut slope = 0.0f64;
        for nd in d.nodes() {
            for k in 0..dim {
                if let Some(nb) = d.offset(nd, k, 1) {
                    slope = slope.max((samples.get(nb) - samples.get(nd)).abs() / d.h()[k]);
                }
            }
        }
        check_p_minus(lo)?;
        Ok(Self {
            repr: Repr::Grid(samples),
            kind: ExponentKind::GridSampled,
            dim,
            p_minus: lo,
            p_plus: hi,
            lip: slope * (dim as f64).sqrt(),
            description: format!("grid-sampled on {} nodes", d.len()),
            lip_method: "max edge slope x sqrt(N)".into(),
        })
    }

    pub fn kind(&self) -> ExponentKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.repr, Repr::Constant(_))
    }

    pub fn info(&self) -> ExponentInfo {
        ExponentInfo {
            kind: self.kind,
            description: self.description.clone(),
            p_minus: self.p_minus,
            p_plus: self.p_plus,
            lip: self.lip,
            lip_method: self.lip_method.clone(),
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Affine { offset, slope } => offset + slope[0] * x[0] + slope[1] * x[1],
            Repr::Closure { f, .. } => f(x),
            Repr::Grid(g) => interpolate(g, x),
        }
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        match &self.repr {
            Repr::Constant(_) => [0.0; 2],
            Repr::Affine { slope, .. } => *slope,
            Repr::Closure { grad: Some(g), .. } => g(x),
            Repr::Closure { grad: None, .. } => self.grad_fd(x, 1e-6),
            Repr::Grid(g) => self.grad_fd(x, 0.5 * g.domain().h_min()),
        }
    }

    fn grad_fd(&self, x: Point, step: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
            let (mut a, mut b) = (x, x);
            a[k] += step;
            b[k] -= step;
            *gk = (self.eval(a) - self.eval(b)) / (2.0 * step);
        }
        g
    }

    /// Samples the field on every node.
    pub fn sample(&self, domain: &Domain) -> GridFunction {
        GridFunction::from_fn(domain, |x| self.eval(x))
    }
}

fn interpolate(g: &GridFunction, x: Point) -> f64 {
    let d = g.domain();
    let s = d.shape();
    let mut base = [0usize; 2];
    let mut t = [0.0; 2];
    for k in 0..d.dim() {
        let rel = ((x[k] - d.lower()[k]) / d.h()[k]).clamp(0.0, (s[k] - 1) as f64);
        let i = (rel.floor() as usize).min(s[k] - 2);
        base[k] = i;
        t[k] = rel - i as f64;
    }
    if d.dim() == 1 {
        let (a, b) = (g.get([base[0], 0]), g.get([base[0] + 1, 0]));
        return a + t[0] * (b - a);
    }
    let v00 = g.get(base);
    let v10 = g.get([base[0] + 1, base[1]]);
    let v01 = g.get([base[0], base[1] + 1]);
    let v11 = g.get([base[0] + 1, base[1] + 1]);
    let a = v00 + t[0] * (v10 - v00);
    let b = v01 + t[0] * (v11 - v01);
    a + t[1] * (b - a)
}

/// Config-file description of an exponent (kind-tagged).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSpec {
    /// `p ≡ value`
    Constant { value: f64 },
    /// `p = offset + slope · x`
    Affine { offset: f64, slope: Vec<f64> },
    /// `p = base + amplitude · sin(frequency · π · x_axis)`
    Sine {
        base: f64,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `p = base + slope · |x_axis − center|`
    Kink {
        base: f64,
        slope: f64,
        center: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `p = base + scale / |x − center|`
    RadialInverse {
        base: f64,
        scale: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}

/// Dense scan resolution used to certify closure fields.
pub const SCAN_POINTS_1D: usize = 4095;
pub const SCAN_POINTS_2D: usize = 511;

/// Builds a certified field over `domain` from its config description.
pub fn make_exponent(spec: &ExponentSpec, domain: &Domain) -> Result<ExponentField> {
    let dim = domain.dim();
    let scan_n = if dim == 1 { SCAN_POINTS_1D } else { SCAN_POINTS_2D };
    let check_axis = |axis: usize| {
        if axis >= dim {
            Err(Error::Config(format!("axis {axis} out of range for a {dim}-d domain")))
        } else {
            Ok(())
        }
    };
    match spec.clone() {
        ExponentSpec::Constant { value } => ExponentField::constant(value, dim),
        ExponentSpec::Affine { offset, slope } => ExponentField::affine(offset, &slope, domain),
        ExponentSpec::Sine {
            base,
            amplitude,
            frequency,
            axis,
        } => {
            check_axis(axis)?;
            let w = frequency * std::f64::consts::PI;
            ExponentField::from_closure(
                Arc::new(move |x: Point| base + amplitude * (w * x[axis]).sin()),
                Some(Arc::new(move |x: Point| {
                    let mut g = [0.0; 2];
                    g[axis] = amplitude * w * (w * x[axis]).cos();
                    g
                })),
                domain,
                scan_n,
                format!("p = {base} + {amplitude}·sin({frequency}π·x{axis})"),
            )
        }
        ExponentSpec::Kink {
            base,
            slope,
            center,
            axis,
        } => {
            check_axis(axis)?;
            ExponentField::from_closure(
                Arc::new(move |x: Point| base + slope * (x[axis] - center).abs()),
                Some(Arc::new(move |x: Point| {
                    let mut g = [0.0; 2];
                    g[axis] = slope * (x[axis] - center).signum();
                    g
                })),
                domain,
                scan_n,
                format!("p = {base} + {slope}·|x{axis} − {center}|"),
            )
        }
        ExponentSpec::RadialInverse {
            base,
            scale,
            center,
        } => {
            let radius = move |x: Point| {
                let dx = x[0] - center[0];
                let dy = if dim == 2 { x[1] - center[1] } else { 0.0 };
                ((dx * dx + dy * dy).sqrt(), dx, dy)
            };
            ExponentField::from_closure(
                Arc::new(move |x: Point| base + scale / radius(x).0),
                Some(Arc::new(move |x: Point| {
                    let (r, dx, dy) = radius(x);
                    let c = -scale / (r * r * r);
                    [c * dx, c * dy]
                })),
                domain,
                scan_n,
                format!("p = {base} + {scale}/|x − {center:?}|"),
            )
        }
    }
}

/// A field convolved with the normalized bump `exp(−1/(1 − |z|²/r²))`.
///
/// The convolution is a finite sum over a symmetric lattice of offsets in
/// the ball of radius `r`; weights are normalized discretely, so constants
/// and affine functions are reproduced exactly up to roundoff and
/// `|p_j − p| ≤ lip · r` holds pointwise.
#[derive(Debug, Clone)]
pub struct MollifiedExponent {
    base: ExponentField,
    radius: f64,
    stencil: Vec<([f64; 2], f64)>,
}

/// Lattice points per radius used by [`mollify`].
pub const MOLLIFIER_POINTS_PER_RADIUS: usize = 8;

pub fn mollify(p: &ExponentField, radius: f64) -> Result<MollifiedExponent> {
    mollify_with(p, radius, MOLLIFIER_POINTS_PER_RADIUS)
}

pub fn mollify_with(p: &ExponentField, radius: f64, points_per_radius: usize) -> Result<MollifiedExponent> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("mollifier radius must be positive, got {radius}")));
    }
    if points_per_radius == 0 {
        return Err(Error::InvalidArgument("points_per_radius must be positive".into()));
    }
    let m = points_per_radius as isize;
    let step = radius / points_per_radius as f64;
    let range_j = if p.dim == 2 { -m..=m } else { 0..=0 };
    let mut stencil = Vec::new();
    let mut total = 0.0;
    for i in -m..=m {
        for j in range_j.clone() {
            let z = [i as f64 * step, j as f64 * step];
            let s = (z[0] * z[0] + z[1] * z[1]) / (radius * radius);
            if s < 1.0 {
                let w = (-1.0 / (1.0 - s)).exp();
                total += w;
                stencil.push((z, w));
            }
        }
    }
    stencil.iter_mut().for_each(|e| e.1 /= total);
    Ok(MollifiedExponent {
        base: p.clone(),
        radius,
        stencil,
    })
}

impl MollifiedExponent {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn base(&self) -> &ExponentField {
        &self.base
    }

    pub fn eval(&self, x: Point) -> f64 {
        if self.base.is_constant() {
            return self.base.eval(x);
        }
        self.stencil
            .iter()
            .map(|(z, w)| w * self.base.eval([x[0] - z[0], x[1] - z[1]]))
            .sum()
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (z, w) in &self.stencil {
            let gb = self.base.grad([x[0] - z[0], x[1] - z[1]]);
            g[0] += w * gb[0];
            g[1] += w * gb[1];
        }
        g
    }

    pub fn description(&self) -> String {
        format!(
            "bump exp(-1/(1-|z|^2/r^2)), r = {}, {} lattice points, discrete normalization",
            self.radius,
            self.stencil.len()
        )
    }

    /// The mollified exponent as a field; it inherits the base bounds since
    /// it is pointwise a convex combination of base values.
    pub fn into_field(self) -> ExponentField {
        let base = self.base.clone();
        let description = format!("{} mollified: {}", base.description, self.description());
        let this = Arc::new(self);
        let (fe, fg) = (this.clone(), this);
        ExponentField {
            repr: Repr::Closure {
                f: Arc::new(move |x| fe.eval(x)),
                grad: Some(Arc::new(move |x| fg.grad(x))),
            },
            kind: ExponentKind::Mollified,
            dim: base.dim,
            p_minus: base.p_minus,
            p_plus: base.p_plus,
            lip: base.lip,
            description,
            lip_method: "inherited from base".into(),
        }
    }
}
