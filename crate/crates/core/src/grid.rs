//! Uniform tensor grids in one or two dimensions, grid functions and the
//! centered-difference calculus used by every solver and probe.
//!
//! Nodes are indexed by `[i, j]`; in 1D the second index is always 0. A
//! domain with `n` interior points per axis has `n + 2` nodes per axis and
//! spacing `h = (upper - lower) / (n + 1)`. Node coordinates are always
//! computed as `lower + i * h` so they are reproducible from indices.
//!
//! Quadrature is the composite trapezoid rule on nodes.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension supported by [`Jet`] and the pointwise operators.
/// Grids themselves are limited to `dim <= 2`.
pub const MAX_DIM: usize = 3;

pub type Point = [f64; 2];
pub type Node = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
}

impl Domain {
    pub fn new_1d(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(1, [lower, 0.0], [upper, 0.0], [n, 0])
    }

    pub fn new_2d(lower: [f64; 2], upper: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(2, lower, upper, n)
    }

    /// Square box `[lower, upper]^2` with `n` interior points per axis.
    pub fn square(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new_2d([lower, lower], [upper, upper], [n, n])
    }

    pub fn new(dim: usize, lower: [f64; 2], upper: [f64; 2], n: [usize; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDomain(format!("dim must be 1 or 2, got {dim}")));
        }
        let mut h = [0.0; 2];
        let mut lo = [0.0; 2];
        let mut up = [0.0; 2];
        let mut counts = [0; 2];
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite()) || upper[k] <= lower[k] {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: need finite upper > lower, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            if n[k] == 0 {
                return Err(Error::InvalidDomain(format!("axis {k}: need at least one interior point")));
            }
            lo[k] = lower[k];
            up[k] = upper[k];
            counts[k] = n[k];
            h[k] = (upper[k] - lower[k]) / (n[k] + 1) as f64;
        }
        Ok(Self {
            dim,
            lower: lo,
            upper: up,
            n: counts,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    /// Interior point counts per axis.
    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn h(&self) -> [f64; 2] {
        self.h
    }

    /// Smallest spacing over the active axes.
    pub fn h_min(&self) -> f64 {
        self.h[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.h[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    /// Node counts per axis (1 for inactive axes).
    pub fn shape(&self) -> [usize; 2] {
        let mut s = [1, 1];
        for k in 0..self.dim {
            s[k] = self.n[k] + 2;
        }
        s
    }

    pub fn len(&self) -> usize {
        let s = self.shape();
        s[0] * s[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lebesgue measure of the box.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|k| self.upper[k] - self.lower[k]).product()
    }

    pub fn index(&self, node: Node) -> usize {
        node[0] * self.shape()[1] + node[1]
    }

    pub fn node(&self, index: usize) -> Node {
        let s = self.shape();
        [index / s[1], index % s[1]]
    }

    pub fn coord(&self, node: Node) -> Point {
        let mut x = [0.0; 2];
        for k in 0..self.dim {
            x[k] = self.lower[k] + node[k] as f64 * self.h[k];
        }
        x
    }

    /// Midpoint of the edge from `node` to `node + e_axis`.
    pub fn edge_midpoint(&self, node: Node, axis: usize) -> Point {
        let mut x = self.coord(node);
        x[axis] += 0.5 * self.h[axis];
        x
    }

    pub fn is_box_boundary(&self, node: Node) -> bool {
        (0..self.dim).any(|k| node[k] == 0 || node[k] == self.n[k] + 1)
    }

    /// Euclidean distance from the node to the box boundary.
    pub fn boundary_distance(&self, node: Node) -> f64 {
        let x = self.coord(node);
        (0..self.dim)
            .map(|k| (x[k] - self.lower[k]).min(self.upper[k] - x[k]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership in the inset region `{x : dist(x, ∂Ω) > margin}`.
    pub fn in_inset(&self, node: Node, margin: f64) -> bool {
        self.boundary_distance(node) > margin
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let s = self.shape();
        (0..s[0]).flat_map(move |i| (0..s[1]).map(move |j| [i, j]))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.nodes().filter(move |&nd| !self.is_box_boundary(nd))
    }

    pub(crate) fn offset(&self, node: Node, axis: usize, delta: isize) -> Option<Node> {
        let s = self.shape();
        let v = node[axis] as isize + delta;
        if v < 0 || v >= s[axis] as isize {
            return None;
        }
        let mut out = node;
        out[axis] = v as usize;
        Some(out)
    }

    /// Trapezoid weight of a node.
    pub fn quadrature_weight(&self, node: Node) -> f64 {
        let mut w = 1.0;
        for k in 0..self.dim {
            let end = node[k] == 0 || node[k] == self.n[k] + 1;
            w *= if end { 0.5 * self.h[k] } else { self.h[k] };
        }
        w
    }

    /// Same box with a different interior count on every active axis.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.dim, self.lower, self.upper, [n, if self.dim == 2 { n } else { 0 }])
    }
}

/// Samples on every node of a [`Domain`]. `boundary_mask` marks nodes that
/// carry Dirichlet data (the box boundary plus any excluded region).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    values: Vec<f64>,
    boundary_mask: Vec<bool>,
}

impl GridFunction {
    pub fn new(domain: Domain, values: Vec<f64>, boundary_mask: Vec<bool>) -> Result<Self> {
        let expected = domain.len();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        if boundary_mask.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: boundary_mask.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "grid value at node {:?}",
                domain.node(pos)
            )));
        }
        Ok(Self {
            domain,
            values,
            boundary_mask,
        })
    }

    /// Samples `f` at every node; the mask is the box boundary.
    pub fn from_fn(domain: &Domain, f: impl Fn(Point) -> f64) -> Self {
        let values = domain.nodes().map(|nd| f(domain.coord(nd))).collect();
        let boundary_mask = domain.nodes().map(|nd| domain.is_box_boundary(nd)).collect();
        Self {
            domain: domain.clone(),
            values,
            boundary_mask,
        }
    }

    pub fn zeros(domain: &Domain) -> Self {
        Self::from_fn(domain, |_| 0.0)
    }

    /// Replaces the Dirichlet mask; box boundary nodes are always kept fixed.
    pub fn with_mask(mut self, fixed: impl Fn(Point) -> bool) -> Self {
        for (idx, nd) in self.domain.nodes().enumerate() {
            self.boundary_mask[idx] =
                self.domain.is_box_boundary(nd) || fixed(self.domain.coord(nd));
        }
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_fixed(&self, node: Node) -> bool {
        self.boundary_mask[self.domain.index(node)]
    }

    pub fn get(&self, node: Node) -> f64 {
        self.values[self.domain.index(node)]
    }

    pub fn set(&mut self, node: Node, value: f64) {
        let idx = self.domain.index(node);
        self.values[idx] = value;
    }

    /// Nodes that are not Dirichlet nodes.
    pub fn free_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.domain
            .nodes()
            .filter(move |&nd| !self.boundary_mask[self.domain.index(nd)])
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Same domain and mask, new values computed from node coordinates and
    /// the current value.
    pub fn map_with_coord(&self, mut f: impl FnMut(Point, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (idx, nd) in self.domain.nodes().enumerate() {
            out.values[idx] = f(self.domain.coord(nd), self.values[idx]);
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Oscillation `max u - min u` over all nodes.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.domain.dim == 1 {
            w.write_record(["x", "value"])?;
        } else {
            w.write_record(["x", "y", "value"])?;
        }
        for (idx, nd) in self.domain.nodes().enumerate() {
            let x = self.domain.coord(nd);
            let v = self.values[idx];
            if self.domain.dim == 1 {
                w.write_record(&[x[0].to_string(), v.to_string()])?;
            } else {
                w.write_record(&[x[0].to_string(), x[1].to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Binary dump, all little-endian:
    ///
    /// ```text
    /// b"PXGF"            magic
    /// u32                format version (1)
    /// u32                dim (1 or 2)
    /// dim × (f64, f64)   lower, upper per axis
    /// dim × u64          interior counts per axis
    /// len × f64          values, node order [i, j] with j fastest
    /// len × u8           boundary mask (0 or 1)
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = &self.domain;
        let mut out = Vec::with_capacity(16 + 24 * d.dim + 9 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(d.dim as u32).to_le_bytes());
        for k in 0..d.dim {
            out.extend_from_slice(&d.lower[k].to_le_bytes());
            out.extend_from_slice(&d.upper[k].to_le_bytes());
        }
        for k in 0..d.dim {
            out.extend_from_slice(&(d.n[k] as u64).to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.boundary_mask.iter().map(|&b| b as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = cur.u32()? as usize;
        if dim != 1 && dim != 2 {
            return Err(Error::Format(format!("bad dim {dim}")));
        }
        let mut lower = [0.0; 2];
        let mut upper = [0.0; 2];
        let mut n = [0; 2];
        for k in 0..dim {
            lower[k] = cur.f64()?;
            upper[k] = cur.f64()?;
        }
        for nk in n.iter_mut().take(dim) {
            *nk = cur.u64()? as usize;
        }
        let domain = Domain::new(dim, lower, upper, n)?;
        let len = domain.len();
        let values = (0..len).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let mask = cur
            .take(len)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Format(format!("bad mask byte {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Self::new(domain, values, mask)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

const MAGIC: &[u8; 4] = b"PXGF";
const FORMAT_VERSION: u32 = 1;

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::Format("unexpected end of data".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// A (gradient, Hessian) pair at a point: the discrete stand-in for an
/// element of a second-order semi-jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub eta: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    /// Builds a jet from a gradient and a row-major Hessian. The Hessian must
    /// be symmetric to 1e-14 relative.
    pub fn new(eta: &[f64], hess: &[f64]) -> Result<Self> {
        let dim = eta.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!("jet dimension {dim} out of range")));
        }
        if hess.len() != dim * dim {
            return Err(Error::ShapeMismatch {
                expected: dim * dim,
                got: hess.len(),
            });
        }
        let mut jet = Jet::zero(dim);
        jet.eta[..dim].copy_from_slice(eta);
        let scale = hess.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..dim {
            for j in 0..dim {
                let (a, b) = (hess[i * dim + j], hess[j * dim + i]);
                if (a - b).abs() > 1e-14 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "hessian not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                jet.hess[i][j] = 0.5 * (a + b);
            }
        }
        Ok(jet)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            eta: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta[..self.dim]
    }

    pub fn eta_norm_sq(&self) -> f64 {
        self.eta().iter().map(|v| v * v).sum()
    }

    pub fn eta_norm(&self) -> f64 {
        self.eta_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.hess[i][i]).sum()
    }

    /// `<X v, v>`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.hess[i][j] * v[i] * v[j];
            }
        }
        s
    }

    pub fn max_eigenvalue(&self) -> f64 {
        crate::linalg::sym_eigenvalues(&self.hess, self.dim)
            .into_iter()
            .take(self.dim)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn require_interior(u: &GridFunction, node: Node) -> Result<()> {
    let d = &u.domain;
    let s = d.shape();
    if node[0] >= s[0] || node[1] >= s[1] {
        return Err(Error::InvalidArgument(format!("node {node:?} outside grid")));
    }
    if d.is_box_boundary(node) {
        return Err(Error::InteriorRequired { node });
    }
    Ok(())
}

/// Second-order centered gradient at an interior node.
pub fn gradient_centered(u: &GridFunction, node: Node) -> Result<[f64; MAX_DIM]> {
    require_interior(u, node)?;
    Ok(gradient_unchecked(u, node))
}

pub(crate) fn gradient_unchecked(u: &GridFunction, node: Node) -> [f64; MAX_DIM] {
    let d = &u.domain;
    let s1 = d.shape()[1];
    let idx = node[0] * s1 + node[1];
    let v = &u.values;
    let mut g = [0.0; MAX_DIM];
    g[0] = (v[idx + s1] - v[idx - s1]) / (2.0 * d.h[0]);
    if d.dim == 2 {
        g[1] = (v[idx + 1] - v[idx - 1]) / (2.0 * d.h[1]);
    }
    g
}

/// Centered Hessian: 3-point second differences on the diagonal and the
/// 4-point cross difference off the diagonal.
pub fn hessian_centered(u: &GridFunction, node: Node) -> Result<[[f64; MAX_DIM]; MAX_DIM]> {
    let d = &u.domain;
    let s = d.shape();
    if node[0] >= s[0] || node[1] >= s[1] || d.is_box_boundary(node) {
        return Err(Error::InsufficientStencil { node });
    }
    Ok(hessian_unchecked(u, node))
}

pub(crate) fn hessian_unchecked(u: &GridFunction, node: Node) -> [[f64; MAX_DIM]; MAX_DIM] {
    let d = &u.domain;
    let s1 = d.shape()[1];
    let idx = node[0] * s1 + node[1];
    let v = &u.values;
    let mut hs = [[0.0; MAX_DIM]; MAX_DIM];
    let (hx, hy) = (d.h[0], d.h[1]);
    hs[0][0] = (v[idx + s1] - 2.0 * v[idx] + v[idx - s1]) / (hx * hx);
    if d.dim == 2 {
        hs[1][1] = (v[idx + 1] - 2.0 * v[idx] + v[idx - 1]) / (hy * hy);
        let cross = (v[idx + s1 + 1] - v[idx + s1 - 1] - v[idx - s1 + 1] + v[idx - s1 - 1])
            / (4.0 * hx * hy);
        hs[0][1] = cross;
        hs[1][0] = cross;
    }
    hs
}

/// Discrete jet `(Du, D²u)` from the centered stencils.
pub fn discrete_jet(u: &GridFunction, node: Node) -> Result<Jet> {
    require_interior(u, node)?;
    Ok(jet_unchecked(u, node))
}

pub(crate) fn jet_unchecked(u: &GridFunction, node: Node) -> Jet {
    Jet {
        dim: u.domain.dim,
        eta: gradient_unchecked(u, node),
        hess: hessian_unchecked(u, node),
    }
}

/// Composite trapezoid rule over the whole box.
pub fn integrate(f: &GridFunction) -> f64 {
    let d = &f.domain;
    d.nodes()
        .zip(&f.values)
        .map(|(nd, v)| d.quadrature_weight(nd) * v)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Domain {
        Domain::new_1d(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn spacing_and_coordinates() {
        let d = line(9);
        assert_eq!(d.h()[0], 0.1);
        assert_eq!(d.len(), 11);
        assert_eq!(d.coord([3, 0])[0], 0.0 + 3.0 * 0.1);
        assert!(d.is_box_boundary([0, 0]));
        assert!(d.is_box_boundary([10, 0]));
        assert!(!d.is_box_boundary([5, 0]));
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(Domain::new_1d(1.0, 1.0, 4).is_err());
        assert!(Domain::new_1d(0.0, 1.0, 0).is_err());
        assert!(Domain::new(3, [0.0; 2], [1.0; 2], [2, 2]).is_err());
    }

    #[test]
    fn gradient_of_affine_is_exact() {
        let d = line(9);
        let u = GridFunction::from_fn(&d, |x| 2.0 * x[0]);
        for nd in d.interior_nodes() {
            let g = gradient_centered(&u, nd).unwrap();
            assert!((g[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let d = Domain::square(0.0, 1.0, 7).unwrap();
        let u = GridFunction::from_fn(&d, |_| 5.0);
        let g = gradient_centered(&u, [3, 4]).unwrap();
        assert_eq!(g, [0.0; MAX_DIM]);
    }

    #[test]
    fn gradient_of_sine_within_truncation_bound() {
        // x = 0.5 is node 50 when h = 1e-2
        let d = Domain::new_1d(0.0, 1.0, 99).unwrap();
        let u = GridFunction::from_fn(&d, |x| x[0].sin());
        let g = gradient_centered(&u, [50, 0]).unwrap();
        let h: f64 = d.h()[0];
        // |sin'''| ≤ 1
        assert!((g[0] - 0.5f64.cos()).abs() <= h * h / 6.0);
    }

    #[test]
    fn boundary_node_is_rejected() {
        let d = line(4);
        let u = GridFunction::zeros(&d);
        assert!(matches!(
            gradient_centered(&u, [0, 0]),
            Err(Error::InteriorRequired { .. })
        ));
        assert!(matches!(
            hessian_centered(&u, [5, 0]),
            Err(Error::InsufficientStencil { .. })
        ));
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let d = line(10);
        let u = GridFunction::from_fn(&d, |x| x[0] * x[0]);
        for nd in d.interior_nodes() {
            assert!((hessian_centered(&u, nd).unwrap()[0][0] - 2.0).abs() < 1e-12);
        }
        let d2 = Domain::square(-1.0, 1.0, 8).unwrap();
        let u2 = GridFunction::from_fn(&d2, |x| x[0] * x[1]);
        for nd in d2.interior_nodes() {
            let hs = hessian_centered(&u2, nd).unwrap();
            assert!(hs[0][0].abs() < 1e-12 && hs[1][1].abs() < 1e-12);
            assert!((hs[0][1] - 1.0).abs() < 1e-12);
            assert_eq!(hs[0][1], hs[1][0]);
        }
    }

    #[test]
    fn hessian_of_sine_product_second_order() {
        // (0.5, 0.5) is node (50, 50) for h = 1e-2
        let d = Domain::square(0.0, 1.0, 99).unwrap();
        let u = GridFunction::from_fn(&d, |x| x[0].sin() * x[1].sin());
        let hs = hessian_centered(&u, [50, 50]).unwrap();
        let (s, c) = (0.5f64.sin(), 0.5f64.cos());
        let exact = [[-s * s, c * c], [c * c, -s * s]];
        let h = d.h()[0];
        for i in 0..2 {
            for j in 0..2 {
                assert!((hs[i][j] - exact[i][j]).abs() < 0.5 * h * h, "{i}{j}");
            }
        }
    }

    #[test]
    fn jets_of_quadratics() {
        let d = line(10);
        let u = GridFunction::from_fn(&d, |x| 0.5 * x[0] * x[0]);
        for nd in d.interior_nodes() {
            let jet = discrete_jet(&u, nd).unwrap();
            assert!((jet.eta[0] - d.coord(nd)[0]).abs() < 1e-12);
            assert!((jet.hess[0][0] - 1.0).abs() < 1e-12);
        }
        let affine = GridFunction::from_fn(&d, |x| 3.0 - 0.25 * x[0]);
        let jet = discrete_jet(&affine, [4, 0]).unwrap();
        assert!((jet.eta[0] + 0.25).abs() < 1e-12);
        assert!(jet.hess[0][0].abs() < 1e-12);
    }

    #[test]
    fn jet_of_radial_power_is_second_order() {
        // u = r^{2/3} at (1, 0.5): compare against symbolic derivatives
        let a = 2.0 / 3.0;
        let exact = |x: f64, y: f64| {
            let r2: f64 = x * x + y * y;
            let r = r2.sqrt();
            let ur = a * r.powf(a - 1.0);
            let urr = a * (a - 1.0) * r.powf(a - 2.0);
            let (nx, ny) = (x / r, y / r);
            let g = [ur * nx, ur * ny];
            let t = ur / r;
            let hs = [
                [urr * nx * nx + t * (1.0 - nx * nx), (urr - t) * nx * ny],
                [(urr - t) * nx * ny, urr * ny * ny + t * (1.0 - ny * ny)],
            ];
            (g, hs)
        };
        let mut errs = Vec::new();
        for n in [39usize, 79] {
            let d = Domain::new_2d([0.5, 0.0], [1.5, 1.0], [n, n]).unwrap();
            let u = GridFunction::from_fn(&d, |x| (x[0] * x[0] + x[1] * x[1]).powf(a / 2.0));
            let node = [(n + 1) / 2, (n + 1) / 2];
            let x = d.coord(node);
            let jet = discrete_jet(&u, node).unwrap();
            let (g, hs) = exact(x[0], x[1]);
            let mut e: f64 = 0.0;
            for i in 0..2 {
                e = e.max((jet.eta[i] - g[i]).abs());
                for j in 0..2 {
                    e = e.max((jet.hess[i][j] - hs[i][j]).abs());
                }
            }
            let h = d.h()[0];
            assert!(e < h * h, "n={n} err={e}");
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5);
    }

    #[test]
    fn trapezoid_quadrature() {
        let d = line(999);
        assert!((integrate(&GridFunction::from_fn(&d, |_| 1.0)) - 1.0).abs() < 1e-12);
        assert_eq!(integrate(&GridFunction::zeros(&d)), 0.0);
        let sq = GridFunction::from_fn(&d, |x| x[0] * x[0]);
        assert!((integrate(&sq) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let f = |x: Point| (x[0] * 3.0).sin() * (x[1] * 2.0).cos();
        let exact = (1.0 - 3.0f64.cos()) / 3.0 * 2.0f64.sin() / 2.0;
        let errs: Vec<f64> = [15usize, 31, 63]
            .iter()
            .map(|&n| {
                let d = Domain::square(0.0, 1.0, n).unwrap();
                (integrate(&GridFunction::from_fn(&d, f)) - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn binary_dump_round_trip() {
        let d = Domain::new_2d([-1.0, 0.0], [1.0, 2.0], [5, 3]).unwrap();
        let u = GridFunction::from_fn(&d, |x| x[0] * 1.5 - x[1]).with_mask(|x| x[0] < -0.5);
        let bytes = u.to_bytes();
        assert_eq!(&bytes[..4], b"PXGF");
        let back = GridFunction::from_bytes(&bytes).unwrap();
        assert_eq!(back, u);
        assert!(GridFunction::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_has_coordinates_and_values() {
        let d = line(2);
        let u = GridFunction::from_fn(&d, |x| 2.0 * x[0]);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "1,2");
    }

    #[test]
    fn jet_rejects_asymmetric_hessian() {
        assert!(Jet::new(&[1.0, 0.0], &[1.0, 0.5, 0.4, 1.0]).is_err());
        let j = Jet::new(&[1.0, 0.0], &[1.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(j.trace(), 2.0);
    }

    proptest::proptest! {
        #[test]
        fn hessian_always_symmetric(vals in proptest::collection::vec(-10.0f64..10.0, 36)) {
            let d = Domain::square(0.0, 1.0, 4).unwrap();
            let mask = d.nodes().map(|nd| d.is_box_boundary(nd)).collect();
            let u = GridFunction::new(d.clone(), vals, mask).unwrap();
            for nd in d.interior_nodes() {
                let hs = hessian_centered(&u, nd).unwrap();
                proptest::prop_assert_eq!(hs[0][1], hs[1][0]);
            }
        }
    }
}
