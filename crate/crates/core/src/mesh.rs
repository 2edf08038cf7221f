//! Tensor meshes of the box domain together with its interaction layer.
//!
//! The computational region is `[lower - δ, upper + δ]^d`. Each axis is split
//! into breakpoints with spacing `h`; in 2D every grid rectangle is cut along
//! its lower-left to upper-right diagonal into two triangles. Nodes lying in
//! the open box are numbered first (`0..num_interior`), all remaining nodes
//! (including those on the box boundary) carry the volume constraint.

use std::io::Write;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// Coordinates of a point. One-dimensional meshes keep the second entry at zero.
pub type Point = [f64; 2];

/// Norm used to define the interaction ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallNorm {
    #[default]
    Euclidean,
    Max,
}

impl BallNorm {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            BallNorm::Euclidean => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            BallNorm::Max => v.iter().fold(0.0, |acc, c| acc.max(c.abs())),
        }
    }
}

/// The box `Ω` with its horizon and the thickness of the weight-construction
/// extension layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    dim: usize,
    lower: Point,
    upper: Point,
    horizon: f64,
    extension: f64,
}

impl BoxDomain {
    /// Unit box `(0,1)^d`.
    pub fn unit(dim: usize, horizon: f64, extension: f64) -> Result<Self> {
        Self::new(dim, [0.0; 2], [1.0, if dim == 2 { 1.0 } else { 0.0 }], horizon, extension)
    }

    pub fn new(dim: usize, lower: Point, upper: Point, horizon: f64, extension: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if !(0.0..=horizon).contains(&extension) {
            return Err(Error::InvalidInput(format!("extension thickness must lie in [0, {horizon}], got {extension}")));
        }
        for a in 0..dim {
            if !(upper[a] > lower[a]) {
                return Err(Error::InvalidInput(format!("degenerate box along axis {a}")));
            }
        }
        let mut lower = lower;
        let mut upper = upper;
        if dim == 1 {
            lower[1] = 0.0;
            upper[1] = 0.0;
        }
        Ok(Self { dim, lower, upper, horizon, extension })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> Point {
        self.lower
    }

    pub fn upper(&self) -> Point {
        self.upper
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn extension(&self) -> f64 {
        self.extension
    }

    /// True when `p` lies in the closed box grown by `pad` on every side.
    pub fn contains_padded(&self, p: &Point, pad: f64) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lower[a] - pad && p[a] <= self.upper[a] + pad)
    }

    /// Closure of `Ω ∪ BΩ`.
    pub fn in_computational(&self, p: &Point) -> bool {
        self.contains_padded(p, self.horizon)
    }

    /// Closure of `Ω ∪ BΩ ∪ BΩ^{t_e}`.
    pub fn in_extended(&self, p: &Point) -> bool {
        self.contains_padded(p, self.horizon + self.extension)
    }

    /// Open box `Ω`.
    pub fn in_interior(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p[a] > self.lower[a] && p[a] < self.upper[a])
    }

    /// Distance from a point of the closed box to its boundary.
    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        (0..self.dim).map(|a| (p[a] - self.lower[a]).abs().min((self.upper[a] - p[a]).abs())).fold(f64::INFINITY, f64::min)
    }

    /// Same box with a different extension thickness.
    pub fn with_extension(&self, extension: f64) -> Result<Self> {
        Self::new(self.dim, self.lower, self.upper, self.horizon, extension)
    }
}

/// Node classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    Constraint,
}

/// Whether an element belongs to `Ω` or to the interaction layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Omega,
    Interaction,
}

/// Random node displacement `ε·h·R`, `R ~ U[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub factor: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(factor: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&factor) {
            return Err(Error::InvalidInput(format!("perturbation factor must lie in [0, 0.5), got {factor}")));
        }
        Ok(Self { factor, seed })
    }
}

/// Uniform variates on `[-1, 1]` from a splitmix64-seeded xoshiro256++ stream.
///
/// Each draw consumes one `u64`: `R = 2·(x >> 11)·2⁻⁵³ − 1`.
pub struct UnitNoise {
    rng: Xoshiro256PlusPlus,
}

impl UnitNoise {
    pub fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn next_symmetric(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    }
}

/// Result of a point location query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub element: usize,
    /// Barycentric weights for the element's vertices, in connectivity order.
    /// In 1D the third entry is zero.
    pub bary: [f64; 3],
}

/// A conforming simplex mesh of `Ω ∪ BΩ` built from per-axis breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: BoxDomain,
    spacing: f64,
    ratio: usize,
    uniform: bool,
    axes: Vec<Vec<f64>>,
    /// Breakpoint index of the lower box face on each axis.
    offset: usize,
    /// Number of segments spanning the box on each axis.
    inner_cells: [usize; 2],
    nodes: Vec<Point>,
    classes: Vec<NodeClass>,
    num_interior: usize,
    grid_to_node: Vec<usize>,
    elements: Vec<[usize; 3]>,
    layers: Vec<Layer>,
}

fn integer_ratio(value: f64, what: &str) -> Result<usize> {
    let n = value.round();
    if n < 1.0 || (value - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidInput(format!("{what} must be a positive integer, got {value}")));
    }
    Ok(n as usize)
}

impl Mesh {
    /// Uniform mesh of segments of size `h` over `[lower-δ, upper+δ]`.
    pub fn uniform_1d(h: f64, domain: &BoxDomain) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::InvalidInput("uniform_1d requires a 1D domain".into()));
        }
        Self::uniform(h, domain)
    }

    /// Uniform tensor mesh over `[lower-δ, upper+δ]²`, each rectangle split into two triangles.
    pub fn uniform_2d(h: f64, domain: &BoxDomain) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::InvalidInput("uniform_2d requires a 2D domain".into()));
        }
        Self::uniform(h, domain)
    }

    fn uniform(h: f64, domain: &BoxDomain) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
        }
        let m = integer_ratio(domain.horizon() / h, "delta/h")?;
        let dim = domain.dim();
        let mut inner_cells = [0usize; 2];
        let mut axes = Vec::with_capacity(dim);
        for (a, cells) in inner_cells.iter_mut().enumerate().take(dim) {
            let (lo, hi) = (domain.lower()[a], domain.upper()[a]);
            let n = integer_ratio((hi - lo) / h, "box side / h")?;
            *cells = n;
            // breakpoints from integer indices so that the box faces are hit exactly
            let axis: Vec<f64> = (0..=n + 2 * m)
                .map(|k| {
                    let k = k as i64 - m as i64;
                    if k == -(m as i64) {
                        lo - domain.horizon()
                    } else if k == (n + m) as i64 {
                        hi + domain.horizon()
                    } else if k == 0 {
                        lo
                    } else if k == n as i64 {
                        hi
                    } else {
                        lo + (hi - lo) * (k as f64 / n as f64)
                    }
                })
                .collect();
            axes.push(axis);
        }
        Ok(Self::from_axes(domain.clone(), h, m, true, axes, m, inner_cells))
    }

    fn from_axes(
        domain: BoxDomain,
        spacing: f64,
        ratio: usize,
        uniform: bool,
        axes: Vec<Vec<f64>>,
        offset: usize,
        inner_cells: [usize; 2],
    ) -> Self {
        let dim = domain.dim();
        let nx = axes[0].len();
        let ny = if dim == 2 { axes[1].len() } else { 1 };
        let is_interior = |k: usize, a: usize| k > offset && k < offset + inner_cells[a];

        let grid_interior = |ix: usize, iy: usize| is_interior(ix, 0) && (dim == 1 || is_interior(iy, 1));
        let mut grid_to_node = vec![usize::MAX; nx * ny];
        let mut next = 0;
        for pass in [true, false] {
            for iy in 0..ny {
                for ix in 0..nx {
                    if grid_interior(ix, iy) == pass {
                        grid_to_node[iy * nx + ix] = next;
                        next += 1;
                    }
                }
            }
        }
        let mut nodes = vec![[0.0; 2]; nx * ny];
        let mut classes = vec![NodeClass::Constraint; nx * ny];
        let mut num_interior = 0;
        for iy in 0..ny {
            for ix in 0..nx {
                let id = grid_to_node[iy * nx + ix];
                nodes[id] = [axes[0][ix], if dim == 2 { axes[1][iy] } else { 0.0 }];
                if grid_interior(ix, iy) {
                    classes[id] = NodeClass::Interior;
                    num_interior += 1;
                }
            }
        }

        let in_box = |k: usize, a: usize| k >= offset && k < offset + inner_cells[a];
        let mut elements = Vec::new();
        let mut layers = Vec::new();
        if dim == 1 {
            for k in 0..nx - 1 {
                elements.push([grid_to_node[k], grid_to_node[k + 1], usize::MAX]);
                layers.push(if in_box(k, 0) { Layer::Omega } else { Layer::Interaction });
            }
        } else {
            for iy in 0..ny - 1 {
                for ix in 0..nx - 1 {
                    let ll = grid_to_node[iy * nx + ix];
                    let lr = grid_to_node[iy * nx + ix + 1];
                    let ul = grid_to_node[(iy + 1) * nx + ix];
                    let ur = grid_to_node[(iy + 1) * nx + ix + 1];
                    let layer = if in_box(ix, 0) && in_box(iy, 1) { Layer::Omega } else { Layer::Interaction };
                    elements.push([ll, lr, ur]);
                    elements.push([ll, ur, ul]);
                    layers.push(layer);
                    layers.push(layer);
                }
            }
        }

        Self { domain, spacing, ratio, uniform, axes, offset, inner_cells, nodes, classes, num_interior, grid_to_node, elements, layers }
    }

    /// Randomly displaces every breakpoint except the box faces and the outer
    /// ends of the interaction layer, then rebuilds the tensor mesh.
    pub fn perturbed(&self, spec: &PerturbationSpec) -> Result<Self> {
        if !self.uniform {
            return Err(Error::InvalidInput("perturbation requires a uniform mesh".into()));
        }
        if !(0.0..0.5).contains(&spec.factor) {
            return Err(Error::InvalidInput(format!("perturbation factor must lie in [0, 0.5), got {}", spec.factor)));
        }
        let mut noise = UnitNoise::new(spec.seed);
        let amplitude = spec.factor * self.spacing;
        let mut axes = self.axes.clone();
        for (a, axis) in axes.iter_mut().enumerate() {
            let last = axis.len() - 1;
            let fixed = [0, self.offset, self.offset + self.inner_cells[a], last];
            for (k, x) in axis.iter_mut().enumerate() {
                if fixed.contains(&k) {
                    continue;
                }
                let r = noise.next_symmetric();
                *x += amplitude * r;
            }
        }
        Ok(Self::from_axes(self.domain.clone(), self.spacing, self.ratio, false, axes, self.offset, self.inner_cells))
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Nominal (unperturbed) element size.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `δ/h`.
    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_interior(&self) -> usize {
        self.num_interior
    }

    pub fn node_class(&self, node: usize) -> NodeClass {
        self.classes[node]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Vertex ids of an element (2 in 1D, 3 in 2D, counter-clockwise).
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim() + 1]
    }

    pub fn layer(&self, e: usize) -> Layer {
        self.layers[e]
    }

    /// Node id at tensor grid position `(ix, iy)`.
    pub fn grid_node(&self, ix: usize, iy: usize) -> usize {
        self.grid_to_node[iy * self.axes[0].len() + ix]
    }

    pub fn element_vertices(&self, e: usize) -> Vec<Point> {
        self.element_nodes(e).iter().map(|&n| self.nodes[n]).collect()
    }

    /// Signed measure: length in 1D, oriented area in 2D.
    pub fn signed_measure(&self, e: usize) -> f64 {
        let v = self.element_nodes(e);
        let p = |i: usize| self.nodes[v[i]];
        if self.dim() == 1 {
            p(1)[0] - p(0)[0]
        } else {
            let (a, b, c) = (p(0), p(1), p(2));
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
    }

    pub fn measure(&self, e: usize) -> f64 {
        self.signed_measure(e).abs()
    }

    /// Constant gradients of the element's vertex basis functions.
    pub fn basis_gradients(&self, e: usize) -> [[f64; 2]; 3] {
        let v = self.element_nodes(e);
        let p = |i: usize| self.nodes[v[i]];
        if self.dim() == 1 {
            let len = p(1)[0] - p(0)[0];
            [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]]
        } else {
            let (a, b, c) = (p(0), p(1), p(2));
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            [
                [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
            ]
        }
    }

    /// Maps barycentric weights of element `e` to physical coordinates.
    pub fn map_to_physical(&self, e: usize, bary: &[f64; 3]) -> Point {
        let v = self.element_nodes(e);
        let mut x = [0.0; 2];
        for (i, &n) in v.iter().enumerate() {
            x[0] += bary[i] * self.nodes[n][0];
            x[1] += bary[i] * self.nodes[n][1];
        }
        x
    }

    /// Finds an element containing `x`. Points on shared facets resolve to the
    /// lowest element id.
    pub fn locate(&self, x: &Point) -> Option<Location> {
        let (ix, s) = locate_on_axis(&self.axes[0], x[0])?;
        if self.dim() == 1 {
            return Some(Location { element: ix, bary: [1.0 - s, s, 0.0] });
        }
        let (iy, t) = locate_on_axis(&self.axes[1], x[1])?;
        let rect = iy * (self.axes[0].len() - 1) + ix;
        // lower triangle (ll, lr, ur) holds s >= t, upper (ll, ur, ul) holds t > s
        Some(if s >= t {
            Location { element: 2 * rect, bary: [1.0 - s, s - t, t] }
        } else {
            Location { element: 2 * rect + 1, bary: [1.0 - t, s, t - s] }
        })
    }

    pub fn locate_or_err(&self, x: &Point) -> Result<Location> {
        self.locate(x).ok_or(Error::OutsideDomain { x: x[0], y: x[1] })
    }

    /// Writes the node and element tables as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.dim();
        if dim == 1 {
            writeln!(out, "node,x,class")?;
        } else {
            writeln!(out, "node,x,y,class")?;
        }
        for (i, p) in self.nodes.iter().enumerate() {
            let class = match self.classes[i] {
                NodeClass::Interior => "interior",
                NodeClass::Constraint => "constraint",
            };
            if dim == 1 {
                writeln!(out, "{i},{:e},{class}", p[0])?;
            } else {
                writeln!(out, "{i},{:e},{:e},{class}", p[0], p[1])?;
            }
        }
        writeln!(out)?;
        if dim == 1 {
            writeln!(out, "element,n0,n1,layer")?;
        } else {
            writeln!(out, "element,n0,n1,n2,layer")?;
        }
        for e in 0..self.num_elements() {
            let ids: Vec<String> = self.element_nodes(e).iter().map(|n| n.to_string()).collect();
            let layer = match self.layers[e] {
                Layer::Omega => "omega",
                Layer::Interaction => "interaction",
            };
            writeln!(out, "{e},{},{layer}", ids.join(","))?;
        }
        Ok(())
    }
}

/// Interval index and local coordinate in `[0,1]`; ties go to the lower interval.
fn locate_on_axis(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (axis[0], axis[axis.len() - 1]);
    if !(x >= first && x <= last) {
        return None;
    }
    let k = axis.partition_point(|&b| b < x).max(1) - 1;
    let (a, b) = (axis[k], axis[k + 1]);
    Some((k, ((x - a) / (b - a)).clamp(0.0, 1.0)))
}
