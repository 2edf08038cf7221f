//! Assembly of the fully discrete nonlocal system.
//!
//! For an outer Gauss point `x_q` of element `e` and an inner point
//! `x_p = x_q + o_p` the contribution to the bilinear form is
//!
//! ```text
//! ω_q ω_p γ(x_q, x_p) [ψ_i(x_p) − ψ_i(x_q)] [ψ_j(x_p) − ψ_j(x_q)]
//! ```
//!
//! Every element of the mesh, layer elements included, carries outer points.
//! Interior×interior pairs go to the matrix; interior×constraint pairs are
//! contracted with the constraint data and moved to the right-hand side.
//!
//! Elements are processed in fixed-size chunks. Each chunk yields its own
//! triplet list and the lists are concatenated in chunk order, so the result
//! does not depend on the number of worker threads.

use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{OuterRule, ReferenceRule};
use crate::gmls::{InnerGridSpec, RuleCache};
use crate::kernel::Kernel;
use crate::mesh::{Layer, Mesh, NodeClass, Point};
use crate::problems::ManufacturedCase;

const CHUNK: usize = 16;
const UNMAPPED: usize = usize::MAX;

/// Quadrature parameters of the fully discrete form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Outer Gauss points per element for the bilinear form (`N_q`).
    pub outer_points: usize,
    /// Gauss points per element for the body force (`N_b`).
    pub body_points: usize,
    pub inner: InnerGridSpec,
}

impl QuadratureOptions {
    /// 40 outer points in 1D, 4×4 in 2D, body force with the same rule.
    pub fn standard(kernel: &Kernel, points_per_radius: usize) -> Result<Self> {
        let outer = if kernel.dim() == 1 { 40 } else { 16 };
        Ok(Self { outer_points: outer, body_points: outer, inner: InnerGridSpec::new(points_per_radius, kernel.horizon(), kernel.dim())? })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub outer_points: usize,
    /// Outer points whose ball used the shared full-ball rule.
    pub full_ball_points: usize,
    /// Full-ball requests answered from the cache.
    pub full_hits: usize,
    /// Distinct clipped-ball rules solved.
    pub partial_rules: usize,
    pub inner_points: usize,
}

/// `A^h u = f^h` on the interior nodes, whose ids are `0..num_interior`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub matrix: CscMatrix<f64>,
    pub rhs: Vec<f64>,
    /// Nodal constraint data `g(x̃_j)` on constraint nodes, zero on interior ones.
    pub constraint_values: Vec<f64>,
    pub stats: AssemblyStats,
}

impl DiscreteSystem {
    pub fn num_interior(&self) -> usize {
        self.rhs.len()
    }
}

/// Data entering the right-hand side.
pub struct LoadData<'a> {
    pub source: &'a (dyn Fn(&Point) -> f64 + Sync),
    pub boundary: &'a (dyn Fn(&Point) -> f64 + Sync),
}

impl<'a> LoadData<'a> {
    pub fn from_case(case: &'a ManufacturedCase) -> LoadData<'a> {
        LoadData { source: case.source_fn(), boundary: case.boundary_fn() }
    }
}

struct ChunkOutput {
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<(usize, f64)>,
    stats: AssemblyStats,
}

struct Scratch {
    local_of: Vec<usize>,
    globals: Vec<usize>,
    dense: Vec<f64>,
    rhs: Vec<f64>,
    inner: Vec<(usize, [f64; 3], f64)>,
}

impl Scratch {
    fn new(num_nodes: usize) -> Self {
        Self { local_of: vec![UNMAPPED; num_nodes], globals: Vec::new(), dense: Vec::new(), rhs: Vec::new(), inner: Vec::new() }
    }

    fn register(&mut self, node: usize) {
        if self.local_of[node] == UNMAPPED {
            self.local_of[node] = self.globals.len();
            self.globals.push(node);
        }
    }

    fn reset(&mut self) {
        for &g in &self.globals {
            self.local_of[g] = UNMAPPED;
        }
        self.globals.clear();
        self.inner.clear();
    }
}

fn check_inputs(mesh: &Mesh, kernel: &Kernel, options: &QuadratureOptions) -> Result<()> {
    let domain = mesh.domain();
    if kernel.dim() != mesh.dim() || options.inner.dim() != mesh.dim() {
        return Err(Error::InvalidInput("mesh, kernel and inner grid dimensions differ".into()));
    }
    let delta = domain.horizon();
    if (kernel.horizon() - delta).abs() > 1e-12 * delta {
        return Err(Error::InvalidInput(format!("kernel horizon {} differs from the domain horizon {delta}", kernel.horizon())));
    }
    if options.outer_points == 0 || options.body_points == 0 {
        return Err(Error::InvalidInput("quadrature orders must be positive".into()));
    }
    Ok(())
}

/// Assembles `A^h` and `f^h = (b, ψ_i) − D^h(g^h, ψ_i)`.
pub fn assemble(mesh: &Mesh, kernel: &Kernel, options: &QuadratureOptions, load: &LoadData<'_>) -> Result<DiscreteSystem> {
    check_inputs(mesh, kernel, options)?;
    let cache = RuleCache::new(*kernel, options.inner, mesh.domain().clone())?;
    let outer = ReferenceRule::for_dim(mesh.dim(), options.outer_points)?;
    let body = ReferenceRule::for_dim(mesh.dim(), options.body_points)?;
    let n_int = mesh.num_interior();
    let constraint_values: Vec<f64> = (0..mesh.num_nodes())
        .map(|n| match mesh.node_class(n) {
            NodeClass::Interior => 0.0,
            NodeClass::Constraint => (load.boundary)(&mesh.nodes()[n]),
        })
        .collect();

    let num_chunks = mesh.num_elements().div_ceil(CHUNK);
    let outputs: Vec<ChunkOutput> = (0..num_chunks)
        .into_par_iter()
        .map_init(
            || Scratch::new(mesh.num_nodes()),
            |scratch, c| {
                let elements = c * CHUNK..((c + 1) * CHUNK).min(mesh.num_elements());
                assemble_chunk(mesh, &cache, &outer, &body, load, &constraint_values, elements, scratch)
            },
        )
        .collect::<Result<_>>()?;

    let mut stats = AssemblyStats::default();
    let total: usize = outputs.iter().map(|o| o.triplets.len()).sum();
    let mut triplets = Vec::with_capacity(total);
    let mut rhs = vec![0.0; n_int];
    for out in &outputs {
        triplets.extend_from_slice(&out.triplets);
        for &(i, v) in &out.rhs {
            rhs[i] += v;
        }
        stats.outer_points += out.stats.outer_points;
        stats.full_ball_points += out.stats.full_ball_points;
        stats.inner_points += out.stats.inner_points;
    }
    stats.full_hits = cache.full_hits();
    stats.partial_rules = cache.partial_count();
    Ok(DiscreteSystem { matrix: compress(n_int, triplets)?, rhs, constraint_values, stats })
}

/// Sums duplicate triplets in their input order and compresses by column.
pub fn compress(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<CscMatrix<f64>> {
    triplets.sort_by_key(|&(i, j, _)| (j, i));
    let mut offsets = vec![0usize; n + 1];
    let mut rows = Vec::with_capacity(triplets.len() / 2);
    let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
    let mut last = None;
    for (i, j, v) in triplets {
        if last == Some((i, j)) {
            *values.last_mut().expect("previous entry") += v;
        } else {
            rows.push(i);
            values.push(v);
            offsets[j + 1] += 1;
            last = Some((i, j));
        }
    }
    for j in 0..n {
        offsets[j + 1] += offsets[j];
    }
    CscMatrix::try_from_csc_data(n, n, offsets, rows, values).map_err(|e| Error::Solver(e.to_string()))
}

/// Stiffness matrix alone (zero source and constraint data).
pub fn assemble_stiffness(mesh: &Mesh, kernel: &Kernel, options: &QuadratureOptions) -> Result<CscMatrix<f64>> {
    let zero = |_: &Point| 0.0;
    Ok(assemble(mesh, kernel, options, &LoadData { source: &zero, boundary: &zero })?.matrix)
}

/// Load vector for a manufactured case.
pub fn assemble_rhs(mesh: &Mesh, kernel: &Kernel, options: &QuadratureOptions, case: &ManufacturedCase) -> Result<Vec<f64>> {
    Ok(assemble(mesh, kernel, options, &LoadData::from_case(case))?.rhs)
}

#[allow(clippy::too_many_arguments)]
fn assemble_chunk(
    mesh: &Mesh,
    cache: &RuleCache,
    outer: &ReferenceRule,
    body: &ReferenceRule,
    load: &LoadData<'_>,
    g: &[f64],
    elements: std::ops::Range<usize>,
    s: &mut Scratch,
) -> Result<ChunkOutput> {
    let n_int = mesh.num_interior();
    let domain = mesh.domain();
    let mut out = ChunkOutput { triplets: Vec::new(), rhs: Vec::new(), stats: AssemblyStats::default() };

    for e in elements {
        s.reset();
        let own = mesh.element_nodes(e);
        for &n in own {
            if n < n_int {
                s.register(n);
            }
        }
        let rule_x = OuterRule::on_element(mesh, e, outer);
        // first pass: locate inner points and collect the local node set
        let mut ranges = Vec::with_capacity(rule_x.points.len());
        for (q, x) in rule_x.points.iter().enumerate() {
            let rule = cache.rule_for(x)?;
            out.stats.outer_points += 1;
            if !rule.truncated {
                out.stats.full_ball_points += 1;
            }
            let start = s.inner.len();
            for (o, scaled) in rule.offsets.iter().zip(&rule.scaled) {
                let y = [x[0] + o[0], x[1] + o[1]];
                if !domain.in_computational(&y) {
                    continue;
                }
                let loc = mesh.locate(&y).ok_or(Error::Location { x: y[0], y: y[1], cx: x[0], cy: x[1] })?;
                for &n in mesh.element_nodes(loc.element) {
                    if n < n_int {
                        s.register(n);
                    }
                }
                s.inner.push((loc.element, loc.bary, rule_x.weights[q] * scaled));
            }
            ranges.push(start..s.inner.len());
        }
        out.stats.inner_points += s.inner.len();

        let n_loc = s.globals.len();
        s.dense.clear();
        s.dense.resize(n_loc * n_loc, 0.0);
        s.rhs.clear();
        s.rhs.resize(n_loc, 0.0);

        // second pass: accumulate W d dᵀ on the local interior set
        let mut coef: [(usize, f64); 6] = [(0, 0.0); 6];
        for (q, range) in ranges.into_iter().enumerate() {
            let phi_x = &rule_x.bary[q];
            for &(ey, bary_y, weight) in &s.inner[range] {
                let mut len = 0;
                let mut dg = 0.0;
                for (k, &n) in own.iter().enumerate() {
                    coef[len] = (n, -phi_x[k]);
                    len += 1;
                    dg -= phi_x[k] * g[n];
                }
                for (k, &n) in mesh.element_nodes(ey).iter().enumerate() {
                    coef[len] = (n, bary_y[k]);
                    len += 1;
                    dg += bary_y[k] * g[n];
                }
                for a in 0..len {
                    let (na, ca) = coef[a];
                    if na >= n_int || ca == 0.0 {
                        continue;
                    }
                    let la = s.local_of[na];
                    let wa = weight * ca;
                    s.rhs[la] -= wa * dg;
                    for &(nb, cb) in &coef[..len] {
                        if nb < n_int && cb != 0.0 {
                            s.dense[la * n_loc + s.local_of[nb]] += wa * cb;
                        }
                    }
                }
            }
        }

        if mesh.layer(e) == Layer::Omega {
            let rule_b = OuterRule::on_element(mesh, e, body);
            for ((x, bary), w) in rule_b.points.iter().zip(&rule_b.bary).zip(&rule_b.weights) {
                let f = (load.source)(x) * w;
                for (k, &n) in own.iter().enumerate() {
                    if n < n_int {
                        s.rhs[s.local_of[n]] += bary[k] * f;
                    }
                }
            }
        }

        // emit one value per unordered pair so that the matrix is exactly symmetric
        for la in 0..n_loc {
            let ga = s.globals[la];
            for lb in 0..n_loc {
                let gb = s.globals[lb];
                if ga > gb {
                    continue;
                }
                let v = s.dense[la * n_loc + lb];
                if v != 0.0 {
                    out.triplets.push((ga, gb, v));
                    if ga != gb {
                        out.triplets.push((gb, ga, v));
                    }
                }
            }
            if s.rhs[la] != 0.0 {
                out.rhs.push((ga, s.rhs[la]));
            }
        }
    }
    Ok(out)
}

/// Largest entry of `|A − Aᵀ|` relative to the largest entry of `|A|`.
pub fn symmetry_defect(matrix: &CscMatrix<f64>) -> f64 {
    let dense = nalgebra_sparse::convert::serial::convert_csc_dense(matrix);
    let scale = dense.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (&dense - dense.transpose()).amax() / scale
}
