//! Optimization-based inner quadrature over interaction balls.
//!
//! Points sit on a regular grid of spacing `h̄ = δ/N̄` that is symmetric about
//! the ball center and never contains it. Weights are the minimal Euclidean
//! norm solution of the exactness constraints
//!
//! ```text
//! Σ_j γ(c, x_j) (x_j − c)^β ω_j = ∫_{H(c,δ)} γ(c, y) (y − c)^β dy,   |β| = 2,
//! ```
//!
//! i.e. `ω = Bᵀ S⁺ g` with `S = B Bᵀ`. Balls clipped by the computational
//! region keep the full-ball right-hand side.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::mesh::{BallNorm, BoxDomain, Point};

/// Relative singular value cutoff for the pseudoinverse of `S`.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Inner grid resolution: `N̄` points per horizon along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerGridSpec {
    points_per_radius: usize,
    horizon: f64,
    dim: usize,
}

impl InnerGridSpec {
    pub fn new(points_per_radius: usize, horizon: f64, dim: usize) -> Result<Self> {
        if points_per_radius == 0 {
            return Err(Error::InvalidInput("inner grid needs at least one point per radius".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self { points_per_radius, horizon, dim })
    }

    pub fn points_per_radius(&self) -> usize {
        self.points_per_radius
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `h̄ = δ / N̄`.
    pub fn spacing(&self) -> f64 {
        self.horizon / self.points_per_radius as f64
    }

    /// `(2N̄)^d`.
    pub fn raw_count(&self) -> usize {
        (2 * self.points_per_radius).pow(self.dim as u32)
    }
}

/// Grid offsets `y − c`; component `a` equals `odd[a]·h̄/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSet {
    spec: InnerGridSpec,
    odd: Vec<[i64; 2]>,
    offsets: Vec<Point>,
}

impl OffsetSet {
    pub fn spec(&self) -> &InnerGridSpec {
        &self.spec
    }

    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    /// Odd integer multipliers of `h̄/2` per offset.
    pub fn odd_indices(&self) -> &[[i64; 2]] {
        &self.odd
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    fn select(&self, keep: impl Fn(usize) -> bool) -> OffsetSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        OffsetSet {
            spec: self.spec,
            odd: idx.iter().map(|&i| self.odd[i]).collect(),
            offsets: idx.iter().map(|&i| self.offsets[i]).collect(),
        }
    }
}

/// Full tensor grid of `(2N̄)^d` offsets, `(2k − sgn k)·h̄/2` per axis.
pub fn generate_offsets(spec: &InnerGridSpec) -> OffsetSet {
    let n = spec.points_per_radius as i64;
    let axis: Vec<i64> = (-n..=n).filter(|&k| k != 0).map(|k| 2 * k - k.signum()).collect();
    let half = 0.5 * spec.spacing();
    let mut odd = Vec::with_capacity(spec.raw_count());
    if spec.dim == 1 {
        odd.extend(axis.iter().map(|&a| [a, 0]));
    } else {
        for &b in &axis {
            for &a in &axis {
                odd.push([a, b]);
            }
        }
    }
    let offsets = odd.iter().map(|o| [o[0] as f64 * half, o[1] as f64 * half]).collect();
    OffsetSet { spec: *spec, odd, offsets }
}

/// Keeps the offsets in the closed ball of radius `δ`. The test runs on the
/// integer multipliers, so it is exact.
pub fn filter_to_ball(set: &OffsetSet, norm: BallNorm) -> Result<OffsetSet> {
    let radius = 2 * set.spec.points_per_radius as i64;
    let kept = set.select(|i| {
        let o = set.odd[i];
        match norm {
            BallNorm::Euclidean => o[0] * o[0] + o[1] * o[1] <= radius * radius,
            BallNorm::Max => o[0].abs().max(o[1].abs()) <= radius,
        }
    });
    if kept.is_empty() {
        return Err(Error::NoQuadraturePoints);
    }
    Ok(kept)
}

/// One row per `|β| = 2`, entries `γ(c, x_j)(x_j − c)^β`.
pub fn constraint_matrix(kernel: &Kernel, center: &Point, points: &[Point]) -> Result<DMatrix<f64>> {
    let indices = kernel.moment_indices();
    let mut b = DMatrix::zeros(indices.len(), points.len());
    let tiny = 1e-14 * kernel.horizon();
    for (j, p) in points.iter().enumerate() {
        let s = [p[0] - center[0], p[1] - center[1]];
        let r = kernel.norm().norm(&s[..kernel.dim()]);
        if r < tiny {
            return Err(Error::SingularConstraint);
        }
        let g = kernel.profile(r);
        for (row, beta) in indices.iter().enumerate() {
            b[(row, j)] = g * s[0].powi(beta[0] as i32) * s[1].powi(beta[1] as i32);
        }
    }
    Ok(b)
}

/// Minimal-norm weights `ω = Bᵀ S⁺ g` and the constraint residual `|Bω − g|`.
pub fn solve_weights(b: &DMatrix<f64>, g: &[f64]) -> Result<(Vec<f64>, f64)> {
    if b.nrows() != g.len() {
        return Err(Error::InvalidInput(format!("constraint matrix has {} rows but {} moments were given", b.nrows(), g.len())));
    }
    let s = b * b.transpose();
    let svd = s.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if !(sigma_max > 0.0) {
        return Err(Error::DegenerateConstraints);
    }
    let pinv = svd.pseudo_inverse(RANK_TOLERANCE * sigma_max).map_err(|e| Error::Solver(e.to_string()))?;
    let g = DVector::from_column_slice(g);
    let omega = b.transpose() * (pinv * &g);
    let residual = (b * &omega - &g).norm();
    Ok((omega.iter().copied().collect(), residual))
}

/// Inner quadrature for one ball.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerRule {
    /// Offsets from the ball center.
    pub offsets: Vec<Point>,
    pub weights: Vec<f64>,
    /// `γ(c, c + offset)·ω` per point.
    pub scaled: Vec<f64>,
    pub truncated: bool,
    pub residual: f64,
}

impl InnerRule {
    fn build(kernel: &Kernel, offsets: Vec<Point>, truncated: bool) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::NoQuadraturePoints);
        }
        let b = constraint_matrix(kernel, &[0.0, 0.0], &offsets)?;
        let (weights, residual) = solve_weights(&b, &kernel.exact_moments())?;
        let scaled = offsets.iter().zip(&weights).map(|(o, w)| kernel.profile(kernel.norm().norm(&o[..kernel.dim()])) * w).collect();
        Ok(Self { offsets, weights, scaled, truncated, residual })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// CSV with one row per point: offset components then weight.
    pub fn write_csv<W: Write>(&self, dim: usize, mut out: W) -> Result<()> {
        if dim == 1 {
            writeln!(out, "offset_x,weight")?;
        } else {
            writeln!(out, "offset_x,offset_y,weight")?;
        }
        for (o, w) in self.offsets.iter().zip(&self.weights) {
            if dim == 1 {
                writeln!(out, "{:e},{:e}", o[0], w)?;
            } else {
                writeln!(out, "{:e},{:e},{:e}", o[0], o[1], w)?;
            }
        }
        Ok(())
    }
}

/// Rule for a ball that lies entirely in the extended region.
pub fn full_ball_rule(kernel: &Kernel, spec: &InnerGridSpec) -> Result<InnerRule> {
    check_compatible(kernel, spec)?;
    let ball = filter_to_ball(&generate_offsets(spec), kernel.norm())?;
    InnerRule::build(kernel, ball.offsets, false)
}

fn check_compatible(kernel: &Kernel, spec: &InnerGridSpec) -> Result<()> {
    if kernel.dim() != spec.dim() || (kernel.horizon() - spec.horizon()).abs() > 1e-14 * spec.horizon() {
        return Err(Error::InvalidInput("kernel and inner grid disagree on dimension or horizon".into()));
    }
    Ok(())
}

/// Truncated-ball rule expressed in absolute points: weights are solved on the
/// grid points inside `Ω ∪ BΩ ∪ BΩ^{t_e}`, then the points outside `Ω ∪ BΩ`
/// are dropped together with their weights.
pub fn truncated_ball_rule(kernel: &Kernel, center: &Point, domain: &BoxDomain, spec: &InnerGridSpec) -> Result<(Vec<Point>, InnerRule)> {
    let cache = RuleCache::new(*kernel, *spec, domain.clone())?;
    let rule = cache.rule_for(center)?;
    let mut points = Vec::new();
    let mut kept =
        InnerRule { offsets: Vec::new(), weights: Vec::new(), scaled: Vec::new(), truncated: rule.truncated, residual: rule.residual };
    for i in 0..rule.len() {
        let o = rule.offsets[i];
        let y = [center[0] + o[0], center[1] + o[1]];
        if domain.in_computational(&y) {
            points.push(y);
            kept.offsets.push(o);
            kept.weights.push(rule.weights[i]);
            kept.scaled.push(rule.scaled[i]);
        }
    }
    kept.truncated |= kept.len() < rule.len();
    if kept.is_empty() {
        return Err(Error::NoQuadraturePoints);
    }
    Ok((points, kept))
}

/// Closed-form minimal-norm weights for the constant 1D kernel on a full ball:
/// `ω_k = 20 δ N̄ (2k − sgn k)² / (7 − 40N̄² + 48N̄⁴)`, `k = −N̄..−1, 1..N̄`.
pub fn closed_form_weights_1d_constant(points_per_radius: usize, horizon: f64) -> Vec<f64> {
    let n = points_per_radius as i64;
    let nf = n as f64;
    let denom = 7.0 - 40.0 * nf * nf + 48.0 * nf.powi(4);
    (-n..=n)
        .filter(|&k| k != 0)
        .map(|k| {
            let a = (2 * k - k.signum()) as f64;
            20.0 * horizon * nf * a * a / denom
        })
        .collect()
}

/// Per-solve cache of inner rules. The full-ball rule is built once; clipped
/// balls are keyed by the inclusion bitmask of their retained grid offsets.
pub struct RuleCache {
    kernel: Kernel,
    spec: InnerGridSpec,
    domain: BoxDomain,
    ball: OffsetSet,
    full: OnceLock<Arc<InnerRule>>,
    partial: RwLock<HashMap<Vec<u64>, Arc<InnerRule>>>,
    full_hits: AtomicUsize,
    partial_solves: AtomicUsize,
}

impl RuleCache {
    pub fn new(kernel: Kernel, spec: InnerGridSpec, domain: BoxDomain) -> Result<Self> {
        check_compatible(&kernel, &spec)?;
        if domain.dim() != kernel.dim() {
            return Err(Error::InvalidInput("domain and kernel dimensions differ".into()));
        }
        let ball = filter_to_ball(&generate_offsets(&spec), kernel.norm())?;
        Ok(Self {
            kernel,
            spec,
            domain,
            ball,
            full: OnceLock::new(),
            partial: RwLock::new(HashMap::new()),
            full_hits: AtomicUsize::new(0),
            partial_solves: AtomicUsize::new(0),
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn spec(&self) -> &InnerGridSpec {
        &self.spec
    }

    /// In-ball grid offsets before any clipping.
    pub fn ball(&self) -> &OffsetSet {
        &self.ball
    }

    pub fn full_rule(&self) -> Result<Arc<InnerRule>> {
        if let Some(rule) = self.full.get() {
            self.full_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(rule.clone());
        }
        let rule = Arc::new(InnerRule::build(&self.kernel, self.ball.offsets.clone(), false)?);
        // a concurrent builder may have won; both produced identical values
        Ok(self.full.get_or_init(|| rule).clone())
    }

    /// Rule whose weights apply at `center` before dropping points outside `Ω ∪ BΩ`.
    pub fn rule_for(&self, center: &Point) -> Result<Arc<InnerRule>> {
        let n = self.ball.len();
        let mut mask = vec![0u64; n.div_ceil(64)];
        let mut all = true;
        for (i, o) in self.ball.offsets.iter().enumerate() {
            let y = [center[0] + o[0], center[1] + o[1]];
            if self.domain.in_extended(&y) {
                mask[i / 64] |= 1 << (i % 64);
            } else {
                all = false;
            }
        }
        if all {
            return self.full_rule();
        }
        if let Some(rule) = self.partial.read().expect("rule cache poisoned").get(&mask) {
            return Ok(rule.clone());
        }
        let offsets: Vec<Point> = (0..n).filter(|i| mask[i / 64] >> (i % 64) & 1 == 1).map(|i| self.ball.offsets[i]).collect();
        let rule = Arc::new(InnerRule::build(&self.kernel, offsets, true)?);
        self.partial_solves.fetch_add(1, Ordering::Relaxed);
        let mut map = self.partial.write().expect("rule cache poisoned");
        Ok(map.entry(mask).or_insert(rule).clone())
    }

    /// Number of full-ball requests served from the cache.
    pub fn full_hits(&self) -> usize {
        self.full_hits.load(Ordering::Relaxed)
    }

    /// Number of distinct clipped-ball rules stored.
    pub fn partial_count(&self) -> usize {
        self.partial.read().expect("rule cache poisoned").len()
    }
}
