//! Consistency gap between the exact nonlocal form and its quadrature (1D).
//!
//! `D(u, v) = ∫∫ (u(y) − u(x)) (v(y) − v(x)) γ(x, y) dy dx` over the
//! computational interval. For piecewise-linear `u, v` the inner integral is
//! evaluated in closed form segment by segment; on each segment the integrand
//! is `(P_u + Q_u s)(P_v + Q_v s) γ(s)` with `s = y − x`. The outer integral is
//! split wherever the inner integrand changes form and then integrated with
//! Gauss rules graded toward the split points.
//!
//! The quadrature form `D^h` uses the same inner rules as assembly, but its
//! outer integral is also split at every kink, so the gap measures the inner
//! quadrature alone.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss::legendre_unit;
use crate::gmls::{InnerGridSpec, RuleCache};
use crate::kernel::{Kernel, KernelKind};
use crate::mesh::{Mesh, NodeClass};
use crate::space::FeField;

/// Levels of geometric grading toward each end of an outer sub-interval.
const GRADING_LEVELS: usize = 10;
/// Gauss points per graded piece for the exact form.
const EXACT_POINTS: usize = 12;

fn require_1d(mesh: &Mesh, kernel: &Kernel) -> Result<()> {
    if mesh.dim() != 1 || kernel.dim() != 1 {
        return Err(Error::Unsupported("consistency gap is implemented for 1D meshes only".into()));
    }
    if (kernel.horizon() - mesh.domain().horizon()).abs() > 1e-12 * kernel.horizon() {
        return Err(Error::InvalidInput("kernel horizon differs from the mesh horizon".into()));
    }
    Ok(())
}

fn sorted_breaks(mut points: Vec<f64>, a: f64, b: f64) -> Vec<f64> {
    points.push(a);
    points.push(b);
    points.retain(|p| *p >= a && *p <= b);
    points.sort_by(f64::total_cmp);
    let tol = 1e-13 * (b - a);
    points.dedup_by(|p, q| (*p - *q).abs() <= tol);
    points
}

/// Element of the (sorted) breakpoint list holding `x`, together with the
/// basis values of its two nodes at `x`.
fn element_at(axis: &[f64], x: f64) -> (usize, [f64; 2]) {
    let k = axis.partition_point(|b| *b < x).clamp(1, axis.len() - 1) - 1;
    let t = (x - axis[k]) / (axis[k + 1] - axis[k]);
    (k, [1.0 - t, t])
}

/// `∫ γ s^k ds` over `[s0, s1]` for `k = 0, 1, 2`; the zeroth moment is
/// skipped (returned as 0) for segments touching `s = 0`.
fn kernel_moments(kernel: &Kernel, s0: f64, s1: f64) -> [f64; 3] {
    let delta = kernel.horizon();
    match kernel.kind() {
        KernelKind::Constant => {
            let c = kernel.zeta() / delta.powi(3);
            [c * (s1 - s0), c * (s1 * s1 - s0 * s0) / 2.0, c * (s1.powi(3) - s0.powi(3)) / 3.0]
        }
        KernelKind::Rational => {
            let c = kernel.zeta() / delta.powi(2);
            let sign = if s0 >= 0.0 { 1.0 } else { -1.0 };
            let m0 = if s0 == 0.0 || s1 == 0.0 {
                0.0
            } else if s0 > 0.0 {
                c * (s1 / s0).ln()
            } else {
                c * (s0 / s1).ln()
            };
            [m0, sign * c * (s1 - s0), sign * c * (s1 * s1 - s0 * s0) / 2.0]
        }
    }
}

/// Dense matrix `M_ij = D(ψ_j, ψ_i)` over all nodes, with exact inner integrals.
pub fn exact_form_matrix(mesh: &Mesh, kernel: &Kernel) -> Result<DMatrix<f64>> {
    require_1d(mesh, kernel)?;
    let axis = &mesh.axes()[0];
    let (a, b) = (axis[0], axis[axis.len() - 1]);
    let delta = kernel.horizon();
    let node = |k: usize| mesh.grid_node(k, 0);
    let mut breaks: Vec<f64> = axis.clone();
    breaks.extend(axis.iter().map(|p| p - delta));
    breaks.extend(axis.iter().map(|p| p + delta));
    let breaks = sorted_breaks(breaks, a, b);

    let n = mesh.num_nodes();
    let mut m = DMatrix::zeros(n, n);
    let (gx, gw) = legendre_unit(EXACT_POINTS);
    for win in breaks.windows(2) {
        for (lo, hi) in graded_pieces(win[0], win[1]) {
            for (t, w) in gx.iter().zip(&gw) {
                let x = lo + (hi - lo) * t;
                let wx = w * (hi - lo);
                let (ex, phi) = element_at(axis, x);
                inner_exact(kernel, axis, &node, x, ex, phi, a, b, wx, &mut m);
            }
        }
    }
    Ok(m)
}

fn graded_pieces(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut cuts = vec![lo];
    for k in (1..GRADING_LEVELS).rev() {
        cuts.push(lo + half / (1u64 << k) as f64);
    }
    cuts.push(mid);
    for k in 1..GRADING_LEVELS {
        cuts.push(hi - half / (1u64 << k) as f64);
    }
    cuts.push(hi);
    cuts.windows(2).map(|c| (c[0], c[1])).collect()
}

#[allow(clippy::too_many_arguments)]
fn inner_exact(
    kernel: &Kernel,
    axis: &[f64],
    node: &impl Fn(usize) -> usize,
    x: f64,
    ex: usize,
    phi: [f64; 2],
    a: f64,
    b: f64,
    wx: f64,
    m: &mut DMatrix<f64>,
) {
    let delta = kernel.horizon();
    let y_lo = (x - delta).max(a);
    let y_hi = (x + delta).min(b);
    let first = axis.partition_point(|p| *p <= y_lo).clamp(1, axis.len() - 1) - 1;
    let own = [node(ex), node(ex + 1)];
    let mut k = first;
    while k + 1 < axis.len() && axis[k] < y_hi {
        let (x0, x1) = (axis[k], axis[k + 1]);
        let seg_lo = x0.max(y_lo);
        let seg_hi = x1.min(y_hi);
        if seg_hi > seg_lo {
            let len = x1 - x0;
            // ψ on this element, extended linearly: value at x and slope
            let ext = [((x1 - x) / len, -1.0 / len), ((x - x0) / len, 1.0 / len)];
            let ids = [node(k), node(k + 1)];
            let mut coef: [(usize, f64, f64); 4] = [(0, 0.0, 0.0); 4];
            let mut count = 0;
            for (i, &id) in ids.iter().enumerate() {
                coef[count] = (id, ext[i].0, ext[i].1);
                count += 1;
            }
            for (i, &id) in own.iter().enumerate() {
                if let Some(c) = coef[..count].iter_mut().find(|c| c.0 == id) {
                    c.1 -= phi[i];
                } else {
                    coef[count] = (id, -phi[i], 0.0);
                    count += 1;
                }
            }
            // split at s = 0 when x lies inside this segment
            let pieces: [(f64, f64); 2] =
                if seg_lo < x && x < seg_hi { [(seg_lo, x), (x, seg_hi)] } else { [(seg_lo, seg_hi), (0.0, 0.0)] };
            let local = k == ex;
            for (p0, p1) in pieces {
                if p1 <= p0 {
                    continue;
                }
                let mom = kernel_moments(kernel, p0 - x, p1 - x);
                for &(i, pi, qi) in &coef[..count] {
                    let pi = if local { 0.0 } else { pi };
                    for &(j, pj, qj) in &coef[..count] {
                        let pj = if local { 0.0 } else { pj };
                        m[(i, j)] += wx * (pi * pj * mom[0] + (pi * qj + qi * pj) * mom[1] + qi * qj * mom[2]);
                    }
                }
            }
        }
        k += 1;
    }
}

/// Dense matrix `M^h_ij = D^h(ψ_j, ψ_i)` over all nodes using the inner rules
/// of `spec` and kink-split outer integration with `outer_points` per piece.
pub fn quadrature_form_matrix(mesh: &Mesh, kernel: &Kernel, spec: &InnerGridSpec, outer_points: usize) -> Result<DMatrix<f64>> {
    require_1d(mesh, kernel)?;
    if outer_points == 0 {
        return Err(Error::InvalidInput("outer rule needs at least one point".into()));
    }
    let cache = RuleCache::new(*kernel, *spec, mesh.domain().clone())?;
    let axis = &mesh.axes()[0];
    let (a, b) = (axis[0], axis[axis.len() - 1]);
    let ext = mesh.domain().extension();
    let node = |k: usize| mesh.grid_node(k, 0);
    let mut breaks: Vec<f64> = axis.clone();
    for o in cache.ball().offsets() {
        breaks.extend(axis.iter().map(|p| p - o[0]));
        breaks.push(a - ext - o[0]);
        breaks.push(b + ext - o[0]);
    }
    let breaks = sorted_breaks(breaks, a, b);

    let n = mesh.num_nodes();
    let mut m = DMatrix::zeros(n, n);
    let (gx, gw) = legendre_unit(outer_points);
    for win in breaks.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        for (t, w) in gx.iter().zip(&gw) {
            let x = lo + (hi - lo) * t;
            let wx = w * (hi - lo);
            let (ex, phi) = element_at(axis, x);
            let own = [node(ex), node(ex + 1)];
            let rule = cache.rule_for(&[x, 0.0])?;
            for (o, scaled) in rule.offsets.iter().zip(&rule.scaled) {
                let y = x + o[0];
                if y < a || y > b {
                    continue;
                }
                let (ey, psi) = element_at(axis, y);
                let coef = [(own[0], -phi[0]), (own[1], -phi[1]), (node(ey), psi[0]), (node(ey + 1), psi[1])];
                let weight = wx * scaled;
                for &(i, ci) in &coef {
                    for &(j, cj) in &coef {
                        m[(i, j)] += weight * ci * cj;
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `|D(v, w) − D^h(v, w)|`.
pub fn strang_gap(mesh: &Mesh, kernel: &Kernel, spec: &InnerGridSpec, v: &FeField, w: &FeField, outer_points: usize) -> Result<f64> {
    let exact = exact_form_matrix(mesh, kernel)?;
    let quad = quadrature_form_matrix(mesh, kernel, spec, outer_points)?;
    let diff = exact - quad;
    let (vv, ww) = (nalgebra::DVector::from_column_slice(v.values()), nalgebra::DVector::from_column_slice(w.values()));
    Ok(ww.dot(&(diff * vv)).abs())
}

/// `sup_{w ∈ V₀^h} |D(v, w) − D^h(v, w)| / ‖w‖_D`, where `‖w‖²_D = D(w, w)`.
pub fn sup_normalized_gap(mesh: &Mesh, kernel: &Kernel, spec: &InnerGridSpec, v: &FeField, outer_points: usize) -> Result<f64> {
    let exact = exact_form_matrix(mesh, kernel)?;
    let quad = quadrature_form_matrix(mesh, kernel, spec, outer_points)?;
    let interior: Vec<usize> = (0..mesh.num_nodes()).filter(|&n| mesh.node_class(n) == NodeClass::Interior).collect();
    let vv = nalgebra::DVector::from_column_slice(v.values());
    let full = (&exact - quad) * vv;
    let r = nalgebra::DVector::from_iterator(interior.len(), interior.iter().map(|&i| full[i]));
    let a = exact.select_rows(&interior).select_columns(&interior);
    let chol = a.cholesky().ok_or_else(|| Error::Solver("exact form is not positive definite on V₀^h".into()))?;
    Ok(r.dot(&chol.solve(&r)).sqrt())
}
