//! Discretization errors against the local exact solution, measured on `Ω`.

use crate::error::{Error, Result};
use crate::gauss::{OuterRule, ReferenceRule};
use crate::mesh::{Layer, Mesh, NodeClass};
use crate::problems::ManufacturedCase;
use crate::space::FeField;

/// Default Gauss points per element for error integrals: `8^d`.
pub fn default_error_points(dim: usize) -> usize {
    8usize.pow(dim as u32)
}

fn integrate_over_omega(mesh: &Mesh, points: usize, mut f: impl FnMut(usize, &OuterRule) -> f64) -> Result<f64> {
    let reference = ReferenceRule::for_dim(mesh.dim(), points)?;
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        if mesh.layer(e) == Layer::Omega {
            total += f(e, &OuterRule::on_element(mesh, e, &reference));
        }
    }
    Ok(total)
}

fn squared_l2(field: &FeField, case: &ManufacturedCase, mesh: &Mesh, points: usize) -> Result<f64> {
    integrate_over_omega(mesh, points, |e, rule| {
        rule.points
            .iter()
            .zip(&rule.bary)
            .zip(&rule.weights)
            .map(|((x, b), w)| {
                let d = field.evaluate_in(mesh, e, b) - case.exact(x);
                d * d * w
            })
            .sum()
    })
}

/// `‖u^h − u₀‖_{L²(Ω)}`.
pub fn l2_error(field: &FeField, case: &ManufacturedCase, mesh: &Mesh, points: usize) -> Result<f64> {
    Ok(squared_l2(field, case, mesh, points)?.sqrt())
}

/// `‖u^h − u₀‖_{H¹(Ω)}`, value and gradient terms.
pub fn h1_error(field: &FeField, case: &ManufacturedCase, mesh: &Mesh, points: usize) -> Result<f64> {
    let value = squared_l2(field, case, mesh, points)?;
    let grad = integrate_over_omega(mesh, points, |e, rule| {
        let gh = field.gradient(mesh, e);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| {
                let g = case.gradient(x);
                ((gh[0] - g[0]).powi(2) + (gh[1] - g[1]).powi(2)) * w
            })
            .sum()
    })?;
    Ok((value + grad).sqrt())
}

/// Nodal errors of interior nodes binned by distance to `∂Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    /// `(lower distance, upper distance, max nodal error)`; empty bins hold 0.
    pub bins: Vec<(f64, f64, f64)>,
    /// Max nodal error within `2δ` of `∂Ω`.
    pub near_max: f64,
    /// Max nodal error farther than `2δ` from `∂Ω`.
    pub interior_max: f64,
}

impl BoundaryProfile {
    /// `near_max / interior_max`; infinite when the interior error vanishes.
    pub fn concentration(&self) -> f64 {
        if self.interior_max == 0.0 {
            if self.near_max == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.near_max / self.interior_max
        }
    }
}

pub fn boundary_error_profile(field: &FeField, case: &ManufacturedCase, mesh: &Mesh, bins: usize) -> Result<BoundaryProfile> {
    if bins == 0 {
        return Err(Error::InvalidInput("profile needs at least one bin".into()));
    }
    let domain = mesh.domain();
    let reach = (0..mesh.dim()).map(|a| 0.5 * (domain.upper()[a] - domain.lower()[a])).fold(f64::INFINITY, f64::min);
    let width = reach / bins as f64;
    let mut out = BoundaryProfile {
        bins: (0..bins).map(|k| (k as f64 * width, (k + 1) as f64 * width, 0.0)).collect(),
        near_max: 0.0,
        interior_max: 0.0,
    };
    let band = 2.0 * domain.horizon();
    for (n, x) in mesh.nodes().iter().enumerate() {
        if mesh.node_class(n) != NodeClass::Interior {
            continue;
        }
        let err = (field.values()[n] - case.exact(x)).abs();
        let d = domain.distance_to_boundary(x);
        let k = ((d / width) as usize).min(bins - 1);
        out.bins[k].2 = out.bins[k].2.max(err);
        if d <= band {
            out.near_max = out.near_max.max(err);
        } else {
            out.interior_max = out.interior_max.max(err);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxDomain;
    use crate::problems::{case_linear_1d, case_sin_1d, case_sin_2d};

    #[test]
    fn interpolant_of_linear_is_exact() {
        let mesh = Mesh::uniform_1d(0.1, &BoxDomain::unit(1, 0.2, 0.0).unwrap()).unwrap();
        let case = case_linear_1d();
        let u = FeField::interpolate(&mesh, |p| case.exact(p));
        assert!(l2_error(&u, &case, &mesh, 8).unwrap() <= 1e-14);
        assert!(h1_error(&u, &case, &mesh, 8).unwrap() <= 1e-13);
        let p = boundary_error_profile(&u, &case, &mesh, 5).unwrap();
        assert!(p.bins.iter().all(|b| b.2 < 1e-15));
    }

    #[test]
    fn interpolation_rates() {
        let case = case_sin_1d();
        let err = |h: f64| {
            let mesh = Mesh::uniform_1d(h, &BoxDomain::unit(1, h, 0.0).unwrap()).unwrap();
            let u = FeField::interpolate(&mesh, |p| case.exact(p));
            (l2_error(&u, &case, &mesh, 8).unwrap(), h1_error(&u, &case, &mesh, 8).unwrap())
        };
        let (a, b) = (err(1.0 / 32.0), err(1.0 / 64.0));
        assert!((a.0 / b.0 - 4.0).abs() < 0.1);
        assert!((a.1 / b.1 - 2.0).abs() < 0.1);
        assert!(a.1 >= a.0);
    }

    #[test]
    fn two_dimensional_error_is_small_for_fine_interpolant() {
        let case = case_sin_2d();
        let mesh = Mesh::uniform_2d(1.0 / 16.0, &BoxDomain::unit(2, 1.0 / 16.0, 0.0).unwrap()).unwrap();
        let u = FeField::interpolate(&mesh, |p| case.exact(p));
        let e = l2_error(&u, &case, &mesh, 64).unwrap();
        assert!(e > 0.0 && e < 0.05, "{e}");
    }
}
