//! Continuous piecewise-linear nodal functions on a [`Mesh`].

use std::io::Write;

use crate::error::Result;
use crate::mesh::{Mesh, NodeClass, Point};

/// Nodal coefficients for every mesh node (interior and constraint).
#[derive(Debug, Clone, PartialEq)]
pub struct FeField {
    values: Vec<f64>,
}

impl FeField {
    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_nodes(), "one coefficient per node");
        Self { values }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(&Point) -> f64) -> Self {
        Self { values: mesh.nodes().iter().map(f).collect() }
    }

    /// `u^h = w^h + g^h`: interior coefficients from the solve, constraint
    /// nodes from the nodal values of `g`.
    pub fn reconstruct(mesh: &Mesh, interior: &[f64], g: impl Fn(&Point) -> f64) -> Self {
        assert_eq!(interior.len(), mesh.num_interior());
        let values = (0..mesh.num_nodes())
            .map(|n| match mesh.node_class(n) {
                NodeClass::Interior => interior[n],
                NodeClass::Constraint => g(&mesh.nodes()[n]),
            })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`, or an error outside the computational region.
    pub fn evaluate(&self, mesh: &Mesh, x: &Point) -> Result<f64> {
        let loc = mesh.locate_or_err(x)?;
        Ok(self.evaluate_in(mesh, loc.element, &loc.bary))
    }

    pub fn evaluate_in(&self, mesh: &Mesh, e: usize, bary: &[f64; 3]) -> f64 {
        mesh.element_nodes(e).iter().zip(bary).map(|(&n, b)| b * self.values[n]).sum()
    }

    /// Constant gradient on element `e`.
    pub fn gradient(&self, mesh: &Mesh, e: usize) -> [f64; 2] {
        let grads = mesh.basis_gradients(e);
        let mut g = [0.0; 2];
        for (&n, dg) in mesh.element_nodes(e).iter().zip(grads) {
            g[0] += self.values[n] * dg[0];
            g[1] += self.values[n] * dg[1];
        }
        g
    }

    /// CSV with one row per node: id, coordinates, value.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh, mut out: W) -> Result<()> {
        let two = mesh.dim() == 2;
        writeln!(out, "{}", if two { "node,x,y,u" } else { "node,x,u" })?;
        for (i, (p, u)) in mesh.nodes().iter().zip(&self.values).enumerate() {
            if two {
                writeln!(out, "{i},{},{},{}", p[0], p[1], u)?;
            } else {
                writeln!(out, "{i},{},{}", p[0], u)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoxDomain;

    #[test]
    fn reconstruction_and_evaluation() {
        let domain = BoxDomain::unit(1, 0.25, 0.0).unwrap();
        let mesh = Mesh::uniform_1d(0.25, &domain).unwrap();
        let interior: Vec<f64> = (0..mesh.num_interior()).map(|i| 10.0 + i as f64).collect();
        let u = FeField::reconstruct(&mesh, &interior, |p| -p[0]);
        for (n, &x) in mesh.nodes().iter().enumerate() {
            let v = u.evaluate(&mesh, &x).unwrap();
            match mesh.node_class(n) {
                NodeClass::Interior => assert_eq!(v, interior[n]),
                NodeClass::Constraint => assert_eq!(v, -x[0]),
            }
        }
        let (a, b) = (u.evaluate(&mesh, &[0.25, 0.0]).unwrap(), u.evaluate(&mesh, &[0.5, 0.0]).unwrap());
        assert!((u.evaluate(&mesh, &[0.375, 0.0]).unwrap() - 0.5 * (a + b)).abs() < 1e-14);
        assert!(u.evaluate(&mesh, &[1.3, 0.0]).is_err());
    }

    #[test]
    fn gradients_of_interpolated_plane() {
        let domain = BoxDomain::unit(2, 0.25, 0.0).unwrap();
        let mesh = Mesh::uniform_2d(0.125, &domain).unwrap();
        let u = FeField::interpolate(&mesh, |p| 2.0 * p[0] - 3.0 * p[1] + 1.0);
        for e in 0..mesh.num_elements() {
            let g = u.gradient(&mesh, e);
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
    }
}
