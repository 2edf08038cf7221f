//! Manufactured local solutions with their sources and volume-constraint data.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Point;

/// A closed-form exact solution `u₀` with `b = −Δu₀` and `g = u₀` on the layer.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    name: &'static str,
    dim: usize,
    exact: fn(&Point) -> f64,
    gradient: fn(&Point) -> [f64; 2],
    source: fn(&Point) -> f64,
}

impl ManufacturedCase {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exact(&self, x: &Point) -> f64 {
        (self.exact)(x)
    }

    pub fn gradient(&self, x: &Point) -> [f64; 2] {
        (self.gradient)(x)
    }

    pub fn source(&self, x: &Point) -> f64 {
        (self.source)(x)
    }

    /// Volume-constraint data; the same formula as the exact solution.
    pub fn boundary(&self, x: &Point) -> f64 {
        (self.exact)(x)
    }

    pub fn source_fn(&self) -> &(dyn Fn(&Point) -> f64 + Sync) {
        &self.source
    }

    pub fn boundary_fn(&self) -> &(dyn Fn(&Point) -> f64 + Sync) {
        &self.exact
    }
}

/// `u₀ = sin(2πx)`.
pub fn case_sin_1d() -> ManufacturedCase {
    ManufacturedCase {
        name: "sin1d",
        dim: 1,
        exact: |x| (2.0 * PI * x[0]).sin(),
        gradient: |x| [2.0 * PI * (2.0 * PI * x[0]).cos(), 0.0],
        source: |x| 4.0 * PI * PI * (2.0 * PI * x[0]).sin(),
    }
}

/// `u₀ = x`, zero source: the patch test.
pub fn case_linear_1d() -> ManufacturedCase {
    ManufacturedCase { name: "linear1d", dim: 1, exact: |x| x[0], gradient: |_| [1.0, 0.0], source: |_| 0.0 }
}

/// `u₀ = sin(2πx₁) sin(2πx₂)`.
pub fn case_sin_2d() -> ManufacturedCase {
    ManufacturedCase {
        name: "sin2d",
        dim: 2,
        exact: |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin(),
        gradient: |x| {
            let (s0, c0) = (2.0 * PI * x[0]).sin_cos();
            let (s1, c1) = (2.0 * PI * x[1]).sin_cos();
            [2.0 * PI * c0 * s1, 2.0 * PI * s0 * c1]
        },
        source: |x| 8.0 * PI * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin(),
    }
}

pub fn case_by_name(name: &str) -> Result<ManufacturedCase> {
    match name {
        "sin1d" => Ok(case_sin_1d()),
        "linear1d" => Ok(case_linear_1d()),
        "sin2d" => Ok(case_sin_2d()),
        other => Err(Error::Config(format!("unknown case `{other}` (expected sin1d, linear1d or sin2d)"))),
    }
}
