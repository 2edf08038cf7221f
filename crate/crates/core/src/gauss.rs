//! Gauss–Legendre rules on segments and collapsed-coordinate rules on triangles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Nodes and weights on `[-1, 1]` (Newton iteration on the Legendre recurrence).
pub fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Nodes and weights on `[0, 1]`.
pub fn legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = legendre(n);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

/// A rule on the reference simplex in barycentric form; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl ReferenceRule {
    /// `n`-point Gauss rule on a segment.
    pub fn segment(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("quadrature order must be at least 1".into()));
        }
        let (x, w) = legendre_unit(n);
        Ok(Self { bary: x.iter().map(|&t| [1.0 - t, t, 0.0]).collect(), weights: w })
    }

    /// Tensor Gauss rule with `points` = n² entries collapsed onto the triangle.
    pub fn triangle(points: usize) -> Result<Self> {
        let n = (points as f64).sqrt().round() as usize;
        if n == 0 || n * n != points {
            return Err(Error::InvalidInput(format!("triangle rules need a square point count (n×n), got {points}")));
        }
        let (x, w) = legendre_unit(n);
        let mut bary = Vec::with_capacity(points);
        let mut weights = Vec::with_capacity(points);
        for (i, &u) in x.iter().enumerate() {
            for (j, &v) in x.iter().enumerate() {
                let xi = u;
                let eta = (1.0 - u) * v;
                bary.push([1.0 - xi - eta, xi, eta]);
                // reference area 1/2, normalised to unit total weight
                weights.push(2.0 * w[i] * w[j] * (1.0 - u));
            }
        }
        Ok(Self { bary, weights })
    }

    /// Reference rule appropriate for the mesh dimension; `points` is the total count.
    pub fn for_dim(dim: usize, points: usize) -> Result<Self> {
        match dim {
            1 => Self::segment(points),
            2 => Self::triangle(points),
            _ => Err(Error::InvalidInput(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Quadrature points and weights on one physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRule {
    pub points: Vec<Point>,
    /// Basis values of the element's vertices at each point.
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl OuterRule {
    pub fn on_element(mesh: &Mesh, e: usize, reference: &ReferenceRule) -> Self {
        let measure = mesh.measure(e);
        Self {
            points: reference.bary.iter().map(|b| mesh.map_to_physical(e, b)).collect(),
            bary: reference.bary.clone(),
            weights: reference.weights.iter().map(|w| w * measure).collect(),
        }
    }
}
