//! Radial kernels with compact support on the interaction ball.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gauss;
use crate::mesh::{BallNorm, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `ζ / δ^{d+2}` inside the ball.
    Constant,
    /// `ζ / (δ^{d+1} |y − x|)` inside the ball.
    Rational,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Constant => "constant",
            KernelKind::Rational => "rational",
        }
    }
}

/// Scaling for which the nonlocal operator tends to the Laplacian as `δ → 0`
/// (Euclidean balls).
pub fn default_zeta(kind: KernelKind, dim: usize) -> Result<f64> {
    match (kind, dim) {
        (KernelKind::Constant, 1) => Ok(1.5),
        (KernelKind::Rational, 1) => Ok(1.0),
        (KernelKind::Constant, 2) => Ok(4.0 / PI),
        (KernelKind::Rational, 2) => Ok(3.0 / PI),
        _ => Err(Error::InvalidInput(format!("no kernel for dimension {dim}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    dim: usize,
    horizon: f64,
    zeta: f64,
    norm: BallNorm,
}

impl Kernel {
    pub fn new(kind: KernelKind, dim: usize, horizon: f64, zeta: f64, norm: BallNorm) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("kernel dimension must be 1 or 2, got {dim}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(Error::InvalidInput(format!("zeta must be positive, got {zeta}")));
        }
        Ok(Self { kind, dim, horizon, zeta, norm })
    }

    /// Kernel with the default scaling and a Euclidean ball.
    pub fn standard(kind: KernelKind, dim: usize, horizon: f64) -> Result<Self> {
        Self::new(kind, dim, horizon, default_zeta(kind, dim)?, BallNorm::Euclidean)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn norm(&self) -> BallNorm {
        self.norm
    }

    /// Same kernel at another horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.kind, self.dim, horizon, self.zeta, self.norm)
    }

    /// `|y − x|` in the ball norm.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        let d = [y[0] - x[0], y[1] - x[1]];
        self.norm.norm(&d[..self.dim])
    }

    /// Kernel value as a function of the ball-norm distance `r > 0`.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        if r > self.horizon {
            return 0.0;
        }
        let d = self.dim as i32;
        match self.kind {
            KernelKind::Constant => self.zeta / self.horizon.powi(d + 2),
            KernelKind::Rational => self.zeta / (self.horizon.powi(d + 1) * r),
        }
    }

    pub fn evaluate(&self, x: &Point, y: &Point) -> Result<f64> {
        let r = self.distance(x, y);
        if r == 0.0 && self.kind == KernelKind::Rational {
            return Err(Error::SingularEvaluation);
        }
        Ok(self.profile(r))
    }

    /// Multi-indices `β` with `|β| = 2`, in the order used for constraint rows.
    pub fn moment_indices(&self) -> &'static [[u32; 2]] {
        if self.dim == 1 {
            &[[2, 0]]
        } else {
            &[[2, 0], [1, 1], [0, 2]]
        }
    }

    /// `∫_{H(x,δ)} γ(x,y)(y−x)^β dy` for every `|β| = 2`.
    pub fn exact_moments(&self) -> Vec<f64> {
        let z = self.zeta;
        match (self.dim, self.norm) {
            (1, _) => match self.kind {
                KernelKind::Constant => vec![2.0 * z / 3.0],
                KernelKind::Rational => vec![z],
            },
            (_, BallNorm::Euclidean) => {
                let diag = match self.kind {
                    KernelKind::Constant => z * PI / 4.0,
                    KernelKind::Rational => z * PI / 3.0,
                };
                vec![diag, 0.0, diag]
            }
            (_, BallNorm::Max) => self.square_moments(),
        }
    }

    /// Moments over the square ball, integrated sector by sector. Within each
    /// sector the max-norm is one fixed coordinate, so a collapsed Gauss rule
    /// integrates the (polynomial) integrand exactly.
    fn square_moments(&self) -> Vec<f64> {
        let (nodes, weights) = gauss::legendre_unit(12);
        let delta = self.horizon;
        let mut m = [0.0; 3];
        // sector where |s_a| >= |s_b|, s_a = ±δu, s_b = δuv
        for axis in 0..2 {
            for sign in [-1.0, 1.0] {
                for (i, &u) in nodes.iter().enumerate() {
                    for (j, &v01) in nodes.iter().enumerate() {
                        let v = 2.0 * v01 - 1.0;
                        let mut s = [0.0; 2];
                        s[axis] = sign * delta * u;
                        s[1 - axis] = delta * u * v;
                        let w = weights[i] * weights[j] * 2.0 * delta * delta * u;
                        let g = self.profile(delta * u) * w;
                        m[0] += g * s[0] * s[0];
                        m[1] += g * s[0] * s[1];
                        m[2] += g * s[1] * s[1];
                    }
                }
            }
        }
        m.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scalings() {
        assert_eq!(default_zeta(KernelKind::Constant, 1).unwrap(), 1.5);
        assert_eq!(default_zeta(KernelKind::Rational, 1).unwrap(), 1.0);
        assert_eq!(default_zeta(KernelKind::Constant, 2).unwrap(), 4.0 / PI);
        assert_eq!(default_zeta(KernelKind::Rational, 2).unwrap(), 3.0 / PI);
        assert!(default_zeta(KernelKind::Rational, 3).is_err());
    }

    #[test]
    fn point_values() {
        let k = Kernel::standard(KernelKind::Constant, 1, 0.02).unwrap();
        let v = k.evaluate(&[0.5, 0.0], &[0.51, 0.0]).unwrap();
        assert!((v - 187_500.0).abs() < 1e-8);
        assert_eq!(k.evaluate(&[0.0, 0.0], &[0.0202, 0.0]).unwrap(), 0.0);

        let k = Kernel::standard(KernelKind::Rational, 2, 0.1).unwrap();
        let v = k.evaluate(&[0.0, 0.0], &[0.03, 0.04]).unwrap();
        let expected = (3.0 / PI) / (0.1f64.powi(3) * 0.05);
        assert!((v - expected).abs() < 1e-9 * expected);
        assert!((v - 19_098.593).abs() < 1e-2);
        assert!(matches!(k.evaluate(&[0.2, 0.2], &[0.2, 0.2]), Err(Error::SingularEvaluation)));
    }

    #[test]
    fn closed_form_moments() {
        let k = Kernel::standard(KernelKind::Constant, 1, 0.3).unwrap();
        assert!((k.exact_moments()[0] - 1.0).abs() < 1e-15);
        for kind in [KernelKind::Constant, KernelKind::Rational] {
            let g = Kernel::standard(kind, 2, 0.7).unwrap().exact_moments();
            assert_eq!(g[1], 0.0);
            assert!((g[0] - 1.0).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn square_ball_moments() {
        let delta = 0.3;
        let c = Kernel::new(KernelKind::Constant, 2, delta, 1.0, BallNorm::Max).unwrap();
        let g = c.exact_moments();
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-13 && g[1].abs() < 1e-13 && (g[2] - 4.0 / 3.0).abs() < 1e-13);
        let r = Kernel::new(KernelKind::Rational, 2, delta, 1.0, BallNorm::Max).unwrap();
        let g = r.exact_moments();
        assert!((g[0] - 16.0 / 9.0).abs() < 1e-13, "{}", g[0]);
    }
}
