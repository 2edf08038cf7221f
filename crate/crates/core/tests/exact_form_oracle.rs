//! Reference for the exact nonlocal form on a three-element mesh: nested
//! adaptive Gauss integration with no knowledge of the closed-form moments.

use nlfem::gauss::legendre_unit;
use nlfem::kernel::{Kernel, KernelKind};
use nlfem::mesh::{BoxDomain, Mesh};
use nlfem::strang::exact_form_matrix;

struct Adaptive {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Adaptive {
    fn new() -> Self {
        let (nodes, weights) = legendre_unit(15);
        Self { nodes, weights }
    }

    fn rule(&self, f: &dyn Fn(f64) -> Vec<f64>, a: f64, b: f64, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            for (o, v) in out.iter_mut().zip(f(a + (b - a) * t)) {
                *o += w * (b - a) * v;
            }
        }
        out
    }

    /// Vector-valued adaptive bisection; error measured in the max norm.
    fn integrate(&self, f: &dyn Fn(f64) -> Vec<f64>, a: f64, b: f64, len: usize, tol: f64, depth: u32) -> Vec<f64> {
        let whole = self.rule(f, a, b, len);
        let m = 0.5 * (a + b);
        let left = self.rule(f, a, m, len);
        let right = self.rule(f, m, b, len);
        let halves: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let err = whole.iter().zip(&halves).map(|(w, h)| (w - h).abs()).fold(0.0, f64::max);
        if err <= tol || depth == 0 {
            return halves;
        }
        let l = self.integrate(f, a, m, len, 0.5 * tol, depth - 1);
        let r = self.integrate(f, m, b, len, 0.5 * tol, depth - 1);
        l.iter().zip(&r).map(|(x, y)| x + y).collect()
    }

    fn piecewise(&self, f: &dyn Fn(f64) -> Vec<f64>, mut breaks: Vec<f64>, len: usize, tol: f64) -> Vec<f64> {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut total = vec![0.0; len];
        for w in breaks.windows(2) {
            for (t, v) in total.iter_mut().zip(self.integrate(f, w[0], w[1], len, tol, 40)) {
                *t += v;
            }
        }
        total
    }
}

#[test]
fn exact_form_matches_adaptive_double_integral() {
    let quad = Adaptive::new();
    for kind in [KernelKind::Constant, KernelKind::Rational] {
        let domain = BoxDomain::unit(1, 1.0, 0.0).unwrap();
        let mesh = Mesh::uniform_1d(1.0, &domain).unwrap();
        assert_eq!(mesh.num_elements(), 3);
        let kernel = Kernel::standard(kind, 1, 1.0).unwrap();
        let coords: Vec<f64> = mesh.nodes().iter().map(|p| p[0]).collect();
        let n = coords.len();
        let hat = |i: usize, x: f64| (1.0 - (x - coords[i]).abs()).max(0.0);
        let (a, b) = (-1.0, 2.0);

        let inner = |x: f64| -> Vec<f64> {
            let f = |y: f64| -> Vec<f64> {
                let g = kernel.evaluate(&[x, 0.0], &[y, 0.0]).unwrap();
                let d: Vec<f64> = (0..n).map(|i| hat(i, y) - hat(i, x)).collect();
                (0..n * n).map(|k| d[k / n] * d[k % n] * g).collect()
            };
            let lo = (x - 1.0).max(a);
            let hi = (x + 1.0).min(b);
            let mut breaks: Vec<f64> = coords.iter().copied().filter(|c| *c > lo && *c < hi).collect();
            breaks.extend([lo, hi, x]);
            quad.piecewise(&f, breaks, n * n, 1e-15)
        };
        let oracle = quad.piecewise(&inner, coords.clone(), n * n, 1e-13);

        let m = exact_form_matrix(&mesh, &kernel).unwrap();
        let scale = oracle.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (k, expected) in oracle.iter().enumerate() {
            let (i, j) = (k / n, k % n);
            let diff = (m[(i, j)] - expected).abs();
            assert!(diff <= 1e-10 * scale.max(1.0), "{kind:?} ({i},{j}): {} vs {expected}", m[(i, j)]);
        }
    }
}
