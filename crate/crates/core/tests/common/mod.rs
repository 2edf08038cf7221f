//! Dense reference assembly: every outer point, every inner point, every pair
//! of interior hats, with hats evaluated from their closed form.

use nalgebra::DMatrix;

use nlfem::assembly::QuadratureOptions;
use nlfem::gauss::{OuterRule, ReferenceRule};
use nlfem::gmls::{full_ball_rule, truncated_ball_rule};
use nlfem::kernel::Kernel;
use nlfem::mesh::{Mesh, NodeClass};

fn hat(center: f64, h: f64, x: f64) -> f64 {
    (1.0 - (x - center).abs() / h).max(0.0)
}

pub fn dense_oracle(mesh: &Mesh, kernel: &Kernel, opts: &QuadratureOptions) -> DMatrix<f64> {
    let h = mesh.spacing();
    let domain = mesh.domain();
    let interior: Vec<f64> =
        (0..mesh.num_nodes()).filter(|&n| mesh.node_class(n) == NodeClass::Interior).map(|n| mesh.nodes()[n][0]).collect();
    let full = full_ball_rule(kernel, &opts.inner).unwrap();
    let reference = ReferenceRule::for_dim(1, opts.outer_points).unwrap();
    let n = interior.len();
    let mut a = DMatrix::zeros(n, n);
    for e in 0..mesh.num_elements() {
        let outer = OuterRule::on_element(mesh, e, &reference);
        for (x, wx) in outer.points.iter().zip(&outer.weights) {
            let ball_inside = x[0] - kernel.horizon() >= domain.lower()[0] - domain.extension()
                && x[0] + kernel.horizon() <= domain.upper()[0] + domain.extension();
            let (points, scaled): (Vec<f64>, Vec<f64>) = if ball_inside {
                full.offsets.iter().zip(&full.scaled).map(|(o, s)| (x[0] + o[0], *s)).unzip()
            } else {
                let (pts, rule) = truncated_ball_rule(kernel, x, domain, &opts.inner).unwrap();
                pts.iter().zip(&rule.scaled).map(|(p, s)| (p[0], *s)).unzip()
            };
            for (y, s) in points.iter().zip(&scaled) {
                for i in 0..n {
                    let di = hat(interior[i], h, *y) - hat(interior[i], h, x[0]);
                    for j in 0..n {
                        let dj = hat(interior[j], h, *y) - hat(interior[j], h, x[0]);
                        a[(i, j)] += wx * s * di * dj;
                    }
                }
            }
        }
    }
    a
}
