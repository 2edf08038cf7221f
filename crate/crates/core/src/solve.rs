//! Solution of the symmetric positive definite system `A^h u = f^h`.

use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;

use crate::assembly::DiscreteSystem;
use crate::error::{Error, Result};

/// Relative residual every accepted solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    /// `|A u − f| / |f|`.
    pub residual: f64,
    pub method: SolveMethod,
    /// Refinement steps for Cholesky, iterations for CG.
    pub iterations: usize,
}

pub fn solve_system(system: &DiscreteSystem) -> Result<Solution> {
    solve(&system.matrix, &system.rhs)
}

fn relative_residual(a: &CscMatrix<f64>, u: &DVector<f64>, f: &DVector<f64>) -> (DVector<f64>, f64) {
    let r = f - a * u;
    let n = r.norm() / f.norm();
    (r, n)
}

/// Sparse Cholesky with iterative refinement; Jacobi-preconditioned CG when
/// the factorization fails or misses the tolerance.
pub fn solve(a: &CscMatrix<f64>, f: &[f64]) -> Result<Solution> {
    let n = f.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Solver(format!("matrix is {}×{} but the load has {n} entries", a.nrows(), a.ncols())));
    }
    let rhs = DVector::from_column_slice(f);
    if rhs.norm() == 0.0 {
        return Ok(Solution { values: vec![0.0; n], residual: 0.0, method: SolveMethod::Cholesky, iterations: 0 });
    }
    if let Ok(chol) = CscCholesky::factor(a) {
        let mut u: DVector<f64> = chol.solve(&rhs).column(0).into_owned();
        let (mut r, mut res) = relative_residual(a, &u, &rhs);
        let mut steps = 0;
        while res > 0.01 * RESIDUAL_TOLERANCE && steps < 5 && res.is_finite() {
            let du: DVector<f64> = chol.solve(&r).column(0).into_owned();
            let candidate = &u + du;
            let (r_new, res_new) = relative_residual(a, &candidate, &rhs);
            steps += 1;
            if res_new >= res {
                break;
            }
            u = candidate;
            r = r_new;
            res = res_new;
        }
        if res <= RESIDUAL_TOLERANCE {
            return Ok(Solution { values: u.as_slice().to_vec(), residual: res, method: SolveMethod::Cholesky, iterations: steps });
        }
    }
    conjugate_gradient(a, &rhs)
}

fn conjugate_gradient(a: &CscMatrix<f64>, f: &DVector<f64>) -> Result<Solution> {
    let n = f.len();
    let mut diag = DVector::zeros(n);
    for (i, j, v) in a.triplet_iter() {
        if i == j {
            diag[i] = *v;
        }
    }
    if let Some(i) = diag.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::Solver(format!("non-positive diagonal entry at row {i}; matrix is not SPD")));
    }
    let fnorm = f.norm();
    let target = 0.1 * RESIDUAL_TOLERANCE * fnorm;
    let mut u = DVector::zeros(n);
    let mut r = f.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let max_iter = 20 * n + 1000;
    for it in 1..=max_iter {
        let ap = a * &p;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!(
                "conjugate gradient breakdown at iteration {it}: pᵀAp = {pap:e}, residual {:e}",
                r.norm() / fnorm
            )));
        }
        let alpha = rz / pap;
        u.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= target {
            // recompute the true residual to guard against drift
            let (_, res) = relative_residual(a, &u, f);
            if res <= RESIDUAL_TOLERANCE {
                return Ok(Solution {
                    values: u.as_slice().to_vec(),
                    residual: res,
                    method: SolveMethod::ConjugateGradient,
                    iterations: it,
                });
            }
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    let (_, res) = relative_residual(a, &u, f);
    Err(Error::Solver(format!("conjugate gradient did not converge in {max_iter} iterations (relative residual {res:e})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::compress;

    fn laplacian(n: usize) -> CscMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        compress(n, t).unwrap()
    }

    #[test]
    fn one_by_one() {
        let a = compress(1, vec![(0, 0, 4.0)]).unwrap();
        let s = solve(&a, &[2.0]).unwrap();
        assert_eq!(s.values, vec![0.5]);
    }

    #[test]
    fn residual_contract() {
        let a = laplacian(200);
        let f: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let s = solve(&a, &f).unwrap();
        assert!(s.residual <= RESIDUAL_TOLERANCE);
        let cg = conjugate_gradient(&a, &DVector::from_vec(f)).unwrap();
        assert!(cg.residual <= RESIDUAL_TOLERANCE);
        for (x, y) in s.values.iter().zip(&cg.values) {
            assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = compress(2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::Solver(_))));
    }
}
