//! Jacobi-preconditioned conjugate gradients.

use super::CsrMatrix;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Solves `A x = b` for symmetric positive definite `A` until
/// `‖A x - b‖ / ‖b‖ ≤ rel_tol`. Fails after `10 n` iterations.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(b.len(), n, "right-hand side length");
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    if !bnorm.is_finite() {
        return Err(Error::SolverDiverged { iterations: 0, residual: f64::NAN });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n.max(1);
    let mut iterations = 0;
    // The recursive residual can drift from the true one; recheck before accepting.
    let mut restarts = 0;
    loop {
        while iterations < max_iter && norm(&r) > rel_tol * bnorm {
            a.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            iterations += 1;
        }
        let ax = a.matvec(&x);
        r = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        let residual = norm(&r) / bnorm;
        if residual <= rel_tol {
            return Ok(x);
        }
        if iterations >= max_iter || restarts >= 3 || !residual.is_finite() {
            return Err(Error::SolverDiverged { iterations, residual });
        }
        restarts += 1;
        z = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        p = z.clone();
        rz = dot(&r, &z);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
