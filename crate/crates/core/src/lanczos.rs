//! Thick-restart Lanczos for the lowest eigenpair of a Hermitian operator
//! given only as a matrix-vector product.
//!
//! The projected matrix is assembled column by column from full Gram–Schmidt
//! coefficients (two passes), so restarted bases and their arrow rows need no
//! special bookkeeping.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Krylov basis size before a restart.
    pub basis: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    /// Limit on operator applications.
    pub max_matvecs: usize,
    /// Absolute residual tolerance ‖Ax − θx‖ for a unit x.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { basis: 60, keep: 20, max_matvecs: 20_000, tol: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    /// Explicitly recomputed ‖Ax − θx‖.
    pub residual: f64,
    pub matvecs: usize,
    pub restarts: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |s, (x, y)| s + x.conj() * y)
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], s: Complex64, x: &[Complex64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

/// Lowest eigenpair of the Hermitian map `op`, starting from `start`.
pub fn lowest_eigenpair(op: impl Fn(&[Complex64]) -> Vec<Complex64>, start: Vec<Complex64>, opts: &LanczosOptions) -> Result<EigenPair> {
    let dim = start.len();
    if opts.keep == 0 || opts.basis <= opts.keep + 1 {
        return Err(Error::Precondition("need 0 < keep < basis - 1".into()));
    }
    let m = opts.basis.min(dim);
    let keep = opts.keep.min(m.saturating_sub(2)).max(1);
    let n0 = norm(&start);
    if !(n0 > 0.0) {
        return Err(Error::Precondition("start vector is zero".into()));
    }
    let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|x| x / n0).collect()];
    let mut t = DMatrix::<Complex64>::zeros(m, m);
    let mut j = 0usize;
    let mut matvecs = 0usize;
    let mut restarts = 0usize;
    loop {
        // extend the basis to m vectors
        let mut beta = 0.0;
        let mut residual_vec = Vec::new();
        while j < m {
            let mut w = op(&basis[j]);
            matvecs += 1;
            let mut coef = vec![Complex64::new(0.0, 0.0); j + 1];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(v, &w);
                    coef[i] += c;
                    axpy(&mut w, -c, v);
                }
            }
            for (i, c) in coef.iter().enumerate() {
                t[(i, j)] = *c;
                t[(j, i)] = c.conj();
            }
            t[(j, j)] = Complex64::new(coef[j].re, 0.0);
            beta = norm(&w);
            if j + 1 < m {
                if beta < 1e-14 {
                    // invariant subspace: the spectrum of t is exact
                    j += 1;
                    break;
                }
                t[(j + 1, j)] = Complex64::new(beta, 0.0);
                t[(j, j + 1)] = Complex64::new(beta, 0.0);
                basis.push(w.iter().map(|x| x / beta).collect());
            } else {
                residual_vec = w;
            }
            j += 1;
        }
        let size = j;
        let sub = t.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(sub);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let lo = order[0];
        let est = beta * eig.eigenvectors[(size - 1, lo)].norm();
        let converged = est <= opts.tol || size < m;
        if converged || matvecs >= opts.max_matvecs {
            let mut x = vec![Complex64::new(0.0, 0.0); dim];
            for (i, v) in basis.iter().enumerate().take(size) {
                axpy(&mut x, eig.eigenvectors[(i, lo)], v);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let ax = op(&x);
            matvecs += 1;
            let num = dot(&x, &ax).re;
            let mut r = ax;
            axpy(&mut r, Complex64::new(-num, 0.0), &x);
            let residual = norm(&r);
            if residual <= opts.tol * 1.5 || (converged && size < m) {
                return Ok(EigenPair { value: num, vector: x, residual, matvecs, restarts });
            }
            if matvecs >= opts.max_matvecs {
                return Err(Error::Convergence {
                    iterations: matvecs,
                    residual,
                    message: format!("lowest Ritz value {num:.12e}"),
                });
            }
        }
        // thick restart: keep the lowest `keep` Ritz vectors plus the residual direction
        let mut kept: Vec<Vec<Complex64>> = Vec::with_capacity(keep + 1);
        for &col in order.iter().take(keep) {
            let mut y = vec![Complex64::new(0.0, 0.0); dim];
            for (i, v) in basis.iter().enumerate().take(size) {
                axpy(&mut y, eig.eigenvectors[(i, col)], v);
            }
            kept.push(y);
        }
        let mut tn = DMatrix::<Complex64>::zeros(m, m);
        for (a, &col) in order.iter().take(keep).enumerate() {
            tn[(a, a)] = Complex64::new(eig.eigenvalues[col], 0.0);
            let arrow = eig.eigenvectors[(size - 1, col)] * beta;
            tn[(keep, a)] = arrow;
            tn[(a, keep)] = arrow.conj();
        }
        let rn = norm(&residual_vec);
        kept.push(residual_vec.iter().map(|x| x / rn).collect());
        basis = kept;
        t = tn;
        // column `keep` is filled by the Gram–Schmidt pass of its own matvec
        j = keep;
        restarts += 1;
    }
}
