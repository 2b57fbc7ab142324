//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, plus the
//! spectral functions built on top of it.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Sweep budget for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Relative Hermiticity tolerance used by the spectral helpers.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues (ascending) with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `k` as a vector.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for (k, w) in weights.iter().enumerate() {
                    acc += v[(i, k)] * w * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| Complex64::new(l, 0.0))
    }

    /// Smallest distance between consecutive eigenvalues (infinite for N = 1).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn span(&self) -> f64 {
        self.eigenvalues.last().unwrap() - self.eigenvalues[0]
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Diagonalizes a Hermitian matrix.
///
/// `tol` bounds the Hermiticity defect: `‖M − M†‖_F ≤ tol·‖M‖_F`. Only the
/// Hermitian part of `m` is diagonalized.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if !m.is_hermitian(tol) {
        return Err(Error::NotHermitian {
            what: "matrix".into(),
            deviation: m.hermiticity_defect(),
        });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let target = f64::EPSILON * 1e-2 * norm;

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip entries that can no longer move the diagonal.
                if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) · R(c, s), applied as A ← J† A J.
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
        converged = !rotated || off_diagonal_norm(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // Fix the phase so the first significant component is real positive.
        let pivot = (0..n).find(|&i| v[(i, src)].norm() > 1e-8).unwrap_or(0);
        let z = v[(pivot, src)];
        let rot = if z.norm() > 0.0 {
            z.conj() / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, col)] = v[(i, src)] * rot;
        }
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Principal square root of a positive semi-definite Hermitian matrix.
///
/// Eigenvalues down to `−1e-12·‖M‖_F` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m, HERMITIAN_TOL)?;
    let floor = -1e-12 * m.frobenius_norm();
    let min = eig.eigenvalues[0];
    if min < floor {
        return Err(Error::NotPsd(min));
    }
    Ok(eig.reconstruct_with(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)))
}

/// `exp(i·t·H)` for Hermitian `H`.
pub fn unitary_propagator(h: &EigenSystem, t: f64) -> ComplexMatrix {
    h.reconstruct_with(|l| Complex64::from_polar(1.0, l * t))
}
