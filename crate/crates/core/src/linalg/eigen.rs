use num_complex::Complex;

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigendecomposition `A = U diag(λ) U†` with eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors stored as columns.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        let n = self.vectors.dim();
        (0..n).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `Σ_k f(λ_k) |u_k⟩⟨u_k|`, skipping terms where `f` returns zero.
    pub fn reconstruct(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.vectors.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let ui = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + ui * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation zeroes one off-diagonal pair after a diagonal phase that makes
/// the pivot real. The result is sorted ascending and is deterministic.
pub fn eigh<T: Real>(a: &ComplexMatrix<T>) -> Result<Spectrum<T>> {
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::<T>::identity(n);
    let fro = m.frobenius_norm();
    let zero = Complex::new(T::zero(), T::zero());

    if n > 1 && fro > T::zero() {
        // Relative rule: a pivot is negligible once it is tiny against the geometric mean of
        // its diagonal entries. This keeps small eigenvalues of graded matrices accurate.
        let eps = T::epsilon();
        // Only pivots at the underflow threshold are dropped outright; a floor scaled by the
        // norm would discard the couplings that set the smallest eigenvalues.
        let floor = T::min_positive_value() / eps;
        let huge = T::max_value().sqrt();
        let max_sweeps = 100 * n * n;
        let mut converged = false;
        for _ in 0..max_sweeps {
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let z = m[(p, q)];
                    let az = z.norm();
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    if az <= floor || az <= eps * (app.abs() * aqq.abs()).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = z / az;
                    let theta = (aqq - app) / (T::lit(2.0) * az);
                    let sign = if theta < T::zero() { -T::one() } else { T::one() };
                    let t = if theta.abs() > huge {
                        sign / (T::lit(2.0) * theta.abs())
                    } else {
                        sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    let ph_c = phase.conj();
                    for k in 0..n {
                        let akp = m[(k, p)];
                        let akq = m[(k, q)];
                        m[(k, p)] = akp * c - akq * ph_c * s;
                        m[(k, q)] = akp * s + akq * ph_c * c;
                    }
                    for k in 0..n {
                        let apk = m[(p, k)];
                        let aqk = m[(q, k)];
                        m[(p, k)] = apk * c - aqk * phase * s;
                        m[(q, k)] = apk * s + aqk * phase * c;
                    }
                    m[(p, q)] = zero;
                    m[(q, p)] = zero;
                    m[(p, p)] = Complex::new(app - t * az, T::zero());
                    m[(q, q)] = Complex::new(aqq + t * az, T::zero());
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * ph_c * s;
                        v[(k, q)] = vkp * s + vkq * ph_c * c;
                    }
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "jacobi eigensolver",
                iterations: max_sweeps,
                residual: (off_diagonal_norm(&m) / fro).to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .re
            .partial_cmp(&m[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Spectrum { values, vectors })
}
