use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; fails unless there are `dim²` of them.
    pub fn from_vec(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    /// Rank-one projector `|v⟩⟨v|` (no normalization applied).
    pub fn outer(v: &[Complex<T>]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
            acc + self[(i, i)]
        })
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_complex(&self, k: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |s, z| s + z.norm_sqr())
            .sqrt()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// `Re Tr[A B]` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex<T> {
        assert_eq!(self.dim, rhs.dim, "trace_product dimension mismatch");
        let n = self.dim;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for k in 0..n {
                acc = acc + self.data[i * n + k] * rhs.data[k * n + i];
            }
        }
        acc
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (m, n) = (self.dim, rhs.dim);
        Self::from_fn(m * n, |i, j| {
            self[(i / n, j / n)] * rhs[(i % n, j % n)]
        })
    }

    /// Direct sum of square blocks placed along the diagonal.
    pub fn block_diagonal(blocks: &[Self]) -> Self {
        let total = blocks.iter().map(|b| b.dim).sum();
        let mut out = Self::zeros(total);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.dim;
        }
        out
    }

    /// Partial trace over every tensor factor not listed in `keep`.
    ///
    /// Factors are ordered with the first one most significant, matching [`kron`](Self::kron).
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: total,
            });
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: bad + 1,
            });
        }
        let kept: Vec<usize> = (0..dims.len()).filter(|k| keep.contains(k)).collect();
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
        let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
        let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

        // Stride of each factor in the full index.
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let offset = |sel: &[usize], mut idx: usize| -> usize {
            let mut full = 0;
            for &k in sel.iter().rev() {
                full += (idx % dims[k]) * strides[k];
                idx /= dims[k];
            }
            full
        };
        let kept_off: Vec<usize> = (0..kept_dim).map(|r| offset(&kept, r)).collect();
        let traced_off: Vec<usize> = (0..traced_dim).map(|t| offset(&traced, t)).collect();

        let mut out = Self::zeros(kept_dim);
        for r in 0..kept_dim {
            for c in 0..kept_dim {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &t in &traced_off {
                    acc = acc + self[(kept_off[r] + t, kept_off[c] + t)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Lossy conversion into another scalar type.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        let c = |x: T| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap();
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| Complex::new(c(z.re), c(z.im))).collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = M::identity(2);
        assert_eq!(i2.kron(&i2), M::identity(4));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = M::from_vec(2, vec![c(0.3), Complex::new(0.1, 0.2), Complex::new(0.1, -0.2), c(0.7)]).unwrap();
        let b = M::from_real_diagonal(&[0.25, 0.5, 0.25]);
        let ab = a.kron(&b);
        let ra = ab.partial_trace(&[2, 3], &[0]).unwrap();
        let rb = ab.partial_trace(&[2, 3], &[1]).unwrap();
        assert!((&ra - &a).max_abs() < 1e-15);
        assert!((&rb - &b).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_middle_factor() {
        let a = M::from_real_diagonal(&[0.2, 0.8]);
        let b = M::from_real_diagonal(&[0.6, 0.4]);
        let cc = M::from_real_diagonal(&[0.1, 0.9]);
        let abc = a.kron(&b).kron(&cc);
        let ac = abc.partial_trace(&[2, 2, 2], &[0, 2]).unwrap();
        assert!((&ac - &a.kron(&cc)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = M::identity(4);
        assert!(matches!(
            m.partial_trace(&[2, 3], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(M::from_vec(2, vec![c(1.0); 3]).is_err());
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = M::from_fn(3, |i, j| Complex::new((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let b = M::from_fn(3, |i, j| Complex::new((3 * i + j) as f64 * 0.1, 0.5));
        let direct = a.matmul(&b).trace();
        assert!((direct - a.trace_product(&b)).norm() < 1e-12);
    }
}
