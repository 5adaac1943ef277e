use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, Spectrum};
use crate::scalar::Real;

/// Numerical surrogate for "eigenvalue is nonzero": anything at or below
/// `relative_cutoff · max|λ|` counts as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportPolicy {
    relative_cutoff: f64,
}

impl SupportPolicy {
    pub fn new(relative_cutoff: f64) -> Result<Self> {
        if relative_cutoff > 0.0 && relative_cutoff < 1e-6 {
            Ok(Self { relative_cutoff })
        } else {
            Err(Error::DomainError(format!(
                "relative cutoff {relative_cutoff} outside (0, 1e-6)"
            )))
        }
    }

    #[inline]
    pub fn relative_cutoff(&self) -> f64 {
        self.relative_cutoff
    }
}

impl Default for SupportPolicy {
    fn default() -> Self {
        Self {
            relative_cutoff: 1e-12,
        }
    }
}

/// Relative eigenvalue gap below which pinching merges eigenspaces.
const PINCH_GROUP_GAP: f64 = 1e-9;

/// Hermitian matrix with a lazily computed, thread-safe spectrum cache.
#[derive(Clone, Debug)]
pub struct HermitianOperator<T: Real> {
    matrix: ComplexMatrix<T>,
    spectrum: OnceLock<Spectrum<T>>,
}

impl<T: Real> PartialEq for HermitianOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity and stores the Hermitian part of `matrix`.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        let tol = T::hermitian_tolerance() * (T::one() + matrix.max_abs());
        if !(dev <= tol) {
            return Err(Error::NonHermitian {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self::from_matrix_unchecked(matrix.hermitian_part()))
    }

    /// Wraps a matrix already known to be Hermitian by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix<T>) -> Self {
        Self {
            matrix,
            spectrum: OnceLock::new(),
        }
    }

    fn from_spectrum(spectrum: Spectrum<T>) -> Self {
        let matrix = spectrum.reconstruct(|x| x).hermitian_part();
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Self {
            matrix,
            spectrum: cache,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(dim))
    }

    pub fn diagonal(diag: &[T]) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::from_real_diagonal(diag))
    }

    /// Normalized projector onto the span of `v`.
    pub fn pure(v: &[Complex<T>]) -> Self {
        let norm2 = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        Self::from_matrix_unchecked(ComplexMatrix::outer(v).scale(T::one() / norm2))
    }

    pub fn direct_sum(blocks: &[Self]) -> Self {
        let mats: Vec<_> = blocks.iter().map(|b| b.matrix.clone()).collect();
        Self::from_matrix_unchecked(ComplexMatrix::block_diagonal(&mats))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> Result<&Spectrum<T>> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = eigh(&self.matrix)?;
        // A concurrent initializer computes the identical result, so losing the race is harmless.
        let _ = self.spectrum.set(s);
        Ok(self.spectrum.get().expect("spectrum initialized"))
    }

    pub fn eigenvalues(&self) -> Result<&[T]> {
        Ok(&self.spectrum()?.values)
    }

    pub fn max_eigenvalue(&self) -> Result<T> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or_else(T::zero))
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or_else(T::zero))
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    pub fn trace_norm(&self) -> Result<T> {
        Ok(self.eigenvalues()?.iter().fold(T::zero(), |s, l| s + l.abs()))
    }

    /// `Re Tr[A B]`.
    pub fn inner(&self, other: &Self) -> T {
        self.matrix.trace_product(&other.matrix).re
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.matrix - &other.matrix)
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = Self::from_matrix_unchecked(self.matrix.scale(k));
        if let Some(sp) = self.spectrum.get() {
            if k >= T::zero() {
                let _ = out.spectrum.set(Spectrum {
                    values: sp.values.iter().map(|&l| l * k).collect(),
                    vectors: sp.vectors.clone(),
                });
            } else {
                out = Self::from_matrix_unchecked(out.matrix);
            }
        }
        out
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.matrix.kron(&other.matrix))
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        Ok(Self::from_matrix_unchecked(
            self.matrix.partial_trace(dims, keep)?.hermitian_part(),
        ))
    }

    /// `A B A`, Hermitian whenever both factors are.
    pub fn sandwich(&self, inner: &Self) -> Self {
        Self::from_matrix_unchecked(
            self.matrix
                .matmul(&inner.matrix)
                .matmul(&self.matrix)
                .hermitian_part(),
        )
    }

    /// `U A U†` for an arbitrary square `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix<T>) -> Self {
        Self::from_matrix_unchecked(self.matrix.conjugate_by(u).hermitian_part())
    }

    /// Absolute eigenvalue cutoff `relative_cutoff · max|λ|`.
    pub fn cutoff(&self, policy: &SupportPolicy) -> Result<T> {
        let vals = self.eigenvalues()?;
        let scale = vals
            .first()
            .map(|l| l.abs())
            .unwrap_or_else(T::zero)
            .max(vals.last().map(|l| l.abs()).unwrap_or_else(T::zero));
        Ok(T::lit(policy.relative_cutoff()) * scale)
    }

    /// Fails with `NegativeEigenvalue` unless the operator is PSD up to the cutoff.
    pub fn check_psd(&self, policy: &SupportPolicy) -> Result<()> {
        let cut = self.cutoff(policy)?;
        let min = self.min_eigenvalue()?;
        if min < -cut {
            return Err(Error::NegativeEigenvalue {
                value: min.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    /// Applies `f` to every eigenvalue; the result keeps a cached spectrum.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let sp = self.spectrum()?;
        let mut pairs: Vec<(T, usize)> = sp.values.iter().map(|&l| f(l)).zip(0..).collect();
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let n = self.dim();
        let vectors = ComplexMatrix::from_fn(n, |i, j| sp.vectors[(i, pairs[j].1)]);
        let values = pairs.into_iter().map(|p| p.0).collect();
        Ok(Self::from_spectrum(Spectrum { values, vectors }))
    }

    fn map_support(&self, policy: &SupportPolicy, f: impl Fn(T) -> T) -> Result<Self> {
        self.check_psd(policy)?;
        let cut = self.cutoff(policy)?;
        self.map_spectrum(|l| if l > cut { f(l) } else { T::zero() })
    }

    /// `Σ_{λ > cutoff} λ^p P_λ`; `p = 0` gives the support projector.
    pub fn power(&self, p: T, policy: &SupportPolicy) -> Result<Self> {
        if p == T::zero() {
            return self.support_projector(policy);
        }
        self.map_support(policy, |l| l.powf(p))
    }

    /// Base-2 logarithm on the support, zero elsewhere.
    pub fn log2(&self, policy: &SupportPolicy) -> Result<Self> {
        self.map_support(policy, |l| l.log2())
    }

    /// `2^A` on the whole space.
    pub fn exp2(&self) -> Result<Self> {
        self.map_spectrum(|l| l.exp2())
    }

    pub fn support_projector(&self, policy: &SupportPolicy) -> Result<Self> {
        self.map_support(policy, |_| T::one())
    }

    pub fn kernel_projector(&self, policy: &SupportPolicy) -> Result<Self> {
        self.check_psd(policy)?;
        let cut = self.cutoff(policy)?;
        self.map_spectrum(|l| if l > cut { T::zero() } else { T::one() })
    }

    /// `Σ_{λ > cutoff} λ P_λ`.
    pub fn positive_part(&self, policy: &SupportPolicy) -> Result<Self> {
        let cut = self.cutoff(policy)?;
        self.map_spectrum(|l| if l > cut { l } else { T::zero() })
    }

    /// `Σ_{λ > cutoff} P_λ`, the projector `{A > 0}`.
    pub fn positive_projector(&self, policy: &SupportPolicy) -> Result<Self> {
        let cut = self.cutoff(policy)?;
        self.map_spectrum(|l| if l > cut { T::one() } else { T::zero() })
    }

    /// Orthonormal basis of eigenvectors with eigenvalue above the cutoff.
    pub fn support_basis(&self, policy: &SupportPolicy) -> Result<Vec<Vec<Complex<T>>>> {
        self.check_psd(policy)?;
        let cut = self.cutoff(policy)?;
        let sp = self.spectrum()?;
        Ok((0..self.dim())
            .filter(|&k| sp.values[k] > cut)
            .map(|k| sp.vector(k))
            .collect())
    }

    /// `V† A V` where the columns of `V` are the orthonormal vectors in `basis`.
    pub fn compress(&self, basis: &[Vec<Complex<T>>]) -> Self {
        let n = self.dim();
        let r = basis.len();
        let av: Vec<Vec<Complex<T>>> = basis
            .iter()
            .map(|v| {
                (0..n)
                    .map(|i| {
                        (0..n).fold(Complex::new(T::zero(), T::zero()), |s, k| {
                            s + self.matrix[(i, k)] * v[k]
                        })
                    })
                    .collect()
            })
            .collect();
        let m = ComplexMatrix::from_fn(r, |a, b| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |s, i| {
                s + basis[a][i].conj() * av[b][i]
            })
        });
        Self::from_matrix_unchecked(m.hermitian_part())
    }

    /// `V A V†`, embedding a compressed operator back into dimension `dim`.
    pub fn lift(&self, basis: &[Vec<Complex<T>>], dim: usize) -> Self {
        let r = basis.len();
        let m = ComplexMatrix::from_fn(dim, |i, j| {
            let mut s = Complex::new(T::zero(), T::zero());
            for a in 0..r {
                for b in 0..r {
                    s = s + basis[a][i] * self.matrix[(a, b)] * basis[b][j].conj();
                }
            }
            s
        });
        Self::from_matrix_unchecked(m.hermitian_part())
    }

    /// Eigenprojectors grouped by eigenvalue, merging relative gaps below `1e-9`.
    pub fn eigenprojectors(&self) -> Result<Vec<Self>> {
        let sp = self.spectrum()?;
        let n = self.dim();
        if n == 0 {
            return Ok(Vec::new());
        }
        let scale = sp
            .values
            .iter()
            .fold(T::zero(), |m, l| m.max(l.abs()))
            .max(T::min_positive_value());
        let gap = T::lit(PINCH_GROUP_GAP) * scale;
        let mut groups: Vec<Vec<usize>> = vec![vec![0]];
        for k in 1..n {
            if sp.values[k] - sp.values[k - 1] > gap {
                groups.push(vec![k]);
            } else {
                groups.last_mut().expect("nonempty").push(k);
            }
        }
        Ok(groups
            .into_iter()
            .map(|g| {
                let mut p = ComplexMatrix::zeros(n);
                for k in g {
                    p = &p + &ComplexMatrix::outer(&sp.vector(k));
                }
                Self::from_matrix_unchecked(p)
            })
            .collect())
    }

    /// `Σ_i P_i A P_i` over the eigenprojectors of `reference`.
    pub fn pinch(&self, reference: &Self) -> Result<Self> {
        if self.dim() != reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: reference.dim(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.dim());
        for p in reference.eigenprojectors()? {
            out = &out + &p.matrix.matmul(&self.matrix).matmul(&p.matrix);
        }
        Ok(Self::from_matrix_unchecked(out.hermitian_part()))
    }

    pub fn cast<U: Real>(&self) -> HermitianOperator<U> {
        HermitianOperator::from_matrix_unchecked(self.matrix.cast())
    }
}

/// Whether `supp ρ ⊆ supp σ`, judged by the weight of `ρ` on the kernel of `σ`.
pub fn support_contained<T: Real>(
    rho: &HermitianOperator<T>,
    sigma: &HermitianOperator<T>,
    policy: &SupportPolicy,
) -> Result<bool> {
    rho.check_psd(policy)?;
    let kernel = sigma.kernel_projector(policy)?;
    let leak = kernel.inner(rho);
    Ok(leak <= T::lit(policy.relative_cutoff()) * rho.trace())
}

/// Whether the supports of `a` and `b` intersect trivially in the sense `‖Π_a Π_b‖ ≤ cutoff`.
pub fn orthogonal<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    policy: &SupportPolicy,
) -> Result<bool> {
    let pa = a.support_projector(policy)?;
    let pb = b.support_projector(policy)?;
    let prod = pa.matrix().matmul(pb.matrix());
    Ok(prod.frobenius_norm() <= T::lit(policy.relative_cutoff()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Op = HermitianOperator<f64>;
    type M = ComplexMatrix<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn pauli_x() -> Op {
        Op::new(M::from_vec(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()).unwrap()
    }

    fn pauli_z() -> Op {
        Op::diagonal(&[1.0, -1.0])
    }

    fn close(a: &Op, b: &Op, tol: f64) -> bool {
        (a.matrix() - b.matrix()).max_abs() <= tol
    }

    const P: SupportPolicy = SupportPolicy {
        relative_cutoff: 1e-12,
    };

    #[test]
    fn rejects_non_hermitian() {
        let m = M::from_vec(2, vec![c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert!(matches!(Op::new(m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn policy_bounds() {
        assert!(SupportPolicy::new(0.0).is_err());
        assert!(SupportPolicy::new(1e-6).is_err());
        assert!(SupportPolicy::new(1e-10).is_ok());
    }

    #[test]
    fn power_on_support() {
        let a = Op::diagonal(&[4.0, 0.0]);
        assert!(close(&a.power(0.5, &P).unwrap(), &Op::diagonal(&[2.0, 0.0]), 1e-15));
        assert!(close(&a.power(0.0, &P).unwrap(), &Op::diagonal(&[1.0, 0.0]), 1e-15));
        let h = Op::diagonal(&[0.5, 0.5]);
        assert!(close(&h.power(2.0, &P).unwrap(), &Op::diagonal(&[0.25, 0.25]), 1e-15));
    }

    #[test]
    fn power_rejects_negative() {
        let a = Op::diagonal(&[1.0, -0.1]);
        assert!(matches!(a.power(0.5, &P), Err(Error::NegativeEigenvalue { .. })));
    }

    #[test]
    fn log_and_exp() {
        assert!(close(&Op::diagonal(&[2.0, 1.0]).log2(&P).unwrap(), &Op::diagonal(&[1.0, 0.0]), 1e-15));
        assert!(close(&Op::zeros(2).exp2().unwrap(), &Op::identity(2), 1e-15));
        assert!(close(&Op::diagonal(&[0.5, 0.0]).log2(&P).unwrap(), &Op::diagonal(&[-1.0, 0.0]), 1e-15));
    }

    #[test]
    fn tensor_and_partial_trace() {
        let i2 = Op::identity(2);
        assert!(close(&i2.tensor(&i2), &Op::identity(4), 0.0));
        let s = 0.5f64.sqrt();
        let bell = Op::pure(&[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]);
        let red = bell.partial_trace(&[2, 2], &[0]).unwrap();
        assert!(close(&red, &Op::diagonal(&[0.5, 0.5]), 1e-15));
    }

    #[test]
    fn pinching_examples() {
        assert!(close(&pauli_x().pinch(&pauli_z()).unwrap(), &Op::zeros(2), 1e-15));
        let a = Op::new(M::from_vec(2, vec![c(0.3, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.)]).unwrap()).unwrap();
        assert!(close(&a.pinch(&Op::identity(2)).unwrap(), &a, 1e-15));
        assert!(close(&a.pinch(&a).unwrap(), &a, 1e-14));
    }

    #[test]
    fn positive_part_examples() {
        let a = Op::diagonal(&[2.0, -1.0]);
        assert!(close(&a.positive_part(&P).unwrap(), &Op::diagonal(&[2.0, 0.0]), 0.0));
        assert!(close(&a.positive_projector(&P).unwrap(), &Op::diagonal(&[1.0, 0.0]), 0.0));
        let psd = Op::diagonal(&[0.3, 0.7]);
        assert!(close(&psd.positive_part(&P).unwrap(), &psd, 0.0));
        assert!(close(&psd.scale(-1.0).positive_part(&P).unwrap(), &Op::zeros(2), 0.0));
    }

    #[test]
    fn compress_then_lift_on_support() {
        let a = Op::diagonal(&[0.0, 0.4, 0.6]);
        let basis = a.support_basis(&P).unwrap();
        assert_eq!(basis.len(), 2);
        let small = a.compress(&basis);
        assert!((small.trace() - 1.0).abs() < 1e-15);
        assert!(close(&small.lift(&basis, 3), &a, 1e-15));
    }

    #[test]
    fn support_relations() {
        let k0 = Op::diagonal(&[1.0, 0.0]);
        let k1 = Op::diagonal(&[0.0, 1.0]);
        let mixed = Op::diagonal(&[0.5, 0.5]);
        assert!(support_contained(&k0, &k0, &P).unwrap());
        assert!(!support_contained(&k0, &k1, &P).unwrap());
        assert!(orthogonal(&k0, &k1, &P).unwrap());
        assert!(support_contained(&k0, &mixed, &P).unwrap());
        assert!(!orthogonal(&k0, &mixed, &P).unwrap());
    }

    fn random_op(dim: usize, psd: bool) -> impl Strategy<Value = Op> {
        prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |raw| {
            let g = M::from_fn(dim, |i, j| c(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
            let m = if psd { g.matmul(&g.adjoint()) } else { g.hermitian_part() };
            Op::new(m).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn power_semigroup(a in (1usize..=5).prop_flat_map(|d| random_op(d, true))) {
            let ps = [-1.0, -0.5, 0.5, 1.0, 2.0];
            for &p in &ps {
                for &q in &ps {
                    let lhs = a.power(p, &P).unwrap().matrix().matmul(a.power(q, &P).unwrap().matrix());
                    let rhs = a.power(p + q, &P).unwrap();
                    let scale = 1.0 + rhs.matrix().max_abs();
                    prop_assert!((&lhs - rhs.matrix()).max_abs() <= 1e-9 * scale, "p={p} q={q}");
                }
            }
        }

        #[test]
        fn log_exp_roundtrip(a in (1usize..=4).prop_flat_map(|d| random_op(d, true))) {
            let back = a.log2(&P).unwrap().exp2().unwrap();
            let proj = a.support_projector(&P).unwrap();
            let on_support = proj.sandwich(&back);
            prop_assert!((on_support.matrix() - a.matrix()).max_abs() <= 1e-9);
        }

        #[test]
        fn pinching_preserves_trace_and_positivity(
            (a, x) in (1usize..=5).prop_flat_map(|d| (random_op(d, true), random_op(d, false)))
        ) {
            let p = a.pinch(&x).unwrap();
            prop_assert!((p.trace() - a.trace()).abs() <= 1e-12 * (1.0 + a.trace()));
            prop_assert!(p.min_eigenvalue().unwrap() >= -1e-12 * (1.0 + a.trace()));
            let comm = &p.matrix().matmul(x.matrix()) - &x.matrix().matmul(p.matrix());
            prop_assert!(comm.max_abs() <= 1e-9 * (1.0 + a.trace()) * (1.0 + x.matrix().max_abs()));
        }

        #[test]
        fn positive_part_dominates_tests(
            (a, qs) in (1usize..=4).prop_flat_map(|d| (random_op(d, false), prop::collection::vec(random_op(d, true), 20)))
        ) {
            let pos = a.positive_part(&P).unwrap().trace();
            for g in qs {
                // Rescale into 0 ≤ Q ≤ 1.
                let q = g.scale(1.0 / g.max_eigenvalue().unwrap().max(1e-300));
                prop_assert!(pos >= a.inner(&q) - 1e-12);
            }
        }

        #[test]
        fn partial_trace_of_tensor(
            (a, b) in (1usize..=3, 1usize..=3).prop_flat_map(|(m, n)| (random_op(m, false), random_op(n, true)))
        ) {
            let ab = a.tensor(&b);
            let red = ab.partial_trace(&[a.dim(), b.dim()], &[0]).unwrap();
            prop_assert!((red.matrix() - a.scale(b.trace()).matrix()).max_abs() <= 1e-12 * (1.0 + b.trace()));
            prop_assert!((red.trace() - ab.trace()).abs() <= 1e-12 * (1.0 + ab.trace().abs()));
        }
    }
}
