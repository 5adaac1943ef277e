use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::state::policy;
use crate::{orthogonal, support_contained, Matrix, Operator, C64};

/// Which quantum Rényi divergence to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Petz,
    Sandwiched,
    /// Log-Euclidean divergence.
    Flat,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Petz, Variant::Sandwiched, Variant::Flat];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Petz => "petz",
            Variant::Sandwiched => "sandwiched",
            Variant::Flat => "flat",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "petz" => Ok(Variant::Petz),
            "sandwiched" | "star" => Ok(Variant::Sandwiched),
            "flat" | "log-euclidean" => Ok(Variant::Flat),
            other => Err(Error::DomainError(format!("unknown variant `{other}`"))),
        }
    }
}

/// A real number or `±∞`; never NaN.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const INFINITY: Self = Self(f64::INFINITY);
    pub const NEG_INFINITY: Self = Self(f64::NEG_INFINITY);
    pub const ZERO: Self = Self(0.0);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::DomainError("NaN is not an extended real".into()))
        } else {
            Ok(Self(v))
        }
    }

    /// Wraps a value that is NaN-free by construction.
    pub(crate) fn of(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "NaN leaked into an extended real");
        Self(v)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }

    pub fn min(self, other: Self) -> Self {
        Self(self.0.min(other.0))
    }

    pub fn max(self, other: Self) -> Self {
        Self(self.0.max(other.0))
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for ExtendedReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" => Ok(Self::INFINITY),
            "-inf" => Ok(Self::NEG_INFINITY),
            t => t
                .parse::<f64>()
                .map_err(|e| Error::DomainError(format!("`{t}`: {e}")))
                .and_then(Self::new),
        }
    }
}

impl From<ExtendedReal> for f64 {
    fn from(x: ExtendedReal) -> f64 {
        x.0
    }
}

/// A pair `(A, B)` of matching diagonal blocks of a block-diagonal pair `(ρ, σ)`.
pub type Block<'a> = (&'a Operator, &'a Operator);

/// Width of the window around `α = 1` where the relative entropy is used instead.
pub const ALPHA_ONE_WINDOW: f64 = 1e-6;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn is_zero(a: &Operator) -> bool {
    a.matrix().max_abs() == 0.0
}

fn contained(a: &Operator, b: &Operator) -> Result<bool> {
    support_contained(a, b, &policy())
}

/// `D(ρ‖σ) = Tr ρ (log ρ − log σ)` in bits.
pub fn relative_entropy(rho: &Operator, sigma: &Operator) -> Result<ExtendedReal> {
    relative_entropy_blocks(&[(rho, sigma)])
}

pub fn relative_entropy_blocks(blocks: &[Block<'_>]) -> Result<ExtendedReal> {
    let p = policy();
    let mut total = 0.0;
    for &(a, b) in blocks {
        if is_zero(a) {
            continue;
        }
        if !contained(a, b)? {
            return Ok(ExtendedReal::INFINITY);
        }
        total += a.inner(&a.log2(&p)?) - a.inner(&b.log2(&p)?);
    }
    Ok(ExtendedReal::of(total))
}

/// `log A − log B` on the support of `A`, assuming `A ≪ B`.
fn log_ratio(a: &Operator, b: &Operator) -> Result<Operator> {
    let p = policy();
    Ok(a.log2(&p)?.sub(&b.log2(&p)?))
}

/// `V(ρ‖σ) = Tr ρ (log ρ − log σ)² − D(ρ‖σ)²` in bits².
pub fn relative_entropy_variance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    relative_entropy_variance_blocks(&[(rho, sigma)])
}

pub fn relative_entropy_variance_blocks(blocks: &[Block<'_>]) -> Result<f64> {
    let mut first = 0.0;
    let mut second = 0.0;
    for &(a, b) in blocks {
        if is_zero(a) {
            continue;
        }
        if !contained(a, b)? {
            return Err(Error::SupportViolation("variance needs rho << sigma"));
        }
        let l = log_ratio(a, b)?;
        let al = a.matrix().matmul(l.matrix());
        first += a.inner(&l);
        second += al.trace_product(l.matrix()).re;
    }
    Ok(second - first * first)
}

/// `D_max(ρ‖σ) = log λ_max(σ^{-1/2} ρ σ^{-1/2})`.
pub fn d_max(rho: &Operator, sigma: &Operator) -> Result<ExtendedReal> {
    d_max_blocks(&[(rho, sigma)])
}

pub fn d_max_blocks(blocks: &[Block<'_>]) -> Result<ExtendedReal> {
    let p = policy();
    let mut best = 0.0f64;
    for &(a, b) in blocks {
        if is_zero(a) {
            continue;
        }
        if !contained(a, b)? {
            return Ok(ExtendedReal::INFINITY);
        }
        let inv = b.power(-0.5, &p)?;
        best = best.max(inv.sandwich(a).max_eigenvalue()?);
    }
    Ok(ExtendedReal::of(if best > 0.0 { best.log2() } else { f64::NEG_INFINITY }))
}

/// `Tr (A^{1/2} B^γ A^{1/2})^α`, evaluated as `Tr (D R D)^α` with `R = U† A U` in the
/// eigenbasis of `B` and `D = diag(b^{γ/2})`. The graded form keeps small
/// eigenvalues accurate, which matters once they are raised to small powers.
///
/// Everything is carried in logarithms: at small α the exponent γ/2 is in the hundreds
/// and `D` itself underflows while `d^{2α}` stays of order one. Indices are split where
/// consecutive `ln d` differ by more than [`GROUP_GAP`]; across such a gap the lower
/// group only sees the Schur complement of `R`, exactly up to rounding.
fn sandwiched_trace(a: &Operator, b: &Operator, gamma: f64, alpha: f64) -> Result<f64> {
    let p = policy();
    let sp = b.spectrum()?;
    let cut = b.cutoff(&p)?;
    let r = a.matrix().conjugate_by(&sp.vectors.adjoint());
    let mut kept: Vec<(usize, f64)> = (0..a.dim())
        .filter(|&i| sp.values[i] > cut)
        .map(|i| (i, 0.5 * gamma * sp.values[i].ln()))
        .collect();
    kept.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let rank_a = a.support_basis(&p)?.len();
    let rank_b = kept.len();

    let mut logs = Vec::with_capacity(rank_b);
    let mut start = 0;
    while start < kept.len() {
        let mut end = start + 1;
        while end < kept.len() && kept[end - 1].1 - kept[end].1 <= GROUP_GAP {
            end += 1;
        }
        let group = &kept[start..end];
        let top = group[0].1;
        let schur = schur_complement(&r, &kept[..start], group)?;
        let m = Matrix::from_fn(group.len(), |i, j| {
            schur[(i, j)] * ((group[i].1 - top).exp() * (group[j].1 - top).exp())
        });
        for &mu in Operator::new(m.hermitian_part())?.eigenvalues()? {
            if mu > 0.0 {
                logs.push(2.0 * top + mu.ln());
            }
        }
        start = end;
    }
    logs.sort_by(|x, y| y.total_cmp(x));
    Ok(logs.iter().take(rank_a.min(rank_b)).map(|l| (alpha * l).exp()).sum())
}

/// Gap in `ln d` beyond which the graded blocks decouple to double precision.
const GROUP_GAP: f64 = 115.0;

/// `R_GG − R_GP R_PP⁺ R_PG` for index sets `P` (earlier groups) and `G`.
fn schur_complement(r: &Matrix, prev: &[(usize, f64)], group: &[(usize, f64)]) -> Result<Matrix> {
    let g = group.len();
    let mut out = Matrix::from_fn(g, |i, j| r[(group[i].0, group[j].0)]);
    if prev.is_empty() {
        return Ok(out);
    }
    let k = prev.len();
    let rpp = Operator::new(Matrix::from_fn(k, |i, j| r[(prev[i].0, prev[j].0)]).hermitian_part())?;
    let pinv = rpp.power(-1.0, &policy())?;
    let pm = pinv.matrix();
    for i in 0..g {
        for j in 0..g {
            let mut z = C64::new(0.0, 0.0);
            for u in 0..k {
                for v in 0..k {
                    z += r[(group[i].0, prev[u].0)] * pm[(u, v)] * r[(prev[v].0, group[j].0)];
                }
            }
            out[(i, j)] -= z;
        }
    }
    Ok(out)
}

/// Orthonormal basis of `supp A ∩ supp B`.
pub fn support_intersection(a: &Operator, b: &Operator) -> Result<Vec<Vec<C64>>> {
    let p = policy();
    if contained(a, b)? {
        return a.support_basis(&p);
    }
    if contained(b, a)? {
        return b.support_basis(&p);
    }
    let sum = a.support_projector(&p)?.add(&b.support_projector(&p)?);
    let sp = sum.spectrum()?;
    Ok((0..sum.dim())
        .filter(|&k| sp.values[k] > 2.0 - 1e-9)
        .map(|k| sp.vector(k))
        .collect())
}

/// `P 2^{α P log A P + (1−α) P log B P} P` with `P` the projector onto `supp A ∩ supp B`.
pub fn flat_exponential(a: &Operator, b: &Operator, alpha: f64) -> Result<Operator> {
    let p = policy();
    let basis = support_intersection(a, b)?;
    if basis.is_empty() {
        return Ok(Operator::zeros(a.dim()));
    }
    let la = a.log2(&p)?.compress(&basis).scale(alpha);
    let lb = b.log2(&p)?.compress(&basis).scale(1.0 - alpha);
    Ok(la.add(&lb).exp2()?.lift(&basis, a.dim()))
}

fn flat_q_block(a: &Operator, b: &Operator, alpha: f64) -> Result<f64> {
    let p = policy();
    let basis = support_intersection(a, b)?;
    if basis.is_empty() {
        return Ok(0.0);
    }
    let la = a.log2(&p)?.compress(&basis).scale(alpha);
    let lb = b.log2(&p)?.compress(&basis).scale(1.0 - alpha);
    Ok(la.add(&lb).eigenvalues()?.iter().map(|l| l.exp2()).sum())
}

fn q_block(a: &Operator, b: &Operator, alpha: f64, variant: Variant) -> Result<f64> {
    match variant {
        Variant::Petz => {
            let p = policy();
            let pa = a.power(alpha, &p)?;
            let pb = b.power(1.0 - alpha, &p)?;
            Ok(pa.inner(&pb))
        }
        Variant::Sandwiched => {
            sandwiched_trace(a, b, (1.0 - alpha) / alpha, alpha)
        }
        Variant::Flat => flat_q_block(a, b, alpha),
    }
}

/// `Q_α` summed over blocks. Returns `+∞` for `α > 1` when some block violates `A ≪ B`.
///
/// `α = 0` is accepted here for the Petz and flat variants, where the formulas
/// remain meaningful through support projectors.
pub(crate) fn q_alpha_raw(blocks: &[Block<'_>], alpha: f64, variant: Variant) -> Result<f64> {
    let mut total = 0.0;
    for &(a, b) in blocks {
        if is_zero(a) {
            continue;
        }
        if alpha > 1.0 && !contained(a, b)? {
            return Ok(f64::INFINITY);
        }
        total += q_block(a, b, alpha, variant)?;
    }
    Ok(total)
}

/// `Q_α(ρ‖σ)` for the chosen variant.
pub fn q_alpha(rho: &Operator, sigma: &Operator, alpha: f64, variant: Variant) -> Result<f64> {
    q_alpha_blocks(&[(rho, sigma)], alpha, variant)
}

pub fn q_alpha_blocks(blocks: &[Block<'_>], alpha: f64, variant: Variant) -> Result<f64> {
    check_alpha(alpha)?;
    q_alpha_raw(blocks, alpha, variant)
}

/// `D_α(ρ‖σ) = log Q_α / (α − 1)` in bits, with the relative entropy at `α ≈ 1`.
pub fn renyi_divergence(rho: &Operator, sigma: &Operator, alpha: f64, variant: Variant) -> Result<ExtendedReal> {
    renyi_divergence_blocks(&[(rho, sigma)], alpha, variant)
}

pub fn renyi_divergence_blocks(blocks: &[Block<'_>], alpha: f64, variant: Variant) -> Result<ExtendedReal> {
    check_alpha(alpha)?;
    renyi_from_raw(blocks, alpha, variant)
}

pub(crate) fn renyi_from_raw(blocks: &[Block<'_>], alpha: f64, variant: Variant) -> Result<ExtendedReal> {
    if (alpha - 1.0).abs() < ALPHA_ONE_WINDOW {
        return relative_entropy_blocks(blocks);
    }
    if alpha < 1.0 {
        let mut all_orthogonal = true;
        for &(a, b) in blocks {
            if !is_zero(a) && !orthogonal(a, b, &policy())? {
                all_orthogonal = false;
                break;
            }
        }
        if all_orthogonal {
            return Ok(ExtendedReal::INFINITY);
        }
    }
    let q = q_alpha_raw(blocks, alpha, variant)?;
    if q == f64::INFINITY || q <= 0.0 {
        return Ok(ExtendedReal::INFINITY);
    }
    Ok(ExtendedReal::of(q.log2() / (alpha - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qubit(raw: &[f64]) -> Operator {
        let g = Matrix::from_fn(2, |i, j| C64::new(raw[2 * (2 * i + j)], raw[2 * (2 * i + j) + 1]));
        let m = g.matmul(&g.adjoint());
        let op = Operator::new(m).unwrap();
        op.scale(1.0 / op.trace())
    }

    fn full_rank_qubit() -> impl Strategy<Value = Operator> {
        prop::collection::vec(-1.0f64..1.0, 8)
            .prop_map(|raw| qubit(&raw))
            .prop_filter("well conditioned", |o| o.min_eigenvalue().unwrap() > 1e-3)
    }

    fn classical_d(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum()
    }

    #[test]
    fn relative_entropy_examples() {
        let r = Operator::diagonal(&[0.3, 0.7]);
        assert!(relative_entropy(&r, &r).unwrap().value().abs() < 1e-15);
        let k0 = Operator::diagonal(&[1.0, 0.0]);
        let mixed = Operator::diagonal(&[0.5, 0.5]);
        assert!((relative_entropy(&k0, &mixed).unwrap().value() - 1.0).abs() < 1e-15);
        let (p, q) = ([0.5, 0.5], [0.25, 0.75]);
        let d = relative_entropy(&Operator::diagonal(&p), &Operator::diagonal(&q)).unwrap().value();
        assert!((d - classical_d(&p, &q)).abs() < 1e-14);
        assert_eq!(relative_entropy(&k0, &Operator::diagonal(&[0.0, 1.0])).unwrap(), ExtendedReal::INFINITY);
    }

    #[test]
    fn variance_examples() {
        let (p, q) = ([0.5, 0.5], [0.25, 0.75]);
        let v = relative_entropy_variance(&Operator::diagonal(&p), &Operator::diagonal(&q)).unwrap();
        let d = classical_d(&p, &q);
        let second: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).log2().powi(2)).sum();
        assert!((v - (second - d * d)).abs() < 1e-14);
        let r = Operator::diagonal(&[0.3, 0.7]);
        assert!(relative_entropy_variance(&r, &r).unwrap().abs() < 1e-14);
        let s = 0.5f64.sqrt();
        let pure = Operator::pure(&[C64::new(s, 0.0), C64::new(0.0, s)]);
        assert!(relative_entropy_variance(&pure, &pure.scale(0.3)).unwrap().abs() < 1e-12);
        assert!(matches!(
            relative_entropy_variance(&Operator::diagonal(&[1.0, 0.0]), &Operator::diagonal(&[0.0, 1.0])),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn d_max_examples() {
        let r = Operator::diagonal(&[0.3, 0.7]);
        assert!(d_max(&r, &r).unwrap().value().abs() < 1e-14);
        let k0 = Operator::diagonal(&[1.0, 0.0]);
        assert!((d_max(&k0, &Operator::diagonal(&[0.5, 0.5])).unwrap().value() - 1.0).abs() < 1e-14);
        assert_eq!(d_max(&k0, &Operator::diagonal(&[0.0, 1.0])).unwrap(), ExtendedReal::INFINITY);
    }

    #[test]
    fn renyi_self_is_zero_and_alpha_checked() {
        let r = qubit(&[0.3, 0.1, -0.2, 0.5, 0.7, -0.4, 0.2, 0.9]);
        for v in Variant::ALL {
            for a in [0.3, 0.5, 0.9999999, 1.5, 3.0] {
                assert!(renyi_divergence(&r, &r, a, v).unwrap().value().abs() < 1e-12, "{v} {a}");
            }
        }
        assert_eq!(renyi_divergence(&r, &r, 0.0, Variant::Petz), Err(Error::InvalidAlpha(0.0)));
        assert_eq!(renyi_divergence(&r, &r, -1.0, Variant::Flat), Err(Error::InvalidAlpha(-1.0)));
    }

    #[test]
    fn support_conditions() {
        let k0 = Operator::diagonal(&[1.0, 0.0]);
        let k1 = Operator::diagonal(&[0.0, 1.0]);
        let partial = Operator::diagonal(&[0.5, 0.5]);
        for v in Variant::ALL {
            assert_eq!(renyi_divergence(&k0, &k1, 0.5, v).unwrap(), ExtendedReal::INFINITY);
            assert_eq!(renyi_divergence(&partial, &k0, 2.0, v).unwrap(), ExtendedReal::INFINITY);
            // α < 1 with overlapping supports stays finite.
            let d = renyi_divergence(&partial, &k0, 0.5, v).unwrap();
            assert!((d.value() - 1.0).abs() < 1e-12, "{v}: {d}");
        }
    }

    #[test]
    fn commuting_pairs_collapse() {
        let r = Operator::diagonal(&[0.1, 0.6, 0.3]);
        let s = Operator::diagonal(&[0.4, 0.4, 0.2]);
        for a in [0.2, 0.5, 0.8, 1.3, 2.0, 5.0] {
            let vals: Vec<f64> = Variant::ALL.iter().map(|&v| renyi_divergence(&r, &s, a, v).unwrap().value()).collect();
            let q: f64 = [(0.1f64, 0.4f64), (0.6, 0.4), (0.3, 0.2)].iter().map(|(x, y)| x.powf(a) * y.powf(1.0 - a)).sum();
            let oracle = q.log2() / (a - 1.0);
            for v in vals {
                assert!((v - oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn blocks_match_direct_sum() {
        let a0 = Operator::diagonal(&[0.2, 0.1]);
        let a1 = qubit(&[0.3, 0.1, -0.2, 0.5, 0.7, -0.4, 0.2, 0.9]).scale(0.7);
        let sigma = qubit(&[0.5, -0.3, 0.1, 0.2, -0.6, 0.4, 0.8, 0.1]);
        let joint = Operator::direct_sum(&[a0.clone(), a1.clone()]);
        let big = Operator::direct_sum(&[sigma.clone(), sigma.clone()]);
        let blocks = [(&a0, &sigma), (&a1, &sigma)];
        for v in Variant::ALL {
            for a in [0.4, 1.7] {
                let lhs = renyi_divergence_blocks(&blocks, a, v).unwrap().value();
                let rhs = renyi_divergence(&joint, &big, a, v).unwrap().value();
                assert!((lhs - rhs).abs() < 1e-10, "{v} {a}");
            }
        }
        let lhs = relative_entropy_variance_blocks(&blocks).unwrap();
        let rhs = relative_entropy_variance(&joint, &big).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn extended_real_text() {
        assert_eq!(ExtendedReal::INFINITY.to_string(), "inf");
        assert_eq!("-inf".parse::<ExtendedReal>().unwrap(), ExtendedReal::NEG_INFINITY);
        assert!(ExtendedReal::new(f64::NAN).is_err());
        let x = ExtendedReal::new(0.1 + 0.2).unwrap();
        assert_eq!(x.to_string().parse::<ExtendedReal>().unwrap(), x);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn ordering_between_variants(rho in full_rank_qubit(), sigma in full_rank_qubit()) {
            for k in 1..=9 {
                let a = k as f64 / 10.0;
                let s = renyi_divergence(&rho, &sigma, a, Variant::Sandwiched).unwrap().value();
                let p = renyi_divergence(&rho, &sigma, a, Variant::Petz).unwrap().value();
                let f = renyi_divergence(&rho, &sigma, a, Variant::Flat).unwrap().value();
                prop_assert!(s <= p + 1e-10 && p <= f + 1e-10, "alpha {a}: {s} {p} {f}");
            }
            for a in [1.5, 2.0, 4.0] {
                let s = renyi_divergence(&rho, &sigma, a, Variant::Sandwiched).unwrap().value();
                let p = renyi_divergence(&rho, &sigma, a, Variant::Petz).unwrap().value();
                let f = renyi_divergence(&rho, &sigma, a, Variant::Flat).unwrap().value();
                prop_assert!(f <= s + 1e-10 && s <= p + 1e-10, "alpha {a}: {f} {s} {p}");
            }
        }

        #[test]
        fn additivity(rho in full_rank_qubit(), sigma in full_rank_qubit()) {
            let rr = rho.tensor(&rho);
            let ss = sigma.tensor(&sigma);
            for v in Variant::ALL {
                for a in [0.3, 0.7, 1.0, 2.5] {
                    let one = renyi_divergence(&rho, &sigma, a, v).unwrap().value();
                    let two = renyi_divergence(&rr, &ss, a, v).unwrap().value();
                    prop_assert!((two - 2.0 * one).abs() <= 1e-9, "{v} {a}");
                }
            }
        }

        #[test]
        fn petz_monotone_in_alpha_for_commuting(p in 0.01f64..0.99, q in 0.01f64..0.99) {
            let r = Operator::diagonal(&[p, 1.0 - p]);
            let s = Operator::diagonal(&[q, 1.0 - q]);
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=19 {
                let d = renyi_divergence(&r, &s, k as f64 * 0.05, Variant::Petz).unwrap().value();
                prop_assert!(d >= prev - 1e-12);
                prev = d;
            }
        }

        #[test]
        fn positive_variance_implies_positive_divergence(rho in full_rank_qubit(), sigma in full_rank_qubit()) {
            let v = relative_entropy_variance(&rho, &sigma).unwrap();
            prop_assert!(v >= -1e-10);
            if v > 1e-6 {
                prop_assert!(relative_entropy(&rho, &sigma).unwrap().value() > 0.0);
            }
        }

        #[test]
        fn d_max_dominates(rho in full_rank_qubit(), sigma in full_rank_qubit()) {
            let g = d_max(&rho, &sigma).unwrap().value();
            let gap = sigma.scale(g.exp2()).sub(&rho);
            prop_assert!(gap.min_eigenvalue().unwrap() >= -1e-9);
        }
    }
}
