use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::{Matrix, Operator, SupportPolicy, C64};

/// Default cap on `|X|ⁿ · d_Bⁿ` for materialized n-fold states.
pub const DEFAULT_CAP: u128 = 4096;

const PSD_TOLERANCE: f64 = 1e-10;
const TRACE_TOLERANCE: f64 = 1e-10;
const PROB_TOLERANCE: f64 = 1e-12;

/// Positive semidefinite operator of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvariantViolation("trace".into()));
        }
        if op.min_eigenvalue()? < -PSD_TOLERANCE {
            return Err(Error::InvariantViolation("psd".into()));
        }
        Ok(Self(op))
    }

    /// Rescales a nonzero PSD operator to unit trace.
    pub fn normalized(op: &Operator) -> Result<Self> {
        let tr = op.trace();
        if !(tr > 0.0) {
            return Err(Error::InvariantViolation("trace".into()));
        }
        Self::new(op.scale(1.0 / tr))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|ψ⟩⟨ψ|` for the normalized `ψ`.
    pub fn pure(psi: &[C64]) -> Self {
        Self(Operator::pure(psi))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(Operator::diagonal(probs))
    }

    #[inline]
    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl AsRef<Operator> for DensityOperator {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}

/// Classical-quantum source `Σ_x p(x) |x⟩⟨x| ⊗ ρ_B^x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CQState {
    alphabet: Vec<String>,
    probs: Vec<f64>,
    side_info: Vec<DensityOperator>,
    dim_b: usize,
}

impl CQState {
    pub fn new(alphabet: Vec<String>, probs: Vec<f64>, side_info: Vec<DensityOperator>) -> Result<Self> {
        if alphabet.is_empty() || alphabet.len() != probs.len() || probs.len() != side_info.len() {
            return Err(Error::InvariantViolation("lengths".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (probs.iter().sum::<f64>() - 1.0).abs() > PROB_TOLERANCE
        {
            return Err(Error::InvariantViolation("probs".into()));
        }
        let dim_b = side_info[0].dim();
        if dim_b == 0 || side_info.iter().any(|r| r.dim() != dim_b) {
            return Err(Error::InvariantViolation("dim_b".into()));
        }
        Ok(Self {
            alphabet,
            probs,
            side_info,
            dim_b,
        })
    }

    /// Builds a state with labels `"0"`, `"1"`, ….
    pub fn from_parts(probs: Vec<f64>, side_info: Vec<DensityOperator>) -> Result<Self> {
        let alphabet = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(alphabet, probs, side_info)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn side_info(&self) -> &[DensityOperator] {
        &self.side_info
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// The blocks `p(x) ρ_B^x` of the joint operator for symbols with `p(x) > 0`.
    pub fn weighted_blocks(&self) -> Vec<Operator> {
        self.probs
            .iter()
            .zip(&self.side_info)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, r)| r.op().scale(*p))
            .collect()
    }

    /// Block-diagonal joint operator of dimension `|X| · d_B`.
    pub fn joint_operator(&self) -> Operator {
        let blocks: Vec<Operator> = self
            .probs
            .iter()
            .zip(&self.side_info)
            .map(|(p, r)| r.op().scale(*p))
            .collect();
        Operator::direct_sum(&blocks)
    }

    pub fn marginal_b(&self) -> DensityOperator {
        let mut acc = Operator::zeros(self.dim_b);
        for (p, r) in self.probs.iter().zip(&self.side_info) {
            if *p > 0.0 {
                acc = acc.add(&r.op().scale(*p));
            }
        }
        DensityOperator(acc)
    }

    /// Drops zero-probability symbols.
    pub fn restrict_to_support(&self) -> Self {
        let keep: Vec<usize> = (0..self.size()).filter(|&i| self.probs[i] > 0.0).collect();
        Self {
            alphabet: keep.iter().map(|&i| self.alphabet[i].clone()).collect(),
            probs: keep.iter().map(|&i| self.probs[i]).collect(),
            side_info: keep.iter().map(|&i| self.side_info[i].clone()).collect(),
            dim_b: self.dim_b,
        }
    }

    /// Whether every pair of side-information states commutes.
    pub fn is_commuting(&self, tol: f64) -> bool {
        let ops = &self.side_info;
        ops.iter().enumerate().all(|(i, a)| {
            ops[i + 1..].iter().all(|b| {
                let (ma, mb) = (a.op().matrix(), b.op().matrix());
                (&ma.matmul(mb) - &mb.matmul(ma)).max_abs() <= tol
            })
        })
    }

    /// Stable hex digest of the serialized state.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            alphabet: self.alphabet.clone(),
            probs: self.probs.clone(),
            dim_b: self.dim_b,
            rho: self
                .side_info
                .iter()
                .map(|r| {
                    let m = r.op().matrix();
                    (0..self.dim_b)
                        .map(|i| (0..self.dim_b).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("state serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.into_state()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    alphabet: Vec<String>,
    probs: Vec<f64>,
    dim_b: usize,
    rho: Vec<Vec<Vec<[f64; 2]>>>,
}

impl StateFile {
    fn into_state(self) -> Result<CQState> {
        if self.alphabet.len() != self.probs.len() || self.probs.len() != self.rho.len() {
            return Err(Error::InvariantViolation("lengths".into()));
        }
        let d = self.dim_b;
        let mut side = Vec::with_capacity(self.rho.len());
        for rows in self.rho {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvariantViolation("dim_b".into()));
            }
            let data = rows
                .into_iter()
                .flatten()
                .map(|[re, im]| C64::new(re, im))
                .collect();
            let op = Operator::new(Matrix::from_vec(d, data)?)
                .map_err(|_| Error::InvariantViolation("hermitian".into()))?;
            side.push(DensityOperator::new(op)?);
        }
        CQState::new(self.alphabet, self.probs, side)
    }
}

/// `|X|⁻¹ · 1_X`.
pub fn uniform_tau(size: usize) -> Operator {
    Operator::identity(size).scale(1.0 / size as f64)
}

/// The n-fold source over `Xⁿ`, sequences ordered lexicographically.
pub fn power_state(s: &CQState, n: usize, cap: u128) -> Result<CQState> {
    if n == 0 {
        return Err(Error::DomainError("blocklength must be positive".into()));
    }
    let size = (s.size() as u128)
        .checked_pow(n as u32)
        .and_then(|a| (s.dim_b as u128).checked_pow(n as u32).and_then(|b| a.checked_mul(b)))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let mut out = s.clone();
    for _ in 1..n {
        let mut alphabet = Vec::new();
        let mut probs = Vec::new();
        let mut side = Vec::new();
        for (i, (la, pa)) in out.alphabet.iter().zip(&out.probs).enumerate() {
            for (j, (lb, pb)) in s.alphabet.iter().zip(&s.probs).enumerate() {
                alphabet.push(format!("{la},{lb}"));
                probs.push(pa * pb);
                side.push(DensityOperator(out.side_info[i].op().tensor(s.side_info[j].op())));
            }
        }
        out = CQState {
            alphabet,
            probs,
            side_info: side,
            dim_b: out.dim_b * s.dim_b,
        };
    }
    Ok(out)
}

/// Shared support policy for the domain layer.
pub(crate) fn policy() -> SupportPolicy {
    SupportPolicy::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect() -> CQState {
        CQState::from_parts(
            vec![0.5, 0.5],
            vec![DensityOperator::diagonal(&[1.0, 0.0]).unwrap(), DensityOperator::diagonal(&[0.0, 1.0]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn joint_operator_blocks() {
        let s = CQState::from_parts(
            vec![0.5, 0.5],
            vec![DensityOperator::maximally_mixed(2), DensityOperator::maximally_mixed(2)],
        )
        .unwrap();
        let j = s.joint_operator();
        assert!((j.matrix() - Operator::diagonal(&[0.25; 4]).matrix()).max_abs() < 1e-16);
        let p = perfect().joint_operator();
        assert!((p.trace() - 1.0).abs() < 1e-15);
        let rank = p.eigenvalues().unwrap().iter().filter(|l| **l > 1e-12).count();
        assert_eq!(rank, 2);
    }

    #[test]
    fn degenerate_distribution() {
        let r0 = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let s = CQState::from_parts(vec![1.0, 0.0], vec![r0.clone(), DensityOperator::maximally_mixed(2)]).unwrap();
        assert_eq!(s.weighted_blocks().len(), 1);
        assert_eq!(s.weighted_blocks()[0], *r0.op());
        assert_eq!(s.marginal_b(), r0);
    }

    #[test]
    fn marginals() {
        let m = perfect().marginal_b();
        assert!((m.op().matrix() - Operator::diagonal(&[0.5, 0.5]).matrix()).max_abs() < 1e-16);
        let sigma = DensityOperator::diagonal(&[0.2, 0.8]).unwrap();
        let s = CQState::from_parts(vec![0.3, 0.7], vec![sigma.clone(), sigma.clone()]).unwrap();
        assert!((s.marginal_b().op().matrix() - sigma.op().matrix()).max_abs() < 1e-15);
        assert_eq!(uniform_tau(4), Operator::diagonal(&[0.25; 4]));
    }

    #[test]
    fn joint_marginal_matches() {
        let s = perfect();
        let j = s.joint_operator();
        let rb = j.partial_trace(&[2, 2], &[1]).unwrap();
        assert!((rb.matrix() - s.marginal_b().op().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn power_state_basics() {
        let s = perfect();
        assert_eq!(power_state(&s, 1, DEFAULT_CAP).unwrap(), s);
        let s2 = power_state(&s, 2, DEFAULT_CAP).unwrap();
        assert_eq!(s2.probs(), &[0.25; 4]);
        assert_eq!(s2.alphabet()[1], "0,1");
        assert_eq!(s2.dim_b(), 4);
        let j1 = s.joint_operator();
        assert!((s2.joint_operator().trace() - 1.0).abs() < 1e-12);
        // Same spectrum as the tensor power, up to ordering of the basis.
        let mut a = s2.joint_operator().eigenvalues().unwrap().to_vec();
        let mut b = j1.tensor(&j1).eigenvalues().unwrap().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
    }

    #[test]
    fn power_state_cap() {
        assert!(matches!(power_state(&perfect(), 7, DEFAULT_CAP), Err(Error::CapExceeded { .. })));
        for n in 1..=4 {
            let p = power_state(&perfect(), n, DEFAULT_CAP).unwrap();
            assert!((p.joint_operator().trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn invariant_errors() {
        let r = || DensityOperator::maximally_mixed(2);
        assert_eq!(
            CQState::from_parts(vec![0.5, 0.4], vec![r(), r()]),
            Err(Error::InvariantViolation("probs".into()))
        );
        let bad = Operator::diagonal(&[1.5, -0.5]);
        assert_eq!(DensityOperator::new(bad), Err(Error::InvariantViolation("psd".into())));
    }

    #[test]
    fn json_errors_name_the_invariant() {
        let text = r#"{"alphabet":["a","b"],"probs":[0.5,0.4],"dim_b":1,"rho":[[[[1,0]]],[[[1,0]]]]}"#;
        assert_eq!(CQState::from_json(text), Err(Error::InvariantViolation("probs".into())));
        let text = r#"{"alphabet":["a"],"probs":[1.0],"dim_b":2,"rho":[[[[1.5,0],[0,0]],[[0,0],[-0.5,0]]]]}"#;
        assert_eq!(CQState::from_json(text), Err(Error::InvariantViolation("psd".into())));
        let text = "{\"alphabet\": [\"a\"],\n \"probs\": [1e0,}";
        match CQState::from_json(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_roundtrip_is_exact() {
        let s = 0.5f64.sqrt();
        let plus = DensityOperator::pure(&[C64::new(s, 0.0), C64::new(s, 0.0)]);
        let odd = DensityOperator::new(
            Operator::new(
                Matrix::from_vec(2, vec![C64::new(0.1 + 0.2, 0.0), C64::new(1.0 / 3.0, 1e-7), C64::new(1.0 / 3.0, -1e-7), C64::new(0.7 - 0.0000000000000001, 0.0)])
                    .unwrap(),
            )
            .unwrap()
            .scale(1.0 / (0.1 + 0.2 + 0.7 - 0.0000000000000001)),
        );
        let odd = odd.unwrap();
        {
            let st = CQState::new(vec!["x".into(), "y".into()], vec![0.3, 0.7], vec![plus, odd]).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.json");
            st.save(&path).unwrap();
            let back = CQState::load(&path).unwrap();
            assert_eq!(back, st);
            assert_eq!(back.hash(), st.hash());
        }
    }
}
