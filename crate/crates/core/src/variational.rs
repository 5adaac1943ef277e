use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use rand::Rng;

use crate::conditional::{gibbs, h_up_with, log_params, von_neumann_entropy, Method, OptimizerConfig};
use crate::divergence::{flat_exponential, relative_entropy_blocks};
use crate::error::{Error, Result};
use crate::optim::golden_max;
use crate::random::{random_probs, task_rng};
use crate::state::{policy, CQState, DensityOperator};
use crate::{support_contained, ExtendedReal, Operator, Variant, C64};

/// A c-q state `σ_XB = Σ_x q(x)|x⟩⟨x| ⊗ σ_B^x` used in the variational forms.
#[derive(Clone, Debug)]
pub struct DummyState {
    q: Vec<f64>,
    sigma: Vec<DensityOperator>,
}

impl DummyState {
    /// Validates `Σ q = 1` and `σ_XB ≪ ρ_XB` symbol by symbol.
    pub fn new(source: &CQState, q: Vec<f64>, sigma: Vec<DensityOperator>) -> Result<Self> {
        if q.len() != source.size() || sigma.len() != source.size() {
            return Err(Error::DimensionMismatch { expected: source.size(), found: q.len().min(sigma.len()) });
        }
        if q.iter().any(|v| !(*v >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::InvariantViolation("dummy probabilities".into()));
        }
        let p = policy();
        for (x, s) in sigma.iter().enumerate() {
            if s.dim() != source.dim_b() {
                return Err(Error::DimensionMismatch { expected: source.dim_b(), found: s.dim() });
            }
            if q[x] > 0.0 && (source.probs()[x] == 0.0 || !support_contained(s.op(), source.side_info()[x].op(), &p)?) {
                return Err(Error::SupportViolation("dummy state must be dominated by the source"));
            }
        }
        Ok(Self { q, sigma })
    }

    /// The source itself.
    pub fn of(source: &CQState) -> Self {
        Self { q: source.probs().to_vec(), sigma: source.side_info().to_vec() }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn sigma(&self) -> &[DensityOperator] {
        &self.sigma
    }

    /// The dummy state as a c-q state on the source alphabet.
    pub fn to_state(&self, source: &CQState) -> Result<CQState> {
        CQState::new(source.alphabet().to_vec(), self.q.clone(), self.sigma.clone())
    }

    fn blocks(&self) -> Vec<Operator> {
        self.q.iter().zip(&self.sigma).map(|(q, s)| s.op().scale(*q)).collect()
    }
}

/// Which representation to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariationalKind {
    /// `D(σ‖ρ) + |R − H(X|B)_σ|⁺`.
    RandomCoding,
    /// `D(σ‖ρ)` subject to `R ≤ H(X|B)_σ`.
    SpherePacking,
    /// `D(σ‖ρ) + |H(X|B)_σ − R|⁺`.
    StrongConverse,
}

impl fmt::Display for VariationalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariationalKind::RandomCoding => "r",
            VariationalKind::SpherePacking => "sp",
            VariationalKind::StrongConverse => "sc",
        })
    }
}

fn positive(t: f64) -> f64 {
    t.max(0.0)
}

fn conditional_entropy_of(blocks: &[Operator], dim: usize) -> Result<f64> {
    let mut joint = 0.0;
    let mut marginal = Operator::zeros(dim);
    for b in blocks {
        joint += von_neumann_entropy(b)?;
        marginal = marginal.add(b);
    }
    Ok(joint - von_neumann_entropy(&marginal)?)
}

fn objective(source: &[Operator], dim: usize, rate: f64, kind: VariationalKind, blocks: &[Operator]) -> Result<f64> {
    let pairs: Vec<_> = blocks.iter().zip(source).map(|(b, a)| (b, a)).collect();
    let d = relative_entropy_blocks(&pairs)?.value();
    let h = conditional_entropy_of(blocks, dim)?;
    Ok(match kind {
        VariationalKind::RandomCoding => d + positive(rate - h),
        VariationalKind::SpherePacking if h < rate => f64::INFINITY,
        VariationalKind::SpherePacking => d,
        VariationalKind::StrongConverse => d + positive(h - rate),
    })
}

/// Objective of the chosen representation at a given dummy state.
pub fn variational_value(s: &CQState, rate: f64, kind: VariationalKind, sigma: &DummyState) -> Result<ExtendedReal> {
    let checked = DummyState::new(s, sigma.q.clone(), sigma.sigma.clone())?;
    let source: Vec<Operator> = source_blocks(s);
    Ok(ExtendedReal::of(objective(&source, s.dim_b(), rate, kind, &checked.blocks())?))
}

fn source_blocks(s: &CQState) -> Vec<Operator> {
    s.probs().iter().zip(s.side_info()).map(|(p, r)| r.op().scale(*p)).collect()
}

/// Number of points in the candidate scan.
pub const SCAN_POINTS: usize = 200;
/// Random restarts of the local refinement.
pub const RESTARTS: usize = 5;
/// Largest tolerated improvement of the refinement over the scan.
pub const SCAN_TOLERANCE: f64 = 1e-3;

/// Minimizer for the variational forms of one source; caches the candidate family.
pub struct VariationalSolver<'a> {
    state: &'a CQState,
    source: Vec<Operator>,
    bases: Vec<Vec<Vec<C64>>>,
    cache: Mutex<HashMap<u64, Vec<Operator>>>,
    seed: u64,
}

impl<'a> VariationalSolver<'a> {
    pub fn new(state: &'a CQState) -> Result<Self> {
        let p = policy();
        let bases = state.side_info().iter().map(|r| r.op().support_basis(&p)).collect::<Result<_>>()?;
        Ok(Self { state, source: source_blocks(state), bases, cache: Mutex::new(HashMap::new()), seed: 0x7a71 })
    }

    /// Candidate `ω ∝ exp(α log ρ_XB + (1−α) log 1⊗τ*)` with `τ*` the flat `H↑_α` optimizer.
    fn candidate(&self, alpha: f64) -> Result<Vec<Operator>> {
        if let Some(c) = self.cache.lock().expect("cache lock").get(&alpha.to_bits()) {
            return Ok(c.clone());
        }
        let blocks = if (alpha - 1.0).abs() < 1e-12 {
            self.source.clone()
        } else {
            // The family is only a candidate generator, so one warm-started descent is enough.
            let cfg = OptimizerConfig { restarts: 1, ..OptimizerConfig::default() };
            let tau = h_up_with(self.state, alpha, Variant::Flat, Method::Iterate, &cfg)?.sigma_star;
            let mut raw = Vec::with_capacity(self.source.len());
            for a in &self.source {
                raw.push(if a.trace() > 0.0 { flat_exponential(a, tau.op(), alpha)? } else { Operator::zeros(a.dim()) });
            }
            let total: f64 = raw.iter().map(|b| b.trace()).sum();
            raw.into_iter().map(|b| b.scale(1.0 / total)).collect()
        };
        self.cache.lock().expect("cache lock").insert(alpha.to_bits(), blocks.clone());
        Ok(blocks)
    }

    fn value(&self, rate: f64, kind: VariationalKind, blocks: &[Operator]) -> Result<f64> {
        objective(&self.source, self.state.dim_b(), rate, kind, blocks)
    }

    /// Grid over the order α for each representation (uniform in `s = 1/α − 1` where that is bounded).
    fn grid(kind: VariationalKind) -> Vec<f64> {
        let n = SCAN_POINTS;
        let t = |k: usize| k as f64 / (n - 1) as f64;
        match kind {
            VariationalKind::RandomCoding => (0..n).map(|k| 1.0 / (1.0 + t(k))).collect(),
            VariationalKind::SpherePacking => (0..n).map(|k| 0.01 + 0.99 * t(k)).collect(),
            VariationalKind::StrongConverse => (0..n).map(|k| 1.0 / (1.0 - (1.0 - 1.0 / 64.0) * t(k))).collect(),
        }
    }

    /// Best member of the candidate family: grid scan, then golden refinement in α.
    pub fn scan(&self, rate: f64, kind: VariationalKind) -> Result<(f64, Vec<Operator>)> {
        let grid = Self::grid(kind);
        let mut values = Vec::with_capacity(grid.len());
        for &a in &grid {
            values.push(self.value(rate, kind, &self.candidate(a)?)?);
        }
        let (k, _) = values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(&y.0)))
            .expect("nonempty grid");
        let mut best = (values[k], self.candidate(grid[k])?);
        if !best.0.is_finite() {
            return Ok(best);
        }
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if hi > lo {
            let m = golden_max(
                |a| {
                    let v = self.value(rate, kind, &self.candidate(a)?)?;
                    Ok(if v.is_finite() { -v } else { f64::MIN })
                },
                lo,
                hi,
                1e-9,
            )?;
            let blocks = self.candidate(m.x)?;
            let v = self.value(rate, kind, &blocks)?;
            if v < best.0 {
                best = (v, blocks);
            }
        }
        Ok(best)
    }

    fn to_params(&self, blocks: &[Operator]) -> Result<Vec<f64>> {
        let support: Vec<usize> = self.support();
        let last = *support.last().expect("nonempty support");
        let floor = 1e-300;
        let mut theta: Vec<f64> = support[..support.len() - 1]
            .iter()
            .map(|&x| blocks[x].trace().max(floor).ln() - blocks[last].trace().max(floor).ln())
            .collect();
        for &x in &support {
            let c = blocks[x].compress(&self.bases[x]);
            let tr = c.trace();
            let c = if tr > 0.0 { c.scale(1.0 / tr) } else { Operator::identity(c.dim()).scale(1.0 / c.dim() as f64) };
            theta.extend(log_params(&c)?);
        }
        Ok(theta)
    }

    fn from_params(&self, theta: &[f64]) -> Result<Vec<Operator>> {
        let support = self.support();
        let m = support.len();
        let mut logits: Vec<f64> = theta[..m - 1].to_vec();
        logits.push(0.0);
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut blocks: Vec<Operator> = self.source.iter().map(|a| Operator::zeros(a.dim())).collect();
        let mut at = m - 1;
        for (i, &x) in support.iter().enumerate() {
            let r = self.bases[x].len();
            let len = r * r - 1;
            let local = gibbs(r, &theta[at..at + len])?;
            at += len;
            blocks[x] = local.lift(&self.bases[x], self.state.dim_b()).scale(weights[i] / total);
        }
        Ok(blocks)
    }

    fn support(&self) -> Vec<usize> {
        (0..self.source.len()).filter(|&x| self.state.probs()[x] > 0.0).collect()
    }

    fn random_params(&self, restart: usize) -> Vec<f64> {
        let mut rng = task_rng(self.seed, restart as u64);
        let support = self.support();
        let q = random_probs(&mut rng, support.len(), 0.05);
        let mut theta: Vec<f64> = (0..support.len() - 1).map(|i| q[i].ln() - q[support.len() - 1].ln()).collect();
        for &x in &support {
            let r = self.bases[x].len();
            theta.extend((0..r * r - 1).map(|_| rng.random_range(-1.0..1.0)));
        }
        theta
    }

    /// Compass search: each coordinate is probed at `±step`; the step halves when no probe improves.
    fn refine(&self, rate: f64, kind: VariationalKind, start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        let f = |t: &[f64]| -> Result<f64> { self.value(rate, kind, &self.from_params(t)?) };
        let mut x = start;
        let mut fx = f(&x)?;
        let mut step = 0.25;
        let mut evaluations = 0usize;
        while step > 1e-9 && evaluations < 200_000 {
            let mut improved = false;
            for i in 0..x.len() {
                for dir in [1.0, -1.0] {
                    let mut trial = x.clone();
                    trial[i] += dir * step;
                    let ft = f(&trial)?;
                    evaluations += 1;
                    if ft < fx {
                        x = trial;
                        fx = ft;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((fx, x))
    }

    /// Minimum of the representation and a minimizing dummy state.
    pub fn minimize(&self, rate: f64, kind: VariationalKind) -> Result<(ExtendedReal, DummyState)> {
        let (scan_value, scan_blocks) = self.scan(rate, kind)?;
        let mut starts = vec![];
        if scan_value.is_finite() {
            starts.push(self.to_params(&scan_blocks)?);
        }
        starts.extend((1..=RESTARTS).map(|k| self.random_params(k)));
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in starts {
            let (v, x) = self.refine(rate, kind, start)?;
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, x));
            }
        }
        let (refined, theta) = best.expect("at least one start");
        if scan_value.is_finite() && refined < scan_value - SCAN_TOLERANCE {
            return Err(Error::ScanMismatch { scan: scan_value, refined });
        }
        let (value, blocks) = if refined < scan_value { (refined, self.from_params(&theta)?) } else { (scan_value, scan_blocks) };
        let dummy = self.dummy(&blocks)?;
        if !value.is_finite() {
            return Ok((ExtendedReal::INFINITY, DummyState::of(self.state)));
        }
        Ok((ExtendedReal::of(value), dummy))
    }

    fn dummy(&self, blocks: &[Operator]) -> Result<DummyState> {
        let total: f64 = blocks.iter().map(|b| b.trace()).sum();
        let q: Vec<f64> = blocks.iter().map(|b| b.trace() / total).collect();
        let sigma = blocks
            .iter()
            .zip(self.state.side_info())
            .map(|(b, r)| if b.trace() > 0.0 { DensityOperator::normalized(b) } else { Ok(r.clone()) })
            .collect::<Result<Vec<_>>>()?;
        DummyState::new(self.state, q, sigma)
    }
}

/// Minimizes a representation over dummy states: candidate scan plus local refinement.
pub fn variational_minimize(s: &CQState, rate: f64, kind: VariationalKind) -> Result<(ExtendedReal, DummyState)> {
    VariationalSolver::new(s)?.minimize(rate, kind)
}
