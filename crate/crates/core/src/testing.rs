//! Quantum Neyman–Pearson tests, the hypothesis-testing divergence and the
//! one-shot converse built on it.

use crate::divergence::{d_max_blocks, Block};
use crate::error::{Error, Result};
use crate::exponent::saddle_point;
use crate::random::{random_density, task_rng};
use crate::state::{policy, power_state, CQState, DensityOperator, DEFAULT_CAP};
use crate::{ExtendedReal, Operator};

/// Bisection steps on the Neyman–Pearson threshold.
pub const BISECTION_STEPS: usize = 64;

/// A test `0 ≤ Q ≤ 1` accepting the null hypothesis, with its two error probabilities.
#[derive(Clone, Debug)]
pub struct TestOperator {
    q: Operator,
    type1: f64,
    type2: f64,
}

impl TestOperator {
    pub fn q(&self) -> &Operator {
        &self.q
    }

    /// `Tr[(1 − Q)ρ]`.
    pub fn type1(&self) -> f64 {
        self.type1
    }

    /// `Tr[Qσ]`.
    pub fn type2(&self) -> f64 {
        self.type2
    }

    /// Checks `0 ≤ Q ≤ 1` and that the recorded errors match `(ρ, σ)`.
    pub fn verify(&self, rho: &Operator, sigma: &Operator) -> Result<()> {
        let vals = self.q.eigenvalues()?;
        if vals.first().is_some_and(|&l| l < -1e-10) || vals.last().is_some_and(|&l| l > 1.0 + 1e-10) {
            return Err(Error::InvariantViolation("test eigenvalues outside [0, 1]".into()));
        }
        let t1 = rho.trace() - self.q.inner(rho);
        let t2 = self.q.inner(sigma);
        if (t1 - self.type1).abs() > 1e-10 || (t2 - self.type2).abs() > 1e-10 {
            return Err(Error::InvariantViolation(format!(
                "recorded errors ({}, {}) differ from ({t1}, {t2})",
                self.type1, self.type2
            )));
        }
        Ok(())
    }
}

/// Blockwise test with both error terms; the operator is only assembled on request.
#[derive(Clone, Debug)]
struct BlockTest {
    q: Vec<Operator>,
    /// `Tr[Q a]` summed over blocks.
    on_a: f64,
    /// `Tr[Q b]` summed over blocks.
    on_b: f64,
}

impl BlockTest {
    fn mix(&self, other: &Self, c: f64) -> Self {
        Self {
            q: self.q.iter().zip(&other.q).map(|(x, y)| x.scale(1.0 - c).add(&y.scale(c))).collect(),
            on_a: (1.0 - c) * self.on_a + c * other.on_a,
            on_b: (1.0 - c) * self.on_b + c * other.on_b,
        }
    }
}

/// `{a − t b > 0}` blockwise.
fn threshold_test(blocks: &[Block<'_>], t: f64) -> Result<BlockTest> {
    let p = policy();
    let mut q = Vec::with_capacity(blocks.len());
    let (mut on_a, mut on_b) = (0.0, 0.0);
    for (a, b) in blocks {
        let proj = a.sub(&b.scale(t)).positive_projector(&p)?;
        on_a += proj.inner(a);
        on_b += proj.inner(b);
        q.push(proj);
    }
    Ok(BlockTest { q, on_a, on_b })
}

fn validate(blocks: &[Block<'_>], normalized: bool) -> Result<()> {
    let p = policy();
    let mut trace = 0.0;
    for (a, b) in blocks {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        a.check_psd(&p)?;
        b.check_psd(&p)?;
        trace += a.trace();
    }
    if normalized && (trace - 1.0).abs() > 1e-9 {
        return Err(Error::DomainError(format!("first argument must have unit trace, found {trace}")));
    }
    Ok(())
}

/// Upper end of the threshold bracket: `2^{D_max + 1}`, doubled further when
/// the supports are not nested.
fn upper_threshold(blocks: &[Block<'_>], reached: impl Fn(&BlockTest) -> bool) -> Result<(f64, BlockTest)> {
    let mut hi = match d_max_blocks(blocks)?.finite() {
        Some(d) => (d + 1.0).exp2(),
        None => 1.0,
    };
    for _ in 0..2100 {
        let test = threshold_test(blocks, hi)?;
        if reached(&test) {
            return Ok((hi, test));
        }
        hi *= 2.0;
    }
    Err(Error::NoConvergence { what: "threshold bracket", iterations: 2100, residual: hi })
}

/// Minimizes `Tr[Q b]` subject to `Tr[(1 − Q) a] ≤ ε` over blockwise tests.
///
/// The bisection keeps `Tr[(1 − Q_lo) a] ≤ ε < Tr[(1 − Q_hi) a]`; mixing the two
/// bracketing tests then meets the constraint with equality. When the bracket
/// straddles a jump this mixture is exactly the randomized boundary test.
fn neyman_pearson(blocks: &[Block<'_>], eps: f64) -> Result<BlockTest> {
    let total: f64 = blocks.iter().map(|(a, _)| a.trace()).sum();
    let type1 = |t: &BlockTest| total - t.on_a;
    let mut lo_test = threshold_test(blocks, 0.0)?;
    if type1(&lo_test) > eps {
        // Only possible for ε below the rounding level of the support cutoff.
        return Ok(lo_test);
    }
    if eps == 0.0 {
        // Zero type-I error forces Q ≥ Π_a, and Π_a itself is then optimal. Bisection would
        // trade type-I errors at the rounding level for visible type-II gains here.
        return Ok(lo_test);
    }
    if let Some(kernel) = kernel_test(blocks)? {
        if type1(&kernel) <= eps {
            return Ok(kernel);
        }
    }
    let (mut hi, mut hi_test) = upper_threshold(blocks, |t| type1(t) > eps)?;
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let test = threshold_test(blocks, mid)?;
        if type1(&test) > eps {
            hi = mid;
            hi_test = test;
        } else {
            lo = mid;
            lo_test = test;
        }
    }
    let (g_lo, g_hi) = (type1(&lo_test), type1(&hi_test));
    let c = ((g_hi - eps) / (g_hi - g_lo)).clamp(0.0, 1.0);
    Ok(hi_test.mix(&lo_test, c))
}

/// The test onto `ker b` restricted to where `a` lives; it has zero type-II error.
fn kernel_test(blocks: &[Block<'_>]) -> Result<Option<BlockTest>> {
    let p = policy();
    let mut q = Vec::with_capacity(blocks.len());
    let (mut on_a, mut any) = (0.0, false);
    for (a, b) in blocks {
        let k = if b.trace() > 0.0 { b.kernel_projector(&p)? } else { Operator::identity(b.dim()) };
        on_a += k.inner(a);
        any |= k.trace() > 0.5;
        q.push(k);
    }
    Ok(any.then_some(BlockTest { q, on_a, on_b: 0.0 }))
}

fn assemble(test: BlockTest, total_a: f64) -> TestOperator {
    TestOperator { q: Operator::direct_sum(&test.q), type1: (total_a - test.on_a).max(0.0), type2: test.on_b.max(0.0) }
}

fn neg_log2(x: f64) -> ExtendedReal {
    if x <= 0.0 {
        ExtendedReal::INFINITY
    } else {
        ExtendedReal::of(-x.log2())
    }
}

/// `D_H^ε(ρ‖σ) = −log₂ min {Tr[Qσ] : Tr[(1 − Q)ρ] ≤ ε}` and an optimal test.
pub fn hypothesis_testing_divergence(rho: &Operator, sigma: &Operator, eps: f64) -> Result<(ExtendedReal, TestOperator)> {
    hypothesis_testing_divergence_blocks(&[(rho, sigma)], eps)
}

/// Blockwise version for block-diagonal pairs; the returned test is their direct sum.
pub fn hypothesis_testing_divergence_blocks(blocks: &[Block<'_>], eps: f64) -> Result<(ExtendedReal, TestOperator)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    validate(blocks, true)?;
    let test = neyman_pearson(blocks, eps)?;
    let value = neg_log2(test.on_b);
    Ok((value, assemble(test, 1.0)))
}

/// `α̂_μ(ρ‖σ) = min {Tr[(1 − T)ρ] : Tr[Tσ] ≤ μ}`.
pub fn hat_alpha(rho: &Operator, sigma: &Operator, mu: f64) -> Result<f64> {
    hat_alpha_blocks(&[(rho, sigma)], mu)
}

/// Blockwise `α̂_μ`.
///
/// Bisects the threshold of `T_t = {ρ − tσ > 0}` on the type-II side so that
/// `Tr[T σ] = μ` after mixing the two bracketing tests.
pub fn hat_alpha_blocks(blocks: &[Block<'_>], mu: f64) -> Result<f64> {
    validate(blocks, true)?;
    let trace: f64 = blocks.iter().map(|(_, b)| b.trace()).sum();
    if !(mu > 0.0 && mu <= trace * (1.0 + 1e-12)) {
        return Err(Error::InvalidMu { mu, trace });
    }
    let miss = |t: &BlockTest| (1.0 - t.on_a).max(0.0);
    // Type-II error shrinks as the threshold grows.
    let mut lo_test = threshold_test(blocks, 0.0)?;
    if lo_test.on_b <= mu {
        return Ok(miss(&lo_test));
    }
    let (mut hi, mut hi_test) = upper_threshold(blocks, |t| t.on_b <= mu)?;
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let test = threshold_test(blocks, mid)?;
        if test.on_b <= mu {
            hi = mid;
            hi_test = test;
        } else {
            lo = mid;
            lo_test = test;
        }
    }
    let c = ((mu - hi_test.on_b) / (lo_test.on_b - hi_test.on_b)).clamp(0.0, 1.0);
    Ok(miss(&hi_test.mix(&lo_test, c)))
}

/// `−log₂ α̂_{|W|/|X|}(ρ_XB ‖ τ_X ⊗ σ_B)`, a lower bound on `−log P*_e(1, log|W|)`.
pub fn one_shot_converse(s: &CQState, w_size: usize, sigma_b: &DensityOperator) -> Result<ExtendedReal> {
    if w_size == 0 || w_size >= s.size() {
        return Err(Error::WTooLarge { w_size, alphabet: s.size() });
    }
    if sigma_b.dim() != s.dim_b() {
        return Err(Error::DimensionMismatch { expected: s.dim_b(), found: sigma_b.dim() });
    }
    // τ_X ⊗ σ_B is block diagonal with blocks σ_B/|X|.
    let reference = sigma_b.op().scale(1.0 / s.size() as f64);
    let blocks = s.weighted_blocks();
    let pairs: Vec<Block<'_>> = blocks.iter().map(|a| (a, &reference)).collect();
    Ok(neg_log2(hat_alpha_blocks(&pairs, w_size as f64 / s.size() as f64)?))
}

/// Reference states the converse is minimized over: `ρ_B`, `1/d_B`, the saddle
/// optimizer at rate `log₂|W|` when that rate lies in its window, and `k` random states.
pub fn converse_candidates(s: &CQState, w_size: usize, k: usize, seed: u64) -> Vec<(String, DensityOperator)> {
    let mut out = vec![
        ("rho_B".to_string(), s.marginal_b()),
        ("mixed".to_string(), DensityOperator::maximally_mixed(s.dim_b())),
    ];
    if let Ok(rep) = saddle_point(s, (w_size as f64).log2()) {
        out.push(("saddle".to_string(), rep.sigma_star));
    }
    for i in 0..k {
        let mut rng = task_rng(seed, i as u64);
        out.push((format!("random_{i}"), random_density(&mut rng, s.dim_b())));
    }
    out
}

/// Smallest converse value over [`converse_candidates`] with `k` random states.
pub fn one_shot_converse_min(s: &CQState, w_size: usize, k: usize, seed: u64) -> Result<ExtendedReal> {
    let mut best = ExtendedReal::INFINITY;
    for (_, sigma) in converse_candidates(s, w_size, k, seed) {
        best = best.min(one_shot_converse(s, w_size, &sigma)?);
    }
    Ok(best)
}

/// Per-symbol bounds on the optimal rate `R*(n, ε)/n`:
/// `−D_H^ε(ρ^{⊗n} ‖ (1⊗ρ_B)^{⊗n})/n` below and
/// `−D_H^{αε}(·)/n + log₂(8/((1−α)²ε))/n` above.
pub fn rate_window(s: &CQState, n: usize, eps: f64, alpha: f64) -> Result<(f64, f64)> {
    rate_window_capped(s, n, eps, alpha, DEFAULT_CAP)
}

pub fn rate_window_capped(s: &CQState, n: usize, eps: f64, alpha: f64, cap: u128) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let big = power_state(s, n, cap)?;
    let blocks = big.weighted_blocks();
    let marginal = big.marginal_b().into_inner();
    let pairs: Vec<Block<'_>> = blocks.iter().map(|a| (a, &marginal)).collect();
    let per = |d: ExtendedReal| -d.value() / n as f64;
    let lower = per(hypothesis_testing_divergence_blocks(&pairs, eps)?.0);
    let upper = per(hypothesis_testing_divergence_blocks(&pairs, alpha * eps)?.0)
        + (8.0 / ((1.0 - alpha).powi(2) * eps)).log2() / n as f64;
    Ok((lower, upper))
}
