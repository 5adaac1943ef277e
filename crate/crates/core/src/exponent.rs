use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::conditional::{petz_log_trace, conditional_entropy, conditional_variance, h_down, h_up, h_up_with, Method, OptimizerConfig};
use crate::divergence::renyi_from_raw;
use crate::error::{Error, Result};
use crate::optim::{bfgs_minimize, golden_max, BfgsOptions};
use crate::state::{policy, CQState, DensityOperator};
use crate::{support_contained, ExtendedReal, Operator, Variant, C64, Matrix};

/// Which exponent function to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExponentKind {
    /// Achievability exponent built from `H↓`, sup over `α ∈ [1/2, 1]`.
    RandomCodingDown,
    RandomCoding(Variant),
    SpherePacking(Variant),
    StrongConverse(Variant),
}

impl fmt::Display for ExponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentKind::RandomCodingDown => f.write_str("random_coding_down"),
            ExponentKind::RandomCoding(v) => write!(f, "random_coding_{v}"),
            ExponentKind::SpherePacking(v) => write!(f, "sphere_packing_{v}"),
            ExponentKind::StrongConverse(Variant::Sandwiched) => f.write_str("strong_converse_star"),
            ExponentKind::StrongConverse(v) => write!(f, "strong_converse_{v}"),
        }
    }
}

impl FromStr for ExponentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "random_coding_down" {
            return Ok(ExponentKind::RandomCodingDown);
        }
        let split = |prefix: &str| -> Option<Result<Variant>> {
            let rest = s.strip_prefix(prefix)?;
            Some(match rest.strip_prefix('_') {
                None if rest.is_empty() => Ok(Variant::Petz),
                Some(v) => v.parse(),
                None => Err(Error::DomainError(format!("unknown exponent kind `{s}`"))),
            })
        };
        if let Some(v) = split("random_coding") {
            return Ok(ExponentKind::RandomCoding(v?));
        }
        if let Some(v) = split("sphere_packing") {
            return Ok(ExponentKind::SpherePacking(v?));
        }
        if let Some(v) = split("strong_converse") {
            return Ok(ExponentKind::StrongConverse(v?));
        }
        Err(Error::DomainError(format!("unknown exponent kind `{s}`")))
    }
}

/// Tolerance in α for every golden-section search.
pub const ALPHA_TOLERANCE: f64 = 1e-8;
/// Bracket for the sphere-packing sup over α.
pub const SPHERE_PACKING_BRACKET: (f64, f64) = (0.01, 0.999);
/// Bracket for the strong-converse sup over α; the upper end caps the α → ∞ tail.
pub const STRONG_CONVERSE_BRACKET: (f64, f64) = (1.001, 64.0);

fn h_up_cfg(s: &CQState, alpha: f64, variant: Variant, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(h_up_with(s, alpha, variant, Method::default_for(variant), cfg)?.value)
}

/// `E_0^t(s) = −s·H↑_{1/(1+s)}`; the Petz variant uses the closed form
/// `−log Tr[(Σ_x (p(x)ρ_x)^{1/(1+s)})^{1+s}]`.
pub fn e0(state: &CQState, s: f64, variant: Variant) -> Result<f64> {
    if !(s > -1.0) || !s.is_finite() {
        return Err(Error::DomainError(format!("E_0 needs s > -1, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    if variant == Variant::Petz {
        return sibson(state, s);
    }
    Ok(-s * h_up_cfg(state, 1.0 / (1.0 + s), variant, &OptimizerConfig::default())?)
}

fn sibson(state: &CQState, s: f64) -> Result<f64> {
    Ok(-petz_log_trace(state, 1.0 / (1.0 + s))?.value)
}

/// `E_0↓(s) = −s·H↓_{1−s}` (Petz), defined for `s ≤ 1`.
pub fn e0_down(state: &CQState, s: f64) -> Result<f64> {
    if !(s <= 1.0) || !s.is_finite() {
        return Err(Error::DomainError(format!("E_0 down needs s <= 1, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(-s * h_down(state, 1.0 - s, Variant::Petz)?.value())
}

/// Value of an exponent together with the maximizing order, when there is one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentValue {
    pub value: ExtendedReal,
    pub alpha: Option<f64>,
}

pub fn exponent(state: &CQState, rate: f64, kind: ExponentKind) -> Result<ExtendedReal> {
    Ok(exponent_with(state, rate, kind, &OptimizerConfig::default())?.value)
}

/// Evaluates an exponent function and reports the optimal α.
pub fn exponent_with(state: &CQState, rate: f64, kind: ExponentKind, cfg: &OptimizerConfig) -> Result<ExponentValue> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::DomainError(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let scaled = |alpha: f64, h: f64| (1.0 - alpha) / alpha * (rate - h);
    match kind {
        ExponentKind::RandomCodingDown => {
            let m = golden_max(
                |a| Ok(scaled(a, h_down(state, 2.0 - 1.0 / a, Variant::Petz)?.value())),
                0.5,
                1.0,
                ALPHA_TOLERANCE,
            )?;
            Ok(ExponentValue { value: ExtendedReal::of(m.value.max(0.0)), alpha: Some(m.x) })
        }
        ExponentKind::RandomCoding(v) => {
            let m = golden_max(|a| Ok(scaled(a, h_up_cfg(state, a, v, cfg)?)), 0.5, 1.0, ALPHA_TOLERANCE)?;
            Ok(ExponentValue { value: ExtendedReal::of(m.value.max(0.0)), alpha: Some(m.x) })
        }
        ExponentKind::SpherePacking(v) => {
            if rate <= conditional_entropy(state)? {
                return Ok(ExponentValue { value: ExtendedReal::ZERO, alpha: Some(1.0) });
            }
            if rate > h_up_cfg(state, 0.0, v, cfg)? + 1e-9 {
                return Ok(ExponentValue { value: ExtendedReal::INFINITY, alpha: Some(0.0) });
            }
            let (lo, hi) = SPHERE_PACKING_BRACKET;
            let m = golden_max(|a| Ok(scaled(a, h_up_cfg(state, a, v, cfg)?)), lo, hi, ALPHA_TOLERANCE)?;
            Ok(ExponentValue { value: ExtendedReal::of(m.value.max(0.0)), alpha: Some(m.x) })
        }
        ExponentKind::StrongConverse(v) => {
            let (lo, hi) = STRONG_CONVERSE_BRACKET;
            let m = golden_max(|a| Ok((a - 1.0) / a * (h_up_cfg(state, a, v, cfg)? - rate)), lo, hi, ALPHA_TOLERANCE)?;
            if m.value <= 0.0 {
                return Ok(ExponentValue { value: ExtendedReal::ZERO, alpha: None });
            }
            Ok(ExponentValue { value: ExtendedReal::of(m.value), alpha: Some(m.x) })
        }
    }
}

/// Exponent values on a rate grid.
#[derive(Clone, Debug)]
pub struct ExponentCurve {
    pub rates: Vec<f64>,
    pub values: Vec<ExtendedReal>,
    pub alphas: Vec<Option<f64>>,
    pub kind: ExponentKind,
    pub state_hash: String,
    /// Upper end of the α search for strong-converse curves.
    pub alpha_cap: f64,
}

impl ExponentCurve {
    pub fn compute(state: &CQState, rates: &[f64], kind: ExponentKind) -> Result<Self> {
        if rates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::DomainError("rates must be strictly increasing".into()));
        }
        let cfg = OptimizerConfig::default();
        let points: Vec<ExponentValue> = rates
            .par_iter()
            .map(|&r| exponent_with(state, r, kind, &cfg))
            .collect::<Result<_>>()?;
        Ok(Self {
            rates: rates.to_vec(),
            values: points.iter().map(|p| p.value).collect(),
            alphas: points.iter().map(|p| p.alpha).collect(),
            kind,
            state_hash: state.hash(),
            alpha_cap: STRONG_CONVERSE_BRACKET.1,
        })
    }
}

/// Outcome of solving the sphere-packing saddle point in both orders.
#[derive(Clone, Debug)]
pub struct SaddleReport {
    pub alpha_star: f64,
    pub sigma_star: DensityOperator,
    /// `sup_α inf_σ F_R`.
    pub value: f64,
    /// `inf_σ sup_α F_R`.
    pub inf_sup: f64,
    pub gap: f64,
    /// `s* = (1 − α*)/α*`.
    pub s_star: f64,
    /// Whether `1_X ⊗ σ*` dominates the support of `ρ_XB`.
    pub support_ok: bool,
}

/// `F_R(α, σ) = (1−α)/α · (R + D_α(ρ_XB ‖ 1_X ⊗ σ))` with the Petz divergence.
pub fn saddle_objective(state: &CQState, rate: f64, alpha: f64, sigma: &Operator) -> Result<f64> {
    let blocks = state.weighted_blocks();
    let pairs: Vec<_> = blocks.iter().map(|a| (a, sigma)).collect();
    let d = renyi_from_raw(&pairs, alpha, Variant::Petz)?.value();
    Ok((1.0 - alpha) / alpha * (rate + d))
}

/// Lower end of the sphere-packing window, `H↑_1 = H(X|B)`.
pub fn window(state: &CQState) -> Result<(f64, f64)> {
    Ok((conditional_entropy(state)?, h_up(state, 0.0, Variant::Petz, Method::ClosedForm)?.value))
}

pub fn saddle_point(state: &CQState, rate: f64) -> Result<SaddleReport> {
    let (low, high) = window(state)?;
    if !(rate > low && rate < high) {
        return Err(Error::RateOutOfWindow { rate, low, high });
    }
    let (lo, hi) = SPHERE_PACKING_BRACKET;
    let outer = golden_max(
        |a| {
            let h = h_up(state, a, Variant::Petz, Method::ClosedForm)?.value;
            Ok((1.0 - a) / a * (rate - h))
        },
        lo,
        hi,
        ALPHA_TOLERANCE,
    )?;
    let alpha_star = outer.x;
    let sigma_star = h_up(state, alpha_star, Variant::Petz, Method::ClosedForm)?.sigma_star;

    // Inverse order: minimize over σ (on supp ρ_B) the inner sup over α, starting from ρ_B.
    let p = policy();
    let rho_b = state.marginal_b();
    let basis = rho_b.op().support_basis(&p)?;
    let r = basis.len();
    let inner = |sigma: &Operator| -> Result<f64> {
        let f = |a: f64| saddle_objective(state, rate, a, sigma);
        // Coarse scan first: F_R(·, σ) need not be unimodal away from σ*.
        let steps = 48;
        let mut best = (f64::NEG_INFINITY, lo);
        for k in 0..=steps {
            let a = lo + (hi - lo) * k as f64 / steps as f64;
            let v = f(a)?;
            if v > best.0 {
                best = (v, a);
            }
        }
        let width = (hi - lo) / steps as f64;
        let m = golden_max(f, (best.1 - width).max(lo), (best.1 + width).min(hi), ALPHA_TOLERANCE)?;
        Ok(m.value.max(best.0))
    };
    let embed = |theta: &[f64]| -> Result<Operator> { Ok(gibbs_compressed(r, theta)?.lift(&basis, state.dim_b())) };
    let inf_sup = if r == 1 {
        inner(&embed(&[])?)?
    } else {
        let start = log_coordinates(&rho_b.op().compress(&basis))?;
        let opts = BfgsOptions { gradient_tolerance: 1e-10, ..BfgsOptions::default() };
        bfgs_minimize(|t| inner(&embed(t)?), &start, &opts)?.value
    };
    let mut support_ok = true;
    for a in state.weighted_blocks() {
        support_ok &= support_contained(&a, sigma_star.op(), &p)?;
    }
    Ok(SaddleReport {
        alpha_star,
        value: outer.value,
        inf_sup,
        gap: (outer.value - inf_sup).abs(),
        s_star: (1.0 - alpha_star) / alpha_star,
        sigma_star,
        support_ok,
    })
}

fn gibbs_compressed(r: usize, theta: &[f64]) -> Result<Operator> {
    let mut k = Matrix::zeros(r);
    for i in 0..r - 1 {
        k[(i, i)] = C64::new(theta[i], 0.0);
    }
    let mut idx = r - 1;
    for i in 0..r {
        for j in i + 1..r {
            let z = C64::new(theta[idx], theta[idx + 1]);
            k[(i, j)] = z;
            k[(j, i)] = z.conj();
            idx += 2;
        }
    }
    let k = Operator::new(k)?;
    let top = k.max_eigenvalue()?;
    let e = k.map_spectrum(|l| (l - top).exp())?;
    let tr = e.trace();
    Ok(e.scale(1.0 / tr))
}

fn log_coordinates(sigma: &Operator) -> Result<Vec<f64>> {
    let r = sigma.dim();
    let floor = 1e-12 * sigma.max_eigenvalue()?;
    let k = sigma.map_spectrum(|l| l.max(floor).ln())?;
    let m = k.matrix();
    let shift = m[(r - 1, r - 1)].re;
    let mut theta: Vec<f64> = (0..r - 1).map(|i| m[(i, i)].re - shift).collect();
    for i in 0..r {
        for j in i + 1..r {
            theta.push(m[(i, j)].re);
            theta.push(m[(i, j)].im);
        }
    }
    Ok(theta)
}

/// `r_cr = −∂E_0/∂s` at `s = 1`, by Richardson-extrapolated central differences.
pub fn critical_rate(state: &CQState) -> Result<f64> {
    critical_rate_with_step(state, 1e-5)
}

pub fn critical_rate_with_step(state: &CQState, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((sibson(state, 1.0 + h)? - sibson(state, 1.0 - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok(-(4.0 * fine - coarse) / 3.0)
}

fn checked_variance(state: &CQState) -> Result<f64> {
    let v = conditional_variance(state)?;
    if v > 1e-9 {
        Ok(v)
    } else {
        Err(Error::ZeroVariance)
    }
}

/// `E_sp(H(X|B) + δ) / δ²` (Petz).
pub fn moderate_ratio(state: &CQState, delta: f64) -> Result<f64> {
    checked_variance(state)?;
    if !(delta > 0.0) {
        return Err(Error::DomainError(format!("delta must be positive, got {delta}")));
    }
    let h = conditional_entropy(state)?;
    let e = exponent(state, h + delta, ExponentKind::SpherePacking(Variant::Petz))?;
    Ok(e.value() / (delta * delta))
}

/// Limit of [`moderate_ratio`] as `δ → 0` in bit units, `1 / (2 ln 2 · V(X|B))`.
///
/// In natural units the limit reads `1/(2V)`; the `ln 2` appears because both
/// the exponent and the variance are expressed in bits here.
pub fn moderate_limit(state: &CQState) -> Result<f64> {
    Ok(1.0 / (2.0 * std::f64::consts::LN_2 * checked_variance(state)?))
}

/// `n·H(X|B) − √(n·V(X|B))·Φ⁻¹(ε)`, the second-order reference for the minimal code size in bits.
pub fn second_order_reference(state: &CQState, n: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let v = checked_variance(state)?;
    let h = conditional_entropy(state)?;
    let q = Normal::standard().inverse_cdf(epsilon);
    let n = n as f64;
    Ok(n * h - (n * v).sqrt() * q)
}
