//! The compression protocol at desk scale: codes, exact error probabilities,
//! random binning with pretty-good decoding, and brute-force optimal codes.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::random::task_rng;
use crate::state::{policy, power_state, CQState, DensityOperator, DEFAULT_CAP};
use crate::variational::DummyState;
use crate::{ExtendedReal, Operator};

/// Largest number of deterministic encoders the brute force will look at.
pub const ENUMERATION_CAP: u128 = 10_000_000;
/// Iteration cap of the many-state discrimination fixed point.
pub const DISCRIMINATION_ITERATIONS: usize = 5000;
/// Required dual-certificate gap for many-state discrimination.
pub const CERTIFICATE_GAP: f64 = 1e-6;
/// Absolute slack on POVM positivity and completeness.
pub const POVM_TOLERANCE: f64 = 1e-10;

/// `|W| = ⌈2^{nR}⌉`.
pub fn bins_for_rate(n: usize, rate: f64) -> usize {
    ((n as f64 * rate).exp2() - 1e-9).ceil().max(1.0) as usize
}

/// A deterministic encoder over `Xⁿ` with one decoding POVM per index.
#[derive(Clone, Debug)]
pub struct Code {
    n: usize,
    w_size: usize,
    /// `encoder[x⃗]`, sequences in lexicographic order.
    encoder: Vec<usize>,
    /// `decoder[w][x⃗] = Π_x⃗^(w)`.
    decoder: Vec<Vec<Operator>>,
}

impl Code {
    pub fn new(n: usize, w_size: usize, encoder: Vec<usize>, decoder: Vec<Vec<Operator>>) -> Result<Self> {
        if n == 0 || w_size == 0 {
            return Err(Error::DomainError("blocklength and index set must be nonempty".into()));
        }
        if encoder.iter().any(|&w| w >= w_size) {
            return Err(Error::DomainError("encoder maps outside the index set".into()));
        }
        if decoder.len() != w_size {
            return Err(Error::PovmInvalid(format!("{} POVMs for {w_size} indices", decoder.len())));
        }
        for (w, povm) in decoder.iter().enumerate() {
            if povm.len() != encoder.len() {
                return Err(Error::PovmInvalid(format!("POVM {w} has {} outcomes, expected {}", povm.len(), encoder.len())));
            }
            let dim = povm[0].dim();
            let mut sum = Operator::zeros(dim);
            for e in povm {
                if e.dim() != dim {
                    return Err(Error::PovmInvalid(format!("POVM {w} mixes dimensions")));
                }
                // elements lie below the identity, so rounding noise is absolute
                let min = e.min_eigenvalue()?;
                if min < -POVM_TOLERANCE {
                    return Err(Error::PovmInvalid(format!("POVM {w} has an element with eigenvalue {min:e}")));
                }
                sum = sum.add(e);
            }
            let residual = sum.sub(&Operator::identity(dim)).matrix().max_abs();
            if residual > 10.0 * POVM_TOLERANCE {
                return Err(Error::PovmInvalid(format!("POVM {w} sums to identity only within {residual:e}")));
            }
        }
        Ok(Self { n, w_size, encoder, decoder })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w_size(&self) -> usize {
        self.w_size
    }

    pub fn encoder(&self) -> &[usize] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[Vec<Operator>] {
        &self.decoder
    }

    /// `log₂|W| / n`.
    pub fn rate(&self) -> f64 {
        (self.w_size as f64).log2() / self.n as f64
    }

    /// `Π_x⃗^(E(x⃗))`.
    fn correct(&self, x: usize) -> &Operator {
        &self.decoder[self.encoder[x]][x]
    }
}

/// Error and success probability of a code on a source.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub p_error: f64,
    pub p_success: f64,
    /// `p(x⃗)·Tr[(1 − Π_x⃗^(E(x⃗)))ρ_x⃗]` per sequence.
    pub per_symbol: Option<Vec<f64>>,
    /// How far `p_error` may exceed the quantity it estimates; zero for exact evaluations,
    /// and the dual-certificate slack for brute-force optima.
    pub certificate: f64,
}

impl ErrorReport {
    fn from_success(p_success: f64, per_symbol: Option<Vec<f64>>) -> Self {
        let p_success = p_success.clamp(0.0, 1.0);
        Self { p_error: 1.0 - p_success, p_success, per_symbol, certificate: 0.0 }
    }
}

fn check_code(big: &CQState, code: &Code) -> Result<()> {
    if code.encoder.len() != big.size() {
        return Err(Error::PovmInvalid(format!("code covers {} sequences, source has {}", code.encoder.len(), big.size())));
    }
    if code.decoder[0][0].dim() != big.dim_b() {
        return Err(Error::PovmInvalid(format!("decoder acts on dimension {}, expected {}", code.decoder[0][0].dim(), big.dim_b())));
    }
    Ok(())
}

/// Exact `P_e = 1 − Σ_x⃗ p(x⃗) Tr[Π_x⃗^(E(x⃗)) ρ_x⃗]` by enumeration of `Xⁿ`.
pub fn error_probability(s: &CQState, n: usize, code: &Code) -> Result<ErrorReport> {
    error_probability_capped(s, n, code, DEFAULT_CAP)
}

pub fn error_probability_capped(s: &CQState, n: usize, code: &Code, cap: u128) -> Result<ErrorReport> {
    if code.n != n {
        return Err(Error::PovmInvalid(format!("code blocklength {} differs from {n}", code.n)));
    }
    let big = power_state(s, n, cap)?;
    check_code(&big, code)?;
    Ok(evaluate(&big, code))
}

fn evaluate(big: &CQState, code: &Code) -> ErrorReport {
    let mut success = 0.0;
    let mut per = Vec::with_capacity(big.size());
    for (x, (p, rho)) in big.probs().iter().zip(big.side_info()).enumerate() {
        let hit = p * code.correct(x).inner(rho.op());
        success += hit;
        per.push(p - hit);
    }
    ErrorReport::from_success(success, Some(per))
}

/// Encoder drawing each bin independently and uniformly; the bin of a sequence
/// depends only on the seed and the sequence index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomBinning {
    pub n: usize,
    pub w_size: usize,
    pub seed: u64,
}

impl RandomBinning {
    pub fn bin(&self, index: u64) -> usize {
        if self.w_size == 1 {
            return 0;
        }
        task_rng(self.seed, index).random_range(0..self.w_size)
    }

    /// The encoder table over `count` sequences.
    pub fn table(&self, count: usize) -> Vec<usize> {
        (0..count as u64).map(|i| self.bin(i)).collect()
    }
}

pub fn random_binning(n: usize, w_size: usize, seed: u64) -> Result<RandomBinning> {
    if w_size == 0 {
        return Err(Error::DomainError("w_size must be at least 1".into()));
    }
    Ok(RandomBinning { n, w_size, seed })
}

/// `{A ≥ 0}` with the support cutoff deciding the sign of tiny eigenvalues.
fn nonnegative_projector(a: &Operator) -> Result<Operator> {
    let cut = a.cutoff(&policy())?;
    a.map_spectrum(|l| if l >= -cut { 1.0 } else { 0.0 })
}

/// Per-bin POVM completion: the deficiency goes to the first member of the bin,
/// or to the global fallback (the first sequence) for an empty bin.
fn complete(members: &[usize], mut povm: Vec<Operator>, deficiency: Operator) -> Vec<Operator> {
    let target = members.first().copied().unwrap_or(0);
    povm[target] = povm[target].add(&deficiency);
    povm
}

fn bins(encoder: &[usize], w_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); w_size];
    for (x, &w) in encoder.iter().enumerate() {
        out[w].push(x);
    }
    out
}

/// Threshold operators `Λ_x⃗ = {p(x⃗)ρ_x⃗ − ρ_Bⁿ/|W| ≥ 0}` of the n-fold source.
fn threshold_operators(big: &CQState, w_size: usize) -> Result<Vec<Operator>> {
    let reference = big.marginal_b().into_inner().scale(1.0 / w_size as f64);
    big.weighted_blocks().iter().map(|a| nonnegative_projector(&a.sub(&reference))).collect()
}

fn pgm_from_thresholds(big: &CQState, n: usize, encoder: &[usize], w_size: usize, lambda: &[Operator]) -> Result<Code> {
    let p = policy();
    let dim = big.dim_b();
    let mut decoder = Vec::with_capacity(w_size);
    for members in bins(encoder, w_size) {
        let mut povm = vec![Operator::zeros(dim); encoder.len()];
        let mut sum = Operator::zeros(dim);
        for &x in &members {
            sum = sum.add(&lambda[x]);
        }
        let deficiency = if sum.trace() > 0.0 {
            let root = sum.power(-0.5, &p)?;
            for &x in &members {
                povm[x] = root.sandwich(&lambda[x]);
            }
            sum.kernel_projector(&p)?
        } else {
            Operator::identity(dim)
        };
        decoder.push(complete(&members, povm, deficiency));
    }
    Code::new(n, w_size, encoder.to_vec(), decoder)
}

/// Pretty-good decoder `Π_x⃗^(w) = S_w^{−1/2} Λ_x⃗ S_w^{−1/2}` with `S_w` the sum over bin `w`.
pub fn pgm_decoder(s: &CQState, n: usize, encoder: &[usize], w_size: usize) -> Result<Code> {
    pgm_decoder_capped(s, n, encoder, w_size, DEFAULT_CAP)
}

pub fn pgm_decoder_capped(s: &CQState, n: usize, encoder: &[usize], w_size: usize, cap: u128) -> Result<Code> {
    let big = power_state(s, n, cap)?;
    if encoder.len() != big.size() {
        return Err(Error::DimensionMismatch { expected: big.size(), found: encoder.len() });
    }
    let lambda = threshold_operators(&big, w_size)?;
    pgm_from_thresholds(&big, n, encoder, w_size, &lambda)
}

/// Outcome of minimum-error discrimination.
#[derive(Clone, Debug)]
pub struct Discrimination {
    pub povm: Vec<Operator>,
    /// `Σ_i w_i Tr[Π_i ρ_i]`.
    pub success: f64,
    /// Smallest `g ≥ 0` with `Y + g·1 ≥ w_i ρ_i` for all `i`; the optimum is at most `success + d·g`.
    pub certificate_gap: f64,
    pub iterations: usize,
}

fn certificate(weighted: &[Operator], povm: &[Operator]) -> Result<(f64, f64)> {
    let dim = weighted[0].dim();
    let mut r = crate::Matrix::zeros(dim);
    for (a, e) in weighted.iter().zip(povm) {
        r = &r + &a.matrix().matmul(e.matrix());
    }
    let y = Operator::from_matrix_unchecked(r.hermitian_part());
    let mut gap: f64 = 0.0;
    for a in weighted {
        gap = gap.max(-y.sub(a).min_eigenvalue()?);
    }
    Ok((y.trace(), gap.max(0.0)))
}

/// Best success probability for guessing `i` from `w_i ρ_i` (weights need not sum to one).
///
/// Two states use the Helstrom projector. More states run the damped fixed point
/// `Π_i ← L⁻¹ (w_iρ_i Π_i w_iρ_i) L⁻¹`, `L = (Σ_i w_i²ρ_iΠ_iρ_i)^{1/2}`, from the
/// pretty-good measurement, stopping on the dual certificate `Y ≥ w_iρ_i`.
pub fn min_error_discrimination(ensemble: &[(f64, DensityOperator)]) -> Result<Discrimination> {
    let Some(first) = ensemble.first() else {
        return Err(Error::DomainError("empty ensemble".into()));
    };
    let dim = first.1.dim();
    if ensemble.iter().any(|(w, r)| !(*w >= 0.0) || r.dim() != dim) {
        return Err(Error::DomainError("weights must be nonnegative and dimensions equal".into()));
    }
    let p = policy();
    let weighted: Vec<Operator> = ensemble.iter().map(|(w, r)| r.op().scale(*w)).collect();
    let k = weighted.len();
    let finish = |povm: Vec<Operator>, iterations: usize| -> Result<Discrimination> {
        let (success, gap) = certificate(&weighted, &povm)?;
        Ok(Discrimination { povm, success, certificate_gap: gap, iterations })
    };
    if k == 1 {
        return finish(vec![Operator::identity(dim)], 0);
    }
    if k == 2 {
        let first = weighted[0].sub(&weighted[1]).positive_projector(&p)?;
        let second = Operator::identity(dim).sub(&first);
        return finish(vec![first, second], 0);
    }
    let total = weighted.iter().fold(Operator::zeros(dim), |acc, a| acc.add(a));
    if total.trace() <= 0.0 {
        let mut povm = vec![Operator::zeros(dim); k];
        povm[0] = Operator::identity(dim);
        return finish(povm, 0);
    }
    let heaviest = (0..k).max_by(|&i, &j| weighted[i].trace().total_cmp(&weighted[j].trace()).then(j.cmp(&i))).unwrap_or(0);
    let normalize = |raw: Vec<Operator>, m: &Operator| -> Result<Vec<Operator>> {
        let mut out = raw;
        let kernel = m.kernel_projector(&p)?;
        out[heaviest] = out[heaviest].add(&kernel);
        Ok(out)
    };
    let root = total.power(-0.5, &p)?;
    let mut povm = normalize(weighted.iter().map(|a| root.sandwich(a)).collect(), &total)?;
    let mut best: Option<(f64, Vec<Operator>, usize)> = None;
    for it in 0..=DISCRIMINATION_ITERATIONS {
        let (success, gap) = certificate(&weighted, &povm)?;
        let residual = povm.iter().fold(Operator::zeros(dim), |acc, e| acc.add(e)).sub(&Operator::identity(dim)).matrix().max_abs();
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, povm.clone(), it));
        }
        if gap <= CERTIFICATE_GAP && residual <= 1e-8 {
            return Ok(Discrimination { povm, success, certificate_gap: gap, iterations: it });
        }
        let pulled: Vec<Operator> = weighted.iter().zip(&povm).map(|(a, e)| a.sandwich(e)).collect();
        let m = pulled.iter().fold(Operator::zeros(dim), |acc, x| acc.add(x));
        let inv_root = m.power(-0.5, &p)?;
        let next = normalize(pulled.iter().map(|x| inv_root.sandwich(x)).collect(), &m)?;
        povm = povm.iter().zip(&next).map(|(a, b)| a.add(b).scale(0.5)).collect();
    }
    let (gap, _, _) = best.expect("at least one iterate");
    Err(Error::NoConvergence { what: "minimum-error discrimination", iterations: DISCRIMINATION_ITERATIONS, residual: gap })
}

/// Restricted-growth strings of length `len` with at most `w` distinct labels:
/// one representative per encoder up to relabeling of the bins.
fn restricted_growth(len: usize, w: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, top: usize, len: usize, w: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=(top + 1).min(w - 1) {
            prefix.push(label);
            extend(prefix, top.max(label), len, w, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        return vec![vec![]];
    }
    let mut prefix = vec![0];
    extend(&mut prefix, 0, len, w, &mut out);
    out
}

/// `P*_e(n, log₂|W|/n)`: the best deterministic code, each bin decoded optimally.
pub fn optimal_error_bruteforce(s: &CQState, n: usize, w_size: usize) -> Result<(ErrorReport, Code)> {
    optimal_error_bruteforce_capped(s, n, w_size, DEFAULT_CAP)
}

pub fn optimal_error_bruteforce_capped(s: &CQState, n: usize, w_size: usize, cap: u128) -> Result<(ErrorReport, Code)> {
    if w_size == 0 {
        return Err(Error::DomainError("w_size must be at least 1".into()));
    }
    let big = power_state(s, n, cap)?;
    let count = big.size();
    let encoders = (w_size as u128).checked_pow(count as u32).unwrap_or(u128::MAX);
    if encoders > ENUMERATION_CAP || count > 63 {
        return Err(Error::CapExceeded { size: encoders, cap: ENUMERATION_CAP });
    }
    let ensemble: Vec<(f64, DensityOperator)> =
        big.probs().iter().zip(big.side_info()).map(|(p, r)| (*p, r.clone())).collect();
    let mut memo: HashMap<u64, Discrimination> = HashMap::new();
    let mut solve = |members: &[usize]| -> Result<(f64, f64)> {
        let key = members.iter().fold(0u64, |m, &x| m | (1 << x));
        if let Some(d) = memo.get(&key) {
            return Ok((d.success, d.certificate_gap));
        }
        let sub: Vec<_> = members.iter().map(|&x| ensemble[x].clone()).collect();
        let d = min_error_discrimination(&sub)?;
        let v = (d.success, d.certificate_gap);
        memo.insert(key, d);
        Ok(v)
    };
    let dim = big.dim_b();
    let mut best: Option<(f64, Vec<usize>)> = None;
    // largest upper bound on any encoder's true optimal success
    let mut ceiling = f64::NEG_INFINITY;
    for encoder in restricted_growth(count, w_size) {
        let mut success = 0.0;
        let mut slack = 0.0;
        for members in bins(&encoder, w_size) {
            if !members.is_empty() {
                let (v, gap) = solve(&members)?;
                success += v;
                slack += dim as f64 * gap;
            }
        }
        ceiling = ceiling.max(success + slack);
        if best.as_ref().is_none_or(|b| success > b.0) {
            best = Some((success, encoder));
        }
    }
    let (best_success, encoder) = best.expect("at least one encoder");
    let mut decoder = Vec::with_capacity(w_size);
    for members in bins(&encoder, w_size) {
        let mut povm = vec![Operator::zeros(dim); count];
        if members.is_empty() {
            povm[0] = Operator::identity(dim);
        } else {
            let key = members.iter().fold(0u64, |m, &x| m | (1 << x));
            for (e, &x) in memo[&key].povm.iter().zip(&members) {
                povm[x] = e.clone();
            }
        }
        decoder.push(povm);
    }
    let code = Code::new(n, w_size, encoder, decoder)?;
    // Each bin falls short of its optimum by at most d·gap, so no encoder
    // succeeds with probability above the ceiling.
    let mut report = evaluate(&big, &code);
    report.certificate = (ceiling - best_success).max(0.0);
    Ok((report, code))
}

/// Decoder used when averaging over random encoders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    PrettyGood,
    Optimal,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" => Ok(Self::PrettyGood),
            "optimal" => Ok(Self::Optimal),
            other => Err(Error::DomainError(format!("unknown decoder `{other}`"))),
        }
    }
}

/// Encoder-averaged error and success probabilities with the empirical exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalReport {
    pub w_size: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub mean_success: f64,
    /// Smallest error over the sampled encoders.
    pub best_error: f64,
    /// `−(1/n) log₂` of the mean error.
    pub e_hat: ExtendedReal,
    /// `−(1/n) log₂` of the mean success.
    pub sc_hat: ExtendedReal,
}

fn neg_log_rate(x: f64, n: usize) -> ExtendedReal {
    if x <= 0.0 {
        ExtendedReal::INFINITY
    } else {
        ExtendedReal::of(-x.log2() / n as f64)
    }
}

fn decode(big: &CQState, n: usize, encoder: &[usize], w_size: usize, kind: DecoderKind, lambda: &[Operator]) -> Result<f64> {
    match kind {
        DecoderKind::PrettyGood => Ok(evaluate(big, &pgm_from_thresholds(big, n, encoder, w_size, lambda)?).p_error),
        DecoderKind::Optimal => {
            let mut success = 0.0;
            for members in bins(encoder, w_size) {
                if members.is_empty() {
                    continue;
                }
                let sub: Vec<_> = members.iter().map(|&x| (big.probs()[x], big.side_info()[x].clone())).collect();
                success += min_error_discrimination(&sub)?.success;
            }
            Ok((1.0 - success).clamp(0.0, 1.0))
        }
    }
}

fn summarize(errors: Vec<f64>, n: usize, w_size: usize) -> EmpiricalReport {
    let trials = errors.len();
    let mean_error = errors.iter().sum::<f64>() / trials as f64;
    let mean_success = 1.0 - mean_error;
    EmpiricalReport {
        w_size,
        trials,
        mean_error,
        mean_success,
        best_error: errors.iter().cloned().fold(f64::INFINITY, f64::min),
        e_hat: neg_log_rate(mean_error, n),
        sc_hat: neg_log_rate(mean_success, n),
    }
}

/// Averages the error over `trials` random-binning encoders at `|W| = ⌈2^{nR}⌉`.
pub fn empirical_exponents(s: &CQState, n: usize, rate: f64, kind: DecoderKind, trials: usize, seed: u64) -> Result<EmpiricalReport> {
    empirical_exponents_capped(s, n, rate, kind, trials, seed, DEFAULT_CAP)
}

pub fn empirical_exponents_capped(
    s: &CQState,
    n: usize,
    rate: f64,
    kind: DecoderKind,
    trials: usize,
    seed: u64,
    cap: u128,
) -> Result<EmpiricalReport> {
    if trials == 0 {
        return Err(Error::DomainError("trials must be at least 1".into()));
    }
    let big = power_state(s, n, cap)?;
    let w_size = bins_for_rate(n, rate);
    let lambda = threshold_operators(&big, w_size)?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = task_rng(seed, t as u64).random::<u64>();
            let encoder = random_binning(n, w_size, trial_seed)?.table(big.size());
            decode(&big, n, &encoder, w_size, kind, &lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(errors, n, w_size))
}

/// Exact average over all `|W|^{|X|ⁿ}` encoders.
pub fn exhaustive_average(s: &CQState, n: usize, w_size: usize, kind: DecoderKind, cap: u128) -> Result<EmpiricalReport> {
    let big = power_state(s, n, cap)?;
    let count = big.size();
    let encoders = (w_size as u128).checked_pow(count as u32).unwrap_or(u128::MAX);
    if encoders > ENUMERATION_CAP {
        return Err(Error::CapExceeded { size: encoders, cap: ENUMERATION_CAP });
    }
    let lambda = threshold_operators(&big, w_size)?;
    let errors = (0..encoders as u64)
        .into_par_iter()
        .map(|mut index| {
            let encoder: Vec<usize> = (0..count)
                .map(|_| {
                    let w = (index % w_size as u64) as usize;
                    index /= w_size as u64;
                    w
                })
                .collect();
            decode(&big, n, &encoder, w_size, kind, &lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(errors, n, w_size))
}

/// Checks `P_s(ρ, C) ≥ e^{−a}(P_s(σ, C) − Tr[(σ − e^a ρ)_+])` with slack `1e-10`.
///
/// `s` is the single-letter source; the dummy state lives on the code's `Xⁿ`.
pub fn dummy_state_inequality_check(s: &CQState, sigma: &DummyState, code: &Code, a: f64) -> Result<bool> {
    if !(a > 0.0) {
        return Err(Error::DomainError(format!("a = {a} must be positive")));
    }
    let big = power_state(s, code.n, DEFAULT_CAP)?;
    check_code(&big, code)?;
    if sigma.q().len() != big.size() {
        return Err(Error::DimensionMismatch { expected: big.size(), found: sigma.q().len() });
    }
    let p = policy();
    let rho_success = evaluate(&big, code).p_success;
    let mut sigma_success = 0.0;
    let mut excess = 0.0;
    for (x, (q, sx)) in sigma.q().iter().zip(sigma.sigma()).enumerate() {
        let block = sx.op().scale(*q);
        sigma_success += code.correct(x).inner(&block);
        let diff = block.sub(&big.side_info()[x].op().scale(big.probs()[x] * a.exp()));
        excess += diff.positive_part(&p)?.trace();
    }
    let rhs = (-a).exp() * (sigma_success - excess);
    Ok(rho_success >= rhs - 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_cq_state, random_density, random_probs, random_test};
    use crate::C64;

    fn perfect() -> CQState {
        CQState::from_parts(
            vec![0.5, 0.5],
            vec![DensityOperator::diagonal(&[1.0, 0.0]).unwrap(), DensityOperator::diagonal(&[0.0, 1.0]).unwrap()],
        )
        .unwrap()
    }

    fn flat() -> CQState {
        CQState::from_parts(vec![0.5, 0.5], vec![DensityOperator::maximally_mixed(2); 2]).unwrap()
    }

    fn zero_plus() -> CQState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CQState::from_parts(
            vec![0.5, 0.5],
            vec![
                DensityOperator::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
                DensityOperator::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]),
            ],
        )
        .unwrap()
    }

    fn projective(d: usize) -> Vec<Operator> {
        (0..d).map(|i| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            Operator::diagonal(&v)
        })
        .collect()
    }

    #[test]
    fn rate_convention() {
        assert_eq!(bins_for_rate(1, 0.0), 1);
        assert_eq!(bins_for_rate(2, 0.5), 2);
        assert_eq!(bins_for_rate(3, 0.6), 4);
    }

    #[test]
    fn simple_codes() {
        let code = Code::new(1, 1, vec![0, 0], vec![projective(2)]).unwrap();
        assert_eq!(error_probability(&perfect(), 1, &code).unwrap().p_error, 0.0);
        let e = error_probability(&flat(), 1, &code).unwrap();
        assert!(e.p_error >= 0.5 - 1e-15 && (e.p_error + e.p_success - 1.0).abs() < 1e-12);
        let trivial = vec![vec![Operator::identity(2), Operator::zeros(2)], vec![Operator::zeros(2), Operator::identity(2)]];
        let identity = Code::new(1, 2, vec![0, 1], trivial).unwrap();
        assert_eq!(error_probability(&flat(), 1, &identity).unwrap().p_error, 0.0);
    }

    #[test]
    fn invalid_povm_is_rejected() {
        let broken = vec![vec![Operator::identity(2), Operator::identity(2)]];
        assert!(matches!(Code::new(1, 1, vec![0, 0], broken), Err(Error::PovmInvalid(_))));
    }

    #[test]
    fn binning_contract() {
        let one = random_binning(3, 1, 5).unwrap().table(8);
        assert!(one.iter().all(|&w| w == 0));
        let a = random_binning(3, 4, 9).unwrap();
        assert_eq!(a.table(256), a.table(256));
        // Reverse-order evaluation gives the same bins.
        let rev: Vec<usize> = (0..256u64).rev().map(|i| a.bin(i)).collect();
        assert!(rev.iter().rev().eq(a.table(256).iter()));
        // Binomial(256, 1/4): mean 64, standard deviation √48.
        let mut counts = [0usize; 4];
        for w in a.table(256) {
            counts[w] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 - 64.0).abs() <= 4.0 * 48f64.sqrt()), "{counts:?}");
    }

    #[test]
    fn pgm_examples() {
        let code = pgm_decoder(&perfect(), 1, &[0, 0], 1).unwrap();
        assert!(error_probability(&perfect(), 1, &code).unwrap().p_error.abs() < 1e-12);
        // Singleton bins: the PGM element is the support projector of Λ_x plus the completion.
        let s = zero_plus();
        let code = pgm_decoder(&s, 1, &[0, 1], 2).unwrap();
        assert!(error_probability(&s, 1, &code).unwrap().p_error.abs() < 1e-12);
    }

    #[test]
    fn discrimination_examples() {
        let d = min_error_discrimination(&[(1.0, DensityOperator::maximally_mixed(2))]).unwrap();
        assert_eq!(d.success, 1.0);
        let e0 = DensityOperator::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let e1 = DensityOperator::diagonal(&[0.0, 1.0, 0.0]).unwrap();
        let e2 = DensityOperator::diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let d = min_error_discrimination(&[(1.0 / 3.0, e0), (1.0 / 3.0, e1), (1.0 / 3.0, e2)]).unwrap();
        assert!((d.success - 1.0).abs() < 1e-9);
        let s = zero_plus();
        let ens: Vec<_> = s.probs().iter().cloned().zip(s.side_info().iter().cloned()).collect();
        let d = min_error_discrimination(&ens).unwrap();
        let helstrom = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
        assert!((d.success - helstrom).abs() < 1e-12);
    }

    #[test]
    fn trine_reaches_known_optimum() {
        // Equiprobable trine states: the optimum 2/3 is the textbook value for the symmetric ensemble.
        let trine: Vec<_> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                (1.0 / 3.0, DensityOperator::pure(&[C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)]))
            })
            .collect();
        let d = min_error_discrimination(&trine).unwrap();
        assert!((d.success - 2.0 / 3.0).abs() < 1e-6, "{}", d.success);
    }

    #[test]
    fn many_state_certificate_bounds_random_povms() {
        let mut rng = task_rng(11, 0);
        let probs = random_probs(&mut rng, 4, 0.05);
        let ens: Vec<_> = probs.iter().map(|&p| (p, random_density(&mut rng, 2))).collect();
        let d = min_error_discrimination(&ens).unwrap();
        assert!(d.certificate_gap <= CERTIFICATE_GAP);
        for _ in 0..100 {
            // Random POVM from a random test and its complement split among two outcomes.
            let t = random_test(&mut rng, 2);
            let u = random_test(&mut rng, 2);
            let rest = Operator::identity(2).sub(&t);
            let root = rest.power(0.5, &policy()).unwrap();
            let povm = [t.clone(), root.sandwich(&u), root.sandwich(&Operator::identity(2).sub(&u)), Operator::zeros(2)];
            let success: f64 = povm.iter().zip(&ens).map(|(e, (w, r))| w * e.inner(r.op())).sum();
            assert!(success <= d.success + 2.0 * d.certificate_gap + 1e-12);
        }
    }

    #[test]
    fn growth_strings_count_partitions() {
        // Bell numbers and Stirling sums: partitions of 4 into at most 2 blocks = 1 + 7.
        assert_eq!(restricted_growth(4, 4).len(), 15);
        assert_eq!(restricted_growth(4, 2).len(), 8);
        assert_eq!(restricted_growth(3, 1), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn bruteforce_examples() {
        assert!(optimal_error_bruteforce(&perfect(), 1, 1).unwrap().0.p_error.abs() < 1e-12);
        assert!((optimal_error_bruteforce(&flat(), 1, 1).unwrap().0.p_error - 0.5).abs() < 1e-12);
        let (r, code) = optimal_error_bruteforce(&zero_plus(), 1, 1).unwrap();
        assert!((r.p_error - 0.5 * (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
        assert_eq!(error_probability(&zero_plus(), 1, &code).unwrap(), r);
    }

    #[test]
    fn bruteforce_is_monotone_in_index_set() {
        let s = random_cq_state(&mut task_rng(12, 0), 3, 2);
        let errors: Vec<f64> = (1..=3).map(|w| optimal_error_bruteforce(&s, 1, w).unwrap().0.p_error).collect();
        assert!(errors.windows(2).all(|p| p[1] <= p[0] + 1e-12), "{errors:?}");
        assert!(errors[2].abs() < 1e-12);
    }

    #[test]
    fn bruteforce_cap() {
        let s = random_cq_state(&mut task_rng(13, 0), 2, 2);
        assert!(matches!(optimal_error_bruteforce(&s, 3, 8), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn empirical_examples() {
        let r = empirical_exponents(&perfect(), 2, 0.5, DecoderKind::PrettyGood, 5, 3).unwrap();
        assert_eq!(r.e_hat, ExtendedReal::INFINITY);
        let s = zero_plus();
        let a = empirical_exponents(&s, 2, 0.7, DecoderKind::PrettyGood, 20, 4).unwrap();
        let b = empirical_exponents(&s, 2, 0.7, DecoderKind::PrettyGood, 20, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaging_identity() {
        // The average of deterministic-code errors equals the randomized code's error,
        // here accumulated sequence by sequence instead of encoder by encoder.
        let s = random_cq_state(&mut task_rng(14, 0), 2, 2);
        let avg = exhaustive_average(&s, 1, 2, DecoderKind::PrettyGood, DEFAULT_CAP).unwrap();
        let mut per_symbol = [0.0; 2];
        for index in 0..4usize {
            let encoder = vec![index % 2, index / 2];
            let code = pgm_decoder(&s, 1, &encoder, 2).unwrap();
            let r = error_probability(&s, 1, &code).unwrap();
            for (acc, v) in per_symbol.iter_mut().zip(r.per_symbol.unwrap()) {
                *acc += v / 4.0;
            }
        }
        assert!((per_symbol.iter().sum::<f64>() - avg.mean_error).abs() < 1e-12);
    }

    #[test]
    fn dummy_inequality_examples() {
        let s = zero_plus();
        let code = pgm_decoder(&s, 1, &[0, 0], 1).unwrap();
        let me = DummyState::of(&s);
        for a in [0.1, 1.0, 3.0] {
            assert!(dummy_state_inequality_check(&s, &me, &code, a).unwrap());
        }
        let mut rng = task_rng(15, 0);
        for _ in 0..10 {
            let src = random_cq_state(&mut rng, 2, 2);
            let dummy = DummyState::new(
                &src,
                random_probs(&mut rng, 2, 0.0),
                (0..2).map(|_| random_density(&mut rng, 2)).collect(),
            )
            .unwrap();
            let encoder = random_binning(1, 2, rng.random()).unwrap().table(2);
            let code = pgm_decoder(&src, 1, &encoder, 2).unwrap();
            for a in [0.1, 1.0, 3.0] {
                assert!(dummy_state_inequality_check(&src, &dummy, &code, a).unwrap());
            }
        }
    }
}
