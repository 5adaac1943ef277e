use std::fmt;

use rand::Rng;

use crate::divergence::{relative_entropy_blocks, relative_entropy_variance_blocks, renyi_from_raw, Block, ALPHA_ONE_WINDOW};
use crate::error::{Error, Result};
use crate::optim::{bfgs_minimize, BfgsOptions};
use crate::random::task_rng;
use crate::state::{policy, CQState, DensityOperator};
use crate::{ExtendedReal, Matrix, Operator, Variant, C64};

/// Whether the reference state on `B` is optimized (`Up`) or fixed to `ρ_B` (`Down`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arrow {
    Up,
    Down,
}

impl fmt::Display for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arrow::Up => "up",
            Arrow::Down => "down",
        })
    }
}

/// How the maximization over `σ_B` is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Closed-form optimizer, Petz variant only.
    ClosedForm,
    /// Quasi-Newton descent over `σ = e^K / Tr e^K`.
    Iterate,
    /// Exhaustive Bloch-ball scan, qubit side information only.
    Grid,
}

impl Method {
    pub fn default_for(variant: Variant) -> Self {
        match variant {
            Variant::Petz => Method::ClosedForm,
            _ => Method::Iterate,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerReport {
    pub sigma_star: DensityOperator,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Knobs for the iterative optimizer.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub bfgs: BfgsOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: 0x5eed,
            bfgs: BfgsOptions::default(),
        }
    }
}

/// Orders at which a vanishing-α limit is extrapolated.
const RICHARDSON_ALPHAS: [f64; 3] = [0.1, 0.01, 0.001];

/// Richardson extrapolation to `α = 0` from values on a grid with ratio 10.
fn richardson(values: [f64; 3]) -> f64 {
    let r1 = (10.0 * values[1] - values[0]) / 9.0;
    let r2 = (10.0 * values[2] - values[1]) / 9.0;
    (100.0 * r2 - r1) / 99.0
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn blocks_against<'a>(blocks: &'a [Operator], sigma: &'a Operator) -> Vec<Block<'a>> {
    blocks.iter().map(|a| (a, sigma)).collect()
}

/// `−D_α(ρ_XB ‖ 1_X ⊗ σ)` for the weighted blocks of a source.
fn neg_divergence(blocks: &[Operator], sigma: &Operator, alpha: f64, variant: Variant) -> Result<f64> {
    Ok(-renyi_from_raw(&blocks_against(blocks, sigma), alpha, variant)?.value())
}

/// `H↓_α(X|B) = −D_α(ρ_XB ‖ 1_X ⊗ ρ_B)`.
pub fn h_down(s: &CQState, alpha: f64, variant: Variant) -> Result<ExtendedReal> {
    check_order(alpha)?;
    let blocks = s.weighted_blocks();
    let rho_b = s.marginal_b().into_inner();
    if alpha == 0.0 && variant == Variant::Sandwiched {
        let vals = RICHARDSON_ALPHAS.map(|a| neg_divergence(&blocks, &rho_b, a, variant));
        let [a, b, c] = vals;
        return Ok(ExtendedReal::of(richardson([a?, b?, c?])));
    }
    Ok(ExtendedReal::of(neg_divergence(&blocks, &rho_b, alpha, variant)?))
}

/// `H(X|B) = H(ρ_XB) − H(ρ_B)`.
pub fn conditional_entropy(s: &CQState) -> Result<f64> {
    let joint: f64 = s.weighted_blocks().iter().map(von_neumann_entropy).sum::<Result<f64>>()?;
    Ok(joint - von_neumann_entropy(s.marginal_b().op())?)
}

/// `V(X|B) = V(ρ_XB ‖ 1_X ⊗ ρ_B)`.
pub fn conditional_variance(s: &CQState) -> Result<f64> {
    let blocks = s.weighted_blocks();
    let rho_b = s.marginal_b().into_inner();
    relative_entropy_variance_blocks(&blocks_against(&blocks, &rho_b))
}

/// `−Tr A log A` over eigenvalues above the support cutoff.
pub fn von_neumann_entropy(a: &Operator) -> Result<f64> {
    let cut = a.cutoff(&policy())?;
    Ok(a.eigenvalues()?
        .iter()
        .filter(|&&l| l > cut)
        .map(|l| -l * l.log2())
        .sum())
}

/// `H↑_α(X|B)` with the default method for the variant.
pub fn h_up_value(s: &CQState, alpha: f64, variant: Variant) -> Result<f64> {
    Ok(h_up(s, alpha, variant, Method::default_for(variant))?.value)
}

pub fn h_up(s: &CQState, alpha: f64, variant: Variant, method: Method) -> Result<OptimizerReport> {
    h_up_with(s, alpha, variant, method, &OptimizerConfig::default())
}

/// `H↑_α(X|B) = max_σ −D_α(ρ_XB ‖ 1_X ⊗ σ_B)` with an explicit optimizer configuration.
pub fn h_up_with(s: &CQState, alpha: f64, variant: Variant, method: Method, cfg: &OptimizerConfig) -> Result<OptimizerReport> {
    check_order(alpha)?;
    if (alpha - 1.0).abs() < ALPHA_ONE_WINDOW {
        let rho_b = s.marginal_b();
        let blocks = s.weighted_blocks();
        let value = -relative_entropy_blocks(&blocks_against(&blocks, rho_b.op()))?.value();
        return Ok(OptimizerReport { sigma_star: rho_b, value, iterations: 0, residual: 0.0 });
    }
    match method {
        Method::ClosedForm => {
            if variant != Variant::Petz {
                return Err(Error::MethodUnsupported("closed form exists for the Petz variant only"));
            }
            petz_closed_form(s, alpha)
        }
        Method::Iterate => {
            if alpha == 0.0 && variant == Variant::Sandwiched {
                let mut reports = Vec::with_capacity(3);
                for a in RICHARDSON_ALPHAS {
                    reports.push(iterate(s, a, variant, cfg)?);
                }
                let value = richardson([reports[0].value, reports[1].value, reports[2].value]);
                let last = reports.pop().expect("three reports");
                return Ok(OptimizerReport { value, ..last });
            }
            if (alpha - 1.0).abs() < NEAR_ONE {
                return near_one(s, alpha, variant, cfg);
            }
            iterate(s, alpha, variant, cfg)
        }
        Method::Grid => grid(s, alpha, variant),
    }
}

/// Half-width of the band around `α = 1` where the iterate is replaced by interpolation.
pub const NEAR_ONE: f64 = 1e-3;

/// Quadratic interpolation of `H↑` through `1 − NEAR_ONE`, `1` and `1 + NEAR_ONE`.
///
/// Inside the band the `1/(α−1)` factor lifts rounding in `log Q` above what a
/// finite-difference gradient can resolve, while `H↑_α` itself is smooth: the
/// interpolation error is below `0.07·|∂³H/∂α³|·NEAR_ONE³`.
fn near_one(s: &CQState, alpha: f64, variant: Variant, cfg: &OptimizerConfig) -> Result<OptimizerReport> {
    let lo = iterate(s, 1.0 - NEAR_ONE, variant, cfg)?;
    let hi = iterate(s, 1.0 + NEAR_ONE, variant, cfg)?;
    let mid = conditional_entropy(s)?;
    let x = (alpha - 1.0) / NEAR_ONE;
    let value = mid + 0.5 * x * (hi.value - lo.value) + 0.5 * x * x * (hi.value - 2.0 * mid + lo.value);
    let iterations = lo.iterations + hi.iterations;
    let residual = lo.residual.max(hi.residual);
    let nearest = if alpha < 1.0 { lo } else { hi };
    Ok(OptimizerReport { sigma_star: nearest.sigma_star, value, iterations, residual })
}

fn petz_closed_form(s: &CQState, alpha: f64) -> Result<OptimizerReport> {
    let mut rep = petz_log_trace(s, alpha)?;
    if alpha > 0.0 {
        rep.value *= alpha / (1.0 - alpha);
    }
    Ok(rep)
}

/// `log Tr (Σ_x A_x^α)^{1/α}` with its normalized optimizer; at `α = 0` the value is already `H↑_0`.
pub(crate) fn petz_log_trace(s: &CQState, alpha: f64) -> Result<OptimizerReport> {
    let p = policy();
    let blocks = s.weighted_blocks();
    let mut acc = Operator::zeros(s.dim_b());
    if alpha == 0.0 {
        for a in &blocks {
            acc = acc.add(&a.support_projector(&p)?);
        }
        let sp = acc.spectrum()?;
        let top = acc.dim() - 1;
        let sigma_star = DensityOperator::pure(&sp.vector(top));
        return Ok(OptimizerReport {
            sigma_star,
            value: sp.values[top].log2(),
            iterations: 0,
            residual: 0.0,
        });
    }
    // Work on supp ρ_B with every block scaled by the largest block eigenvalue t:
    // S/t^α keeps its small eigenvalues, which S^{1/α} magnifies when α > 1.
    let basis = s.marginal_b().op().support_basis(&p)?;
    let mut t = 0.0f64;
    for a in &blocks {
        t = t.max(a.max_eigenvalue()?);
    }
    let compressed: Vec<Operator> = blocks.iter().map(|a| a.compress(&basis).scale(1.0 / t)).collect();
    let (acc, frame) = if alpha > 1.0 { graded_power_sum(&compressed, alpha)? } else {
        let mut acc = Operator::zeros(basis.len());
        for a in &compressed {
            acc = acc.add(&a.power(alpha, &p)?);
        }
        (acc, None)
    };
    // Tr S^{1/α} overflows for small α, so factor out the top eigenvalue as well.
    let top = acc.max_eigenvalue()?;
    let mut root = acc.scale(1.0 / top).map_spectrum(|l| l.max(0.0).powf(1.0 / alpha))?;
    if let Some(w) = frame {
        root = root.conjugate_by(&w);
    }
    let log_trace = t.log2() + top.log2() / alpha + root.trace().log2();
    Ok(OptimizerReport {
        sigma_star: DensityOperator::normalized(&root.lift(&basis, s.dim_b()))?,
        value: log_trace,
        iterations: 0,
        residual: 0.0,
    })
}

/// `Σ_x A_x^α` for `α > 1`, expressed in the eigenbasis `W` of the block with the largest eigenvalue.
///
/// Forming the sum in the standard basis buries eigenvalues below `ε·λ_max`, yet those
/// come back at relative size `(ε)^{1/α}` in `S^{1/α}`. In the dominant eigenbasis the
/// sum is graded, so each entry keeps its own relative accuracy. Returns the sum and `W`.
fn graded_power_sum(blocks: &[Operator], alpha: f64) -> Result<(Operator, Option<Matrix>)> {
    let p = policy();
    let mut reference = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, a) in blocks.iter().enumerate() {
        let m = a.max_eigenvalue()?;
        if m > best {
            best = m;
            reference = i;
        }
    }
    let w = blocks[reference].spectrum()?.vectors.clone();
    let wa = w.adjoint();
    let r = w.dim();
    let mut acc = Matrix::zeros(r);
    for (i, a) in blocks.iter().enumerate() {
        let cut = a.cutoff(&p)?;
        let sp = a.spectrum()?;
        let powered: Vec<f64> = sp.values.iter().map(|&l| if l > cut { l.powf(alpha) } else { 0.0 }).collect();
        if i == reference {
            for (k, v) in powered.iter().enumerate() {
                acc[(k, k)] += C64::new(*v, 0.0);
            }
            continue;
        }
        let c = wa.matmul(&sp.vectors);
        for row in 0..r {
            for col in 0..r {
                let mut z = C64::new(0.0, 0.0);
                for (k, v) in powered.iter().enumerate() {
                    z += c[(row, k)] * c[(col, k)].conj() * *v;
                }
                acc[(row, col)] += z;
            }
        }
    }
    Ok((Operator::new(acc)?, Some(w)))
}

/// Coordinates of a Hermitian `r×r` matrix whose last diagonal entry is pinned to zero.
fn hermitian_from_params(r: usize, theta: &[f64]) -> Matrix {
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
    k
}

fn params_from_hermitian(k: &Matrix) -> Vec<f64> {
    let r = k.dim();
    let shift = k[(r - 1, r - 1)].re;
    let mut theta: Vec<f64> = (0..r - 1).map(|i| k[(i, i)].re - shift).collect();
    for i in 0..r {
        for j in i + 1..r {
            theta.push(k[(i, j)].re);
            theta.push(k[(i, j)].im);
        }
    }
    theta
}

/// `e^K / Tr e^K`.
pub(crate) fn gibbs(r: usize, theta: &[f64]) -> Result<Operator> {
    let k = Operator::new(hermitian_from_params(r, theta))?;
    let top = k.max_eigenvalue()?;
    let e = k.map_spectrum(|l| (l - top).exp())?;
    let tr = e.trace();
    Ok(e.scale(1.0 / tr))
}

pub(crate) fn log_params(sigma: &Operator) -> Result<Vec<f64>> {
    let floor = 1e-12 * sigma.max_eigenvalue()?;
    let k = sigma.map_spectrum(|l| l.max(floor).ln())?;
    Ok(params_from_hermitian(k.matrix()))
}

fn iterate(s: &CQState, alpha: f64, variant: Variant, cfg: &OptimizerConfig) -> Result<OptimizerReport> {
    let p = policy();
    let rho_b = s.marginal_b();
    let basis = rho_b.op().support_basis(&p)?;
    let r = basis.len();
    let blocks: Vec<Operator> = s.weighted_blocks().iter().map(|a| a.compress(&basis)).collect();
    if r == 1 {
        let sigma = Operator::identity(1);
        return Ok(OptimizerReport {
            sigma_star: DensityOperator::new(sigma.lift(&basis, s.dim_b()))?,
            value: neg_divergence(&blocks, &sigma, alpha, variant)?,
            iterations: 0,
            residual: 0.0,
        });
    }
    // The sandwiched objective sees σ through σ^{(1−α)/α}, and for α > 1 every variant's
    // higher derivatives grow with α. Coordinates scaled by that factor keep the curvature
    // of order one, so the finite-difference gradient stays accurate at the extremes.
    let scale = match variant {
        _ if alpha > 1.0 => alpha,
        Variant::Sandwiched => ((1.0 - alpha) / alpha).max(1.0),
        _ => 1.0,
    };
    let unscale = |theta: &[f64]| -> Vec<f64> { theta.iter().map(|t| t / scale).collect() };
    let objective = |theta: &[f64]| -> Result<f64> {
        let sigma = gibbs(r, &unscale(theta))?;
        Ok(-neg_divergence(&blocks, &sigma, alpha, variant)?)
    };
    // Warm start from the Petz optimizer, which coincides with the answer on commuting sources.
    let compressed = CQState::from_parts(
        s.weighted_blocks().iter().map(|a| a.trace()).collect(),
        s.weighted_blocks()
            .iter()
            .map(|a| DensityOperator::normalized(&a.compress(&basis)))
            .collect::<Result<Vec<_>>>()?,
    );
    let warm = match compressed.and_then(|c| petz_closed_form(&c, alpha.max(1e-3))) {
        // A little uniform weight keeps the start strictly inside the simplex.
        Ok(rep) => log_params(&rep.sigma_star.op().scale(1.0 - 1e-6).add(&Operator::identity(r).scale(1e-6 / r as f64)))?
            .into_iter()
            .map(|t| t * scale)
            .collect(),
        Err(_) => vec![0.0; r * r - 1],
    };
    let mut best: Option<(f64, Vec<f64>, usize, f64)> = None;
    // D_α = log Q/(α−1) carries rounding noise of order ε/|α−1|; near α = 1 the
    // difference step grows to the cube root of that noise level.
    let noise = 32.0 * f64::EPSILON / (alpha - 1.0).abs();
    let bfgs = BfgsOptions { step: cfg.bfgs.step.max(noise.cbrt()), ..cfg.bfgs };
    let mut total_iterations = 0;
    let mut failure = None;
    for restart in 0..cfg.restarts.max(1) {
        let x0 = if restart == 0 {
            warm.clone()
        } else {
            let mut rng = task_rng(cfg.seed, restart as u64);
            (0..r * r - 1).map(|_| rng.random_range(-1.5..1.5)).collect()
        };
        let res = match bfgs_minimize(&objective, &x0, &bfgs) {
            Ok(res) => res,
            Err(e) => {
                failure = Some(e);
                continue;
            }
        };
        total_iterations += res.iterations;
        let better = match &best {
            None => true,
            Some((v, ..)) => res.value < *v,
        };
        if better {
            best = Some((res.value, res.x, res.iterations, res.residual));
        }
    }
    let Some((value, theta, _, residual)) = best else {
        return Err(failure.expect("every restart either succeeds or fails"));
    };
    if residual > 1e-6 {
        return Err(Error::NoConvergence {
            what: "conditional entropy optimizer",
            iterations: total_iterations,
            residual,
        });
    }
    let sigma = gibbs(r, &unscale(&theta))?.lift(&basis, s.dim_b());
    Ok(OptimizerReport {
        sigma_star: DensityOperator::normalized(&sigma)?,
        value: -value,
        iterations: total_iterations,
        residual,
    })
}

fn bloch(x: f64, y: f64, z: f64) -> Operator {
    let m = Matrix::from_vec(
        2,
        vec![
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ],
    )
    .expect("2x2");
    Operator::new(m).expect("Hermitian")
}

fn grid(s: &CQState, alpha: f64, variant: Variant) -> Result<OptimizerReport> {
    if s.dim_b() != 2 {
        return Err(Error::MethodUnsupported("grid search needs qubit side information"));
    }
    if alpha == 0.0 && variant == Variant::Sandwiched {
        return Err(Error::MethodUnsupported("grid search at alpha = 0 needs the Petz or flat variant"));
    }
    let blocks = s.weighted_blocks();
    let mut evaluations = 0usize;
    let mut eval = |x: f64, y: f64, z: f64| -> Result<f64> {
        if x * x + y * y + z * z > 1.0 - 1e-9 {
            return Ok(f64::NEG_INFINITY);
        }
        evaluations += 1;
        neg_divergence(&blocks, &bloch(x, y, z), alpha, variant)
    };
    // Coarse scan of the ball, then the 0.02 lattice near the coarse optimum, then a 0.002 polish.
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    let mut scan = |center: [f64; 3], half: f64, step: f64, best: &mut (f64, [f64; 3])| -> Result<()> {
        let k = (half / step).round() as i64;
        for i in -k..=k {
            for j in -k..=k {
                for l in -k..=k {
                    let pt = [center[0] + i as f64 * step, center[1] + j as f64 * step, center[2] + l as f64 * step];
                    let v = eval(pt[0], pt[1], pt[2])?;
                    if v > best.0 {
                        *best = (v, pt);
                    }
                }
            }
        }
        Ok(())
    };
    scan([0.0; 3], 1.0, 0.1, &mut best)?;
    let coarse = best.1;
    scan(coarse, 0.12, 0.02, &mut best)?;
    let fine = best.1;
    scan(fine, 0.02, 0.002, &mut best)?;
    let [x, y, z] = best.1;
    Ok(OptimizerReport {
        sigma_star: DensityOperator::new(bloch(x, y, z))?,
        value: best.0,
        iterations: evaluations,
        residual: 0.0,
    })
}
