//! Seeded sampling of states and tests.
//!
//! Every stream is derived from `(seed, index)` so results do not depend on
//! the order in which tasks are evaluated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::state::{CQState, DensityOperator};
use crate::{Matrix, Operator, C64};

/// Independent generator for task `index` under `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize) -> Matrix {
    Matrix::from_fn(rows, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Ginibre density operator `G G† / Tr`, full rank almost surely.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let g = ginibre(rng, dim);
    DensityOperator::normalized(&Operator::new(g.matmul(&g.adjoint())).expect("Hermitian"))
        .expect("nonzero trace")
}

/// Density operator of the given rank, `Σ_k |g_k⟩⟨g_k|` normalized.
pub fn random_density_of_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let mut acc = Operator::zeros(dim);
    for _ in 0..rank {
        let v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        acc = acc.add(&Operator::pure(&v));
    }
    DensityOperator::normalized(&acc).expect("nonzero trace")
}

/// Probability vector drawn uniformly from the simplex, bounded away from zero by `floor`.
pub fn random_probs<R: Rng + ?Sized>(rng: &mut R, size: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..size).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mixed: Vec<f64> = raw.iter().map(|r| floor + (1.0 - floor * size as f64) * r / total).collect();
    let s: f64 = mixed.iter().sum();
    let mut p: Vec<f64> = mixed.iter().map(|x| x / s).collect();
    // Absorb rounding into the largest entry so the sum is 1 to within an ulp or two.
    let err = 1.0 - p.iter().sum::<f64>();
    let imax = (0..size).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
    p[imax] += err;
    p
}

/// Random c-q source with full-rank side information.
pub fn random_cq_state<R: Rng + ?Sized>(rng: &mut R, size: usize, dim_b: usize) -> CQState {
    let probs = random_probs(rng, size, 0.05 / size as f64);
    let side = (0..size).map(|_| random_density(rng, dim_b)).collect();
    CQState::from_parts(probs, side).expect("valid random state")
}

/// Random c-q source whose side-information states are diagonal in a common basis.
pub fn random_commuting_state<R: Rng + ?Sized>(rng: &mut R, size: usize, dim_b: usize) -> CQState {
    let probs = random_probs(rng, size, 0.05 / size as f64);
    let side = (0..size)
        .map(|_| DensityOperator::diagonal(&random_probs(rng, dim_b, 0.02 / dim_b as f64)).expect("valid"))
        .collect();
    CQState::from_parts(probs, side).expect("valid random state")
}

/// Random operator `0 ≤ Q ≤ 1`: a random eigenbasis with uniform eigenvalues.
pub fn random_test<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let g = Operator::new(ginibre(rng, dim).hermitian_part()).expect("Hermitian");
    let rng = std::cell::RefCell::new(rng);
    g.map_spectrum(|_| rng.borrow_mut().random::<f64>()).expect("eigendecomposition")
}
