//! Classical data compression with quantum side information: divergences,
//! conditional entropies, exponent functions and a desk-scale coding simulator.
//!
//! The linear-algebra layer is generic over [`Real`]; everything above it works
//! in double precision through the aliases below.

pub mod catalog;
pub mod coding;
pub mod conditional;
pub mod divergence;
pub mod error;
pub mod exponent;
pub mod linalg;
pub mod operator;
pub mod optim;
pub mod random;
pub mod scalar;
pub mod state;
pub mod testing;
pub mod variational;
pub mod verify;

pub use divergence::{ExtendedReal, Variant};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Spectrum};
pub use operator::{orthogonal, support_contained, HermitianOperator, SupportPolicy};
pub use scalar::Real;
pub use state::{power_state, uniform_tau, CQState, DensityOperator, DEFAULT_CAP};

/// Complex scalar in double precision.
pub type C64 = num_complex::Complex<f64>;
/// Dense matrix in double precision.
pub type Matrix = ComplexMatrix<f64>;
/// Hermitian operator in double precision.
pub type Operator = HermitianOperator<f64>;
