//! Dense complex linear algebra generic over the real scalar type.

mod eigen;
mod matrix;

pub use eigen::{eigh, Spectrum};
pub use matrix::ComplexMatrix;
