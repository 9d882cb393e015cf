//! Dense `f64` linear algebra, activations, seeded randomness and the
//! finite-difference gradient oracle.

mod finite_diff;
mod matrix;
mod ops;
mod rng;

pub use finite_diff::{finite_diff_grad, relative_error, DEFAULT_EPS};
pub use matrix::Matrix;
pub use ops::{dropout_mask, relu, sigmoid, sigmoid_scalar, softmax_rows, softmax_rows_backward};
pub use rng::SeededRng;
