//! Dense tensors and reverse-mode differentiation.

pub mod scalar;
pub mod tape;
pub mod tensor;

pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var};
pub use tensor::{log_sum_exp, Tensor};
