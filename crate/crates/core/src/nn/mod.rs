//! Recurrent and dense layers built on the tape.

pub mod clip;
pub mod dense;
pub mod init;
pub mod lstm;

pub use clip::{clip_gradients, global_norm, ClipMode};
pub use dense::{dense_forward, Activation, DenseParams, DenseVars};
pub use init::{init_params, Layer, LayerSpec};
pub use lstm::{lstm_step, lstm_unroll, LstmParams, LstmState, LstmVars};

use crate::ndmath::{Scalar, Tape, Tensor, Var};

/// A set of named parameter tensors with a fixed visiting order.
///
/// `names`, `tensors`, `tensors_mut` and the variables returned by the
/// matching `bind` all enumerate parameters in the same order.
pub trait Params<T: Scalar> {
    fn names(&self) -> Vec<String>;
    fn tensors(&self) -> Vec<&Tensor<T>>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>>;

    /// Registers every tensor on `tape` as a leaf, in visiting order.
    fn bind_all(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.tensors().into_iter().map(|t| tape.leaf(t.clone())).collect()
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

pub(crate) fn prefixed(prefix: &str, names: Vec<String>) -> Vec<String> {
    names.into_iter().map(|n| format!("{prefix}.{n}")).collect()
}
