use rand::Rng as _;

use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tensor};
use crate::nn::{Activation, DenseParams, LstmParams, Params};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Lstm { input: usize, hidden: usize },
    Dense { input: usize, output: usize, activation: Activation },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Lstm(LstmParams<T>),
    Dense(DenseParams<T>),
}

/// Initializes layers in order from one `"init"` stream of `seed`.
///
/// Weights are uniform in `±1/√fan_in` where `fan_in` is the matrix's input
/// width. Biases start at zero except the LSTM forget-gate bias, which is 1.
pub fn init_params<T: Scalar>(specs: &[LayerSpec], seed: u64) -> Result<Vec<Layer<T>>> {
    let mut rng = rng::stream(seed, "init");
    specs.iter().map(|s| init_layer(s, &mut rng)).collect()
}

pub(crate) fn init_layer<T: Scalar>(spec: &LayerSpec, rng: &mut Rng) -> Result<Layer<T>> {
    match *spec {
        LayerSpec::Lstm { input, hidden } => {
            check_sizes(&[input, hidden])?;
            let mut p = LstmParams::zeros(input, hidden);
            for t in p.tensors_mut() {
                if t.rank() == 2 {
                    fill_uniform(t, rng);
                }
            }
            p.b_f = Tensor::full(&[hidden], T::one());
            Ok(Layer::Lstm(p))
        }
        LayerSpec::Dense {
            input,
            output,
            activation,
        } => {
            check_sizes(&[input, output])?;
            let mut p = DenseParams::zeros(input, output, activation);
            fill_uniform(&mut p.w, rng);
            Ok(Layer::Dense(p))
        }
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.contains(&0) {
        return Err(Error::Config(format!("layer sizes must be positive, got {sizes:?}")));
    }
    Ok(())
}

fn fill_uniform<T: Scalar>(t: &mut Tensor<T>, rng: &mut Rng) {
    let fan_in = t.shape()[1] as f64;
    let s = 1.0 / fan_in.sqrt();
    for v in t.data_mut() {
        *v = T::lit(rng.random_range(-s..=s));
    }
}
