//! Deterministic next-step predictor trained on squared error.
//!
//! Same recurrent trunk as the generator but a single linear output `y_t`
//! taken directly as the prediction of `x_{t+1}`. It exists for comparison:
//! on multimodal data its best prediction is the conditional mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tape, Tensor, Var};
use crate::nn::{
    self, dense_forward, lstm_unroll, Activation, DenseParams, DenseVars, Layer, LayerSpec,
    LstmParams, LstmState, LstmVars, Params,
};
use crate::rng::Rng;
use crate::training::fit::fit_sequence_model;
use crate::training::optim::OptimizerState;
use crate::training::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub lstm_layers: usize,
    pub lstm_units: usize,
    pub fc_units: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel<T> {
    pub stack: Vec<LstmParams<T>>,
    pub fc: DenseParams<T>,
    pub out: DenseParams<T>,
    pub config: BaselineConfig,
}

pub struct BaselineVars {
    pub stack: Vec<LstmVars>,
    pub fc: DenseVars,
    pub out: DenseVars,
    pub all: Vec<Var>,
}

impl<T: Scalar> BaselineModel<T> {
    pub fn init(config: BaselineConfig, seed: u64) -> Result<Self> {
        if config.lstm_layers == 0 || config.lstm_units == 0 || config.fc_units == 0 {
            return Err(Error::Config(format!("baseline sizes must be ≥ 1: {config:?}")));
        }
        let mut specs: Vec<LayerSpec> = (0..config.lstm_layers)
            .map(|i| LayerSpec::Lstm {
                input: if i == 0 { 1 } else { config.lstm_units },
                hidden: config.lstm_units,
            })
            .collect();
        specs.push(LayerSpec::Dense {
            input: config.lstm_units,
            output: config.fc_units,
            activation: Activation::Sigmoid,
        });
        specs.push(LayerSpec::Dense {
            input: config.fc_units,
            output: 1,
            activation: Activation::Linear,
        });
        let mut stack = Vec::new();
        let mut dense = Vec::new();
        for l in nn::init_params::<T>(&specs, seed)? {
            match l {
                Layer::Lstm(p) => stack.push(p),
                Layer::Dense(p) => dense.push(p),
            }
        }
        let out = dense.pop().expect("output layer");
        let fc = dense.pop().expect("hidden layer");
        Ok(Self {
            stack,
            fc,
            out,
            config,
        })
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BaselineVars {
        let all = self.bind_all(tape);
        let n = self.stack.len() * 12;
        BaselineVars {
            stack: all[..n].chunks(12).map(LstmVars::from_slice).collect(),
            fc: DenseVars {
                w: all[n],
                b: all[n + 1],
                activation: Activation::Sigmoid,
            },
            out: DenseVars {
                w: all[n + 2],
                b: all[n + 3],
                activation: Activation::Linear,
            },
            all,
        }
    }

    /// Predictions `y_1..y_{L−1}` for a batch of windows, time-major `[(L−1)·B × 1]`.
    fn predictions(&self, tape: &mut Tape<T>, vars: &BaselineVars, windows: &[&[T]]) -> Result<Var> {
        let len = windows.first().map_or(0, |w| w.len());
        if len < 2 {
            return Err(Error::Contract(format!("baseline window needs ≥ 2 values, got {len}")));
        }
        if windows.iter().any(|w| w.len() != len) {
            return Err(Error::Contract("batched windows must share a length".into()));
        }
        let batch = windows.len();
        let s0: Vec<LstmState> = (0..self.stack.len())
            .map(|_| LstmState::zeros(tape, self.config.lstm_units, Some(batch)))
            .collect();
        let xs: Vec<Var> = (0..len - 1)
            .map(|t| {
                let col = windows.iter().map(|w| w[t]).collect();
                tape.constant(Tensor::matrix(batch, 1, col).expect("non-empty"))
            })
            .collect();
        let (hs, _) = lstm_unroll(tape, &vars.stack, &xs, &s0)?;
        let top = tape.concat_rows(&hs)?;
        let h = dense_forward(tape, &vars.fc, top)?;
        dense_forward(tape, &vars.out, h)
    }

    /// Taped `Σ_b Σ_t (x_{t+1} − y_t)²`.
    pub fn batch_loss_taped(
        &self,
        tape: &mut Tape<T>,
        vars: &BaselineVars,
        windows: &[&[T]],
    ) -> Result<Var> {
        let y = self.predictions(tape, vars, windows)?;
        let len = windows[0].len();
        let targets: Vec<T> = (1..len).flat_map(|t| windows.iter().map(move |w| w[t])).collect();
        let n = targets.len();
        let x = tape.constant(Tensor::matrix(n, 1, targets)?);
        let diff = tape.sub(x, y)?;
        let sq = tape.square(diff);
        Ok(tape.sum(sq))
    }

    pub fn predict(&self, window: &[T]) -> Result<Vec<T>> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let mut extended = window.to_vec();
        extended.push(T::zero());
        let y = self.predictions(&mut tape, &vars, &[&extended])?;
        Ok(tape.value(y).data().to_vec())
    }
}

impl<T: Scalar> Params<T> for BaselineModel<T> {
    fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, l) in self.stack.iter().enumerate() {
            names.extend(nn::prefixed(&format!("lstm{i}"), l.names()));
        }
        names.extend(nn::prefixed("fc", self.fc.names()));
        names.extend(nn::prefixed("out", self.out.names()));
        names
    }

    fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v: Vec<&Tensor<T>> = self.stack.iter().flat_map(|l| l.tensors()).collect();
        v.extend(self.fc.tensors());
        v.extend(self.out.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v: Vec<&mut Tensor<T>> =
            self.stack.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        v.extend(self.fc.tensors_mut());
        v.extend(self.out.tensors_mut());
        v
    }
}

/// Sum of squared one-step prediction errors over a single window.
pub fn rmse_baseline_loss<T: Scalar>(model: &BaselineModel<T>, window: &[T]) -> Result<T> {
    let mut tape = Tape::new();
    let vars = model.bind(&mut tape);
    let l = model.batch_loss_taped(&mut tape, &vars, &[window])?;
    Ok(tape.value(l).item())
}

/// Trains for `epochs` passes; returns mean squared error per prediction
/// for each epoch.
pub fn train_baseline<T: Scalar>(
    model: &mut BaselineModel<T>,
    windows: &[Vec<T>],
    epochs: usize,
    cfg: &TrainConfig,
    opt: &mut OptimizerState<T>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    fit_sequence_model(model, windows, epochs, cfg, opt, rng)
}
