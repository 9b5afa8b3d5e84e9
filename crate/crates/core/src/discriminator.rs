//! LSTM classifier scoring a window as real (→ 1) or synthetic (→ 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tape, Tensor, Var};
use crate::nn::{
    self, dense_forward, lstm_unroll, Activation, DenseParams, DenseVars, Layer, LayerSpec,
    LstmParams, LstmState, LstmVars, Params,
};

/// Scores are clamped to `[SCORE_CLAMP, 1 − SCORE_CLAMP]` inside the log terms.
pub const SCORE_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub lstm_units: usize,
    pub fc_units: usize,
    pub window_len: usize,
    /// Reject windows whose length differs from `window_len`.
    pub strict: bool,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            lstm_units: 64,
            fc_units: 16,
            window_len: 400,
            strict: true,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lstm_units == 0 || self.fc_units == 0 || self.window_len == 0 {
            return Err(Error::Config(format!("discriminator sizes must be ≥ 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorModel<T> {
    pub lstm: LstmParams<T>,
    pub fc: DenseParams<T>,
    pub out: DenseParams<T>,
    pub config: DiscriminatorConfig,
}

#[derive(Clone, Debug)]
pub struct DiscriminatorVars {
    pub lstm: LstmVars,
    pub fc: DenseVars,
    pub out: DenseVars,
    pub all: Vec<Var>,
}

impl<T: Scalar> DiscriminatorModel<T> {
    pub fn init(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let specs = [
            LayerSpec::Lstm {
                input: 1,
                hidden: config.lstm_units,
            },
            LayerSpec::Dense {
                input: config.lstm_units,
                output: config.fc_units,
                activation: Activation::Sigmoid,
            },
            LayerSpec::Dense {
                input: config.fc_units,
                output: 1,
                activation: Activation::Sigmoid,
            },
        ];
        let mut layers = nn::init_params::<T>(&specs, seed)?.into_iter();
        let (Some(Layer::Lstm(lstm)), Some(Layer::Dense(fc)), Some(Layer::Dense(out))) =
            (layers.next(), layers.next(), layers.next())
        else {
            unreachable!("layer kinds follow specs");
        };
        Ok(Self {
            lstm,
            fc,
            out,
            config,
        })
    }

    pub fn zeros(config: DiscriminatorConfig) -> Result<Self> {
        let mut m = Self::init(config, 0)?;
        for t in m.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
        Ok(m)
    }

    /// Checks the shape chain `1 → lstm_units → fc_units → 1`.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.lstm.validate()?;
        self.fc.validate()?;
        self.out.validate()?;
        let c = &self.config;
        let ok = self.lstm.input_dim() == 1
            && self.lstm.hidden_dim() == c.lstm_units
            && self.fc.input_dim() == c.lstm_units
            && self.fc.output_dim() == c.fc_units
            && self.out.input_dim() == c.fc_units
            && self.out.output_dim() == 1;
        if !ok {
            return Err(Error::Config("discriminator shape chain broken".into()));
        }
        Ok(())
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> DiscriminatorVars {
        let all = self.bind_all(tape);
        let lstm = LstmVars::from_slice(&all[..12]);
        let fc = DenseVars {
            w: all[12],
            b: all[13],
            activation: Activation::Sigmoid,
        };
        let out = DenseVars {
            w: all[14],
            b: all[15],
            activation: Activation::Sigmoid,
        };
        DiscriminatorVars { lstm, fc, out, all }
    }

    fn check_windows(&self, windows: &[&[T]]) -> Result<usize> {
        let len = windows.first().map_or(0, |w| w.len());
        if len == 0 {
            return Err(Error::Contract("discriminator needs a non-empty window".into()));
        }
        if windows.iter().any(|w| w.len() != len) {
            return Err(Error::Contract("batched windows must share a length".into()));
        }
        if self.config.strict && len != self.config.window_len {
            return Err(Error::Contract(format!(
                "window length {len} differs from configured {}",
                self.config.window_len
            )));
        }
        Ok(len)
    }

    /// Taped scores for a batch of windows, shape `[batch × 1]`.
    pub fn score_taped(
        &self,
        tape: &mut Tape<T>,
        vars: &DiscriminatorVars,
        windows: &[&[T]],
    ) -> Result<Var> {
        let len = self.check_windows(windows)?;
        let batch = windows.len();
        let s0 = LstmState::zeros(tape, self.config.lstm_units, Some(batch));
        let xs: Vec<Var> = (0..len)
            .map(|t| {
                let col: Vec<T> = windows.iter().map(|w| w[t]).collect();
                tape.constant(Tensor::matrix(batch, 1, col).expect("non-empty"))
            })
            .collect();
        let (_, finals) = lstm_unroll(tape, &[vars.lstm], &xs, &[s0])?;
        let hidden = dense_forward(tape, &vars.fc, finals[0].h)?;
        dense_forward(tape, &vars.out, hidden)
    }

    pub fn score_batch(&self, windows: &[&[T]]) -> Result<Vec<T>> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let s = self.score_taped(&mut tape, &vars, windows)?;
        Ok(tape.value(s).data().to_vec())
    }

    /// Probability that `window` came from the real data.
    pub fn score(&self, window: &[T]) -> Result<T> {
        Ok(self.score_batch(&[window])?[0])
    }

    /// `−Σ_i [log D(real_i) + log(1 − D(fake_i))]`, taped.
    pub fn bce_loss_taped(
        &self,
        tape: &mut Tape<T>,
        vars: &DiscriminatorVars,
        real: &[&[T]],
        fake: &[&[T]],
    ) -> Result<Var> {
        if real.is_empty() || fake.is_empty() {
            return Err(Error::Contract("bce_loss needs non-empty real and fake batches".into()));
        }
        let (lo, hi) = (T::lit(SCORE_CLAMP), T::one() - T::lit(SCORE_CLAMP));
        let pr = self.score_taped(tape, vars, real)?;
        let pr = tape.clamp(pr, lo, hi);
        let log_r = tape.ln(pr)?;
        let pf = self.score_taped(tape, vars, fake)?;
        let pf = tape.clamp(pf, lo, hi);
        let neg = tape.neg(pf);
        let one_minus = tape.add_scalar(neg, T::one());
        let log_f = tape.ln(one_minus)?;
        let sr = tape.sum(log_r);
        let sf = tape.sum(log_f);
        let total = tape.add(sr, sf)?;
        Ok(tape.neg(total))
    }

    pub fn bce_loss(&self, real: &[&[T]], fake: &[&[T]]) -> Result<T> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let l = self.bce_loss_taped(&mut tape, &vars, real, fake)?;
        Ok(tape.value(l).item())
    }

    pub fn accuracy(&self, real: &[&[T]], fake: &[&[T]], threshold: T) -> Result<f64> {
        if real.is_empty() || fake.is_empty() {
            return Err(Error::Contract("accuracy needs non-empty real and fake batches".into()));
        }
        Ok(accuracy_from_scores(
            &self.score_batch(real)?,
            &self.score_batch(fake)?,
            threshold,
        ))
    }
}

/// Cross-entropy from precomputed scores, with the same clamp as training.
pub fn bce_from_scores<T: Scalar>(real: &[T], fake: &[T]) -> T {
    let (lo, hi) = (T::lit(SCORE_CLAMP), T::one() - T::lit(SCORE_CLAMP));
    let clamp = |p: T| p.max(lo).min(hi);
    let r: T = real.iter().map(|&p| clamp(p).ln()).sum();
    let f: T = fake.iter().map(|&p| (T::one() - clamp(p)).ln()).sum();
    -(r + f)
}

/// Fraction of correct decisions. A real window is correct when its score is
/// above `threshold`; a fake one when its score is at or below it.
pub fn accuracy_from_scores<T: Scalar>(real: &[T], fake: &[T], threshold: T) -> f64 {
    let correct = real.iter().filter(|&&s| s > threshold).count()
        + fake.iter().filter(|&&s| s <= threshold).count();
    correct as f64 / (real.len() + fake.len()) as f64
}

impl<T: Scalar> Params<T> for DiscriminatorModel<T> {
    fn names(&self) -> Vec<String> {
        let mut n = nn::prefixed("lstm", self.lstm.names());
        n.extend(nn::prefixed("fc", self.fc.names()));
        n.extend(nn::prefixed("out", self.out.names()));
        n
    }

    fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v = self.lstm.tensors();
        v.extend(self.fc.tensors());
        v.extend(self.out.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.lstm.tensors_mut();
        v.extend(self.fc.tensors_mut());
        v.extend(self.out.tensors_mut());
        v
    }
}
