//! Stacked-LSTM generator with a Gaussian-mixture output head.
//!
//! Per timestep: `x_t → LSTM × n → dense(fc_units, sigmoid) → dense(3K) → GMM`.
//! The second dense layer uses a sigmoid by default, so `mu ∈ (0, 1)` and
//! `sigma ∈ (1, e)`; the data must be min-max normalized for that head.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdn::{self, GmmParams, GmmVars};
use crate::ndmath::{Scalar, Tape, Tensor, Var};
use crate::nn::{
    self, dense_forward, lstm_unroll, Activation, DenseParams, DenseVars, Layer, LayerSpec,
    LstmParams, LstmState, LstmVars, Params,
};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalActivation {
    SigmoidLiteral,
    Linear,
}

impl FinalActivation {
    fn activation(self) -> Activation {
        match self {
            FinalActivation::SigmoidLiteral => Activation::Sigmoid,
            FinalActivation::Linear => Activation::Linear,
        }
    }
}

impl std::str::FromStr for FinalActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid-literal" | "sigmoid" => Ok(Self::SigmoidLiteral),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Config(format!("unknown final activation '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub lstm_layers: usize,
    pub lstm_units: usize,
    pub fc_units: usize,
    pub mixtures: usize,
    pub final_activation: FinalActivation,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            lstm_layers: 3,
            lstm_units: 256,
            fc_units: 128,
            mixtures: 24,
            final_activation: FinalActivation::SigmoidLiteral,
        }
    }
}

impl GeneratorConfig {
    pub fn head_width(&self) -> usize {
        3 * self.mixtures
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.lstm_layers, self.lstm_units, self.fc_units, self.mixtures];
        if counts.contains(&0) {
            return Err(Error::Config(format!("generator sizes must be ≥ 1: {self:?}")));
        }
        Ok(())
    }

    fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut specs: Vec<LayerSpec> = (0..self.lstm_layers)
            .map(|i| LayerSpec::Lstm {
                input: if i == 0 { 1 } else { self.lstm_units },
                hidden: self.lstm_units,
            })
            .collect();
        specs.push(LayerSpec::Dense {
            input: self.lstm_units,
            output: self.fc_units,
            activation: Activation::Sigmoid,
        });
        specs.push(LayerSpec::Dense {
            input: self.fc_units,
            output: self.head_width(),
            activation: self.final_activation.activation(),
        });
        specs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorModel<T> {
    pub stack: Vec<LstmParams<T>>,
    pub fc4: DenseParams<T>,
    pub fc5: DenseParams<T>,
    pub config: GeneratorConfig,
}

/// A [`GeneratorModel`] registered on a tape.
#[derive(Clone, Debug)]
pub struct GeneratorVars {
    pub stack: Vec<LstmVars>,
    pub fc4: DenseVars,
    pub fc5: DenseVars,
    pub all: Vec<Var>,
}

/// Recurrent state of every layer for a batch of sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorState<T> {
    pub h: Vec<Tensor<T>>,
    pub c: Vec<Tensor<T>>,
}

impl<T: Scalar> GeneratorModel<T> {
    pub fn init(config: GeneratorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layers = nn::init_params::<T>(&config.layer_specs(), seed)?;
        Self::from_layers(config, layers)
    }

    /// Every weight and bias zero.
    pub fn zeros(config: GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let mut m = Self::init(config, 0)?;
        for t in m.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
        Ok(m)
    }

    fn from_layers(config: GeneratorConfig, layers: Vec<Layer<T>>) -> Result<Self> {
        let mut stack = Vec::new();
        let mut dense = Vec::new();
        for l in layers {
            match l {
                Layer::Lstm(p) => stack.push(p),
                Layer::Dense(d) => dense.push(d),
            }
        }
        let fc5 = dense.pop().expect("head layer");
        let fc4 = dense.pop().expect("fc layer");
        let m = Self {
            stack,
            fc4,
            fc5,
            config,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks the shape chain `1 → units → … → fc_units → 3K`.
    pub fn validate(&self) -> Result<()> {
        let cfg = &self.config;
        cfg.validate()?;
        let bad = |what: &str| Err(Error::Config(format!("generator shape chain broken at {what}")));
        if self.stack.len() != cfg.lstm_layers {
            return bad("layer count");
        }
        for (i, l) in self.stack.iter().enumerate() {
            l.validate()?;
            let want_in = if i == 0 { 1 } else { cfg.lstm_units };
            if l.input_dim() != want_in || l.hidden_dim() != cfg.lstm_units {
                return bad(&format!("lstm layer {i}"));
            }
        }
        self.fc4.validate()?;
        self.fc5.validate()?;
        if self.fc4.input_dim() != cfg.lstm_units || self.fc4.output_dim() != cfg.fc_units {
            return bad("fc4");
        }
        if self.fc5.input_dim() != cfg.fc_units || self.fc5.output_dim() != cfg.head_width() {
            return bad("fc5");
        }
        if self.fc5.activation != cfg.final_activation.activation() {
            return bad("fc5 activation");
        }
        Ok(())
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> GeneratorVars {
        let all = self.bind_all(tape);
        let mut stack = Vec::with_capacity(self.stack.len());
        for i in 0..self.stack.len() {
            stack.push(LstmVars::from_slice(&all[i * 12..(i + 1) * 12]));
        }
        let n = self.stack.len() * 12;
        let fc4 = DenseVars {
            w: all[n],
            b: all[n + 1],
            activation: self.fc4.activation,
        };
        let fc5 = DenseVars {
            w: all[n + 2],
            b: all[n + 3],
            activation: self.fc5.activation,
        };
        GeneratorVars {
            stack,
            fc4,
            fc5,
            all,
        }
    }

    pub fn zero_state(&self, batch: usize) -> GeneratorState<T> {
        let z = Tensor::zeros(&[batch, self.config.lstm_units]);
        GeneratorState {
            h: vec![z.clone(); self.stack.len()],
            c: vec![z; self.stack.len()],
        }
    }

    /// Taped forward over a batch of equal-length input sequences.
    ///
    /// Returns the head matrix `[steps·batch × 3K]` with rows ordered
    /// time-major (row `t·batch + b`) and the final state of every layer.
    pub fn forward_taped(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        inputs: &[&[T]],
        s0: Option<&GeneratorState<T>>,
    ) -> Result<(Var, Vec<LstmState>)> {
        let batch = inputs.len();
        let steps = inputs.first().map_or(0, |s| s.len());
        if batch == 0 || steps == 0 {
            return Err(Error::Contract("generator forward needs a non-empty sequence".into()));
        }
        if inputs.iter().any(|s| s.len() != steps) {
            return Err(Error::Contract("batched sequences must share a length".into()));
        }
        let states: Vec<LstmState> = match s0 {
            Some(s) => s
                .h
                .iter()
                .zip(&s.c)
                .map(|(h, c)| LstmState {
                    h: tape.constant(h.clone()),
                    c: tape.constant(c.clone()),
                })
                .collect(),
            None => (0..self.stack.len())
                .map(|_| LstmState::zeros(tape, self.config.lstm_units, Some(batch)))
                .collect(),
        };
        let xs: Vec<Var> = (0..steps)
            .map(|t| {
                let col: Vec<T> = inputs.iter().map(|s| s[t]).collect();
                tape.constant(Tensor::matrix(batch, 1, col).expect("non-empty"))
            })
            .collect();
        let (hs, finals) = lstm_unroll(tape, &vars.stack, &xs, &states)?;
        let top = tape.concat_rows(&hs)?;
        let l4 = dense_forward(tape, &vars.fc4, top)?;
        let l5 = dense_forward(tape, &vars.fc5, l4)?;
        Ok((l5, finals))
    }

    /// Mixture parameters for every step of `xs`, starting from `s0`
    /// (zeros when `None`), plus the final state.
    pub fn forward(
        &self,
        xs: &[T],
        s0: Option<&GeneratorState<T>>,
    ) -> Result<(Vec<GmmParams<T>>, GeneratorState<T>)> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let (head, finals) = self.forward_taped(&mut tape, &vars, &[xs], s0)?;
        let head = tape.value(head);
        let gmms = (0..head.rows())
            .map(|r| mdn::split_head(head.row(r)))
            .collect::<Result<Vec<_>>>()?;
        Ok((gmms, collect_state(&tape, &finals)))
    }

    /// Taped summed NLL of a batch of windows. Each window of length `L`
    /// contributes `L − 1` one-step predictions.
    pub fn batch_nll_taped(
        &self,
        tape: &mut Tape<T>,
        vars: &GeneratorVars,
        windows: &[&[T]],
        sigma_floor: Option<T>,
    ) -> Result<Var> {
        let len = windows.first().map_or(0, |w| w.len());
        if len < 2 {
            return Err(Error::Contract(format!("NLL window needs ≥ 2 values, got {len}")));
        }
        let inputs: Vec<&[T]> = windows.iter().map(|w| &w[..w.len() - 1]).collect();
        let (head, _) = self.forward_taped(tape, vars, &inputs, None)?;
        let gmm: GmmVars = mdn::split_head_taped(tape, head, sigma_floor)?;
        let targets: Vec<T> = (1..len)
            .flat_map(|t| windows.iter().map(move |w| w[t]))
            .collect();
        mdn::nll_taped(tape, &gmm, &targets)
    }

    /// `−Σ log p(x_{t+1} | x_{1..t})` over one window.
    pub fn sequence_nll(&self, window: &[T]) -> Result<T> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let loss = self.batch_nll_taped(&mut tape, &vars, &[window], None)?;
        Ok(tape.value(loss).item())
    }

    /// Autoregressive sampling of one sequence, fed `seed_value` first.
    pub fn generate(&self, length: usize, seed_value: T, rng: &mut Rng) -> Result<Vec<T>> {
        Ok(self.generate_batch(1, length, seed_value, rng)?.remove(0))
    }

    /// Samples `count` sequences in lockstep. At every step the draws for
    /// sequence 0, 1, … are taken from `rng` in that order.
    pub fn generate_batch(
        &self,
        count: usize,
        length: usize,
        seed_value: T,
        rng: &mut Rng,
    ) -> Result<Vec<Vec<T>>> {
        if length == 0 || count == 0 {
            return Err(Error::Contract("generate needs length ≥ 1 and count ≥ 1".into()));
        }
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let mark = tape.len();
        let mut state = self.zero_state(count);
        let mut input = vec![seed_value; count];
        let mut out = vec![Vec::with_capacity(length); count];
        for _ in 0..length {
            let cols: Vec<&[T]> = input.chunks(1).collect();
            let (head, finals) = self.forward_taped(&mut tape, &vars, &cols, Some(&state))?;
            let head_val = tape.value(head).clone();
            state = collect_state(&tape, &finals);
            tape.truncate(mark);
            for (b, seq) in out.iter_mut().enumerate() {
                let g = mdn::split_head(head_val.row(b))?;
                let x = mdn::sample(&g, rng);
                seq.push(x);
                input[b] = x;
            }
        }
        Ok(out)
    }
}

fn collect_state<T: Scalar>(tape: &Tape<T>, finals: &[LstmState]) -> GeneratorState<T> {
    GeneratorState {
        h: finals.iter().map(|s| tape.value(s.h).clone()).collect(),
        c: finals.iter().map(|s| tape.value(s.c).clone()).collect(),
    }
}

impl<T: Scalar> Params<T> for GeneratorModel<T> {
    fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, l) in self.stack.iter().enumerate() {
            names.extend(nn::prefixed(&format!("lstm{i}"), l.names()));
        }
        names.extend(nn::prefixed("fc4", self.fc4.names()));
        names.extend(nn::prefixed("fc5", self.fc5.names()));
        names
    }

    fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v: Vec<&Tensor<T>> = self.stack.iter().flat_map(|l| l.tensors()).collect();
        v.extend(self.fc4.tensors());
        v.extend(self.fc5.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v: Vec<&mut Tensor<T>> =
            self.stack.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        v.extend(self.fc4.tensors_mut());
        v.extend(self.fc5.tensors_mut());
        v
    }
}
