use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tape, Tensor, Var};
use crate::nn::Params;

/// Weights of one LSTM layer.
///
/// Input maps are `[hidden × input]`, recurrent maps `[hidden × hidden]`,
/// biases `[hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub w_xf: Tensor<T>,
    pub w_hf: Tensor<T>,
    pub b_f: Tensor<T>,
    pub w_xi: Tensor<T>,
    pub w_hi: Tensor<T>,
    pub b_i: Tensor<T>,
    pub w_xo: Tensor<T>,
    pub w_ho: Tensor<T>,
    pub b_o: Tensor<T>,
    pub w_xc: Tensor<T>,
    pub w_hc: Tensor<T>,
    pub b_c: Tensor<T>,
}

const NAMES: [&str; 12] = [
    "w_xf", "w_hf", "b_f", "w_xi", "w_hi", "b_i", "w_xo", "w_ho", "b_o", "w_xc", "w_hc", "b_c",
];

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let wx = || Tensor::zeros(&[hidden_dim, input_dim]);
        let wh = || Tensor::zeros(&[hidden_dim, hidden_dim]);
        let b = || Tensor::zeros(&[hidden_dim]);
        Self {
            w_xf: wx(),
            w_hf: wh(),
            b_f: b(),
            w_xi: wx(),
            w_hi: wh(),
            b_i: b(),
            w_xo: wx(),
            w_ho: wh(),
            b_o: b(),
            w_xc: wx(),
            w_hc: wh(),
            b_c: b(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_xf.shape()[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_xf.shape()[0]
    }

    /// Checks that all twelve tensors agree with `(input_dim, hidden_dim)`.
    pub fn validate(&self) -> Result<()> {
        let (i, h) = (self.input_dim(), self.hidden_dim());
        for (name, t) in NAMES.iter().zip(self.tensors()) {
            let want: &[usize] = match name.as_bytes()[0] {
                b'b' => &[h],
                _ if name.starts_with("w_x") => &[h, i],
                _ => &[h, h],
            };
            if t.shape() != want {
                return Err(Error::Dimension {
                    op: "lstm params",
                    left: want.to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            if !t.is_finite() {
                return Err(Error::Domain(format!("non-finite value in {name}")));
            }
        }
        Ok(())
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> LstmVars {
        LstmVars::from_slice(&self.bind_all(tape))
    }
}

impl<T: Scalar> Params<T> for LstmParams<T> {
    fn names(&self) -> Vec<String> {
        NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![
            &self.w_xf, &self.w_hf, &self.b_f, &self.w_xi, &self.w_hi, &self.b_i, &self.w_xo,
            &self.w_ho, &self.b_o, &self.w_xc, &self.w_hc, &self.b_c,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.b_f,
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.b_i,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.b_o,
            &mut self.w_xc,
            &mut self.w_hc,
            &mut self.b_c,
        ]
    }
}

/// [`LstmParams`] registered on a tape.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub w_xf: Var,
    pub w_hf: Var,
    pub b_f: Var,
    pub w_xi: Var,
    pub w_hi: Var,
    pub b_i: Var,
    pub w_xo: Var,
    pub w_ho: Var,
    pub b_o: Var,
    pub w_xc: Var,
    pub w_hc: Var,
    pub b_c: Var,
}

impl LstmVars {
    pub fn from_slice(v: &[Var]) -> Self {
        assert_eq!(v.len(), 12);
        Self {
            w_xf: v[0],
            w_hf: v[1],
            b_f: v[2],
            w_xi: v[3],
            w_hi: v[4],
            b_i: v[5],
            w_xo: v[6],
            w_ho: v[7],
            b_o: v[8],
            w_xc: v[9],
            w_hc: v[10],
            b_c: v[11],
        }
    }

    pub fn to_vec(&self) -> Vec<Var> {
        vec![
            self.w_xf, self.w_hf, self.b_f, self.w_xi, self.w_hi, self.b_i, self.w_xo, self.w_ho,
            self.b_o, self.w_xc, self.w_hc, self.b_c,
        ]
    }
}

/// Recurrent memory `(h, c)` of one layer, as tape nodes.
///
/// Both are `[hidden]` for a single sequence or `[batch × hidden]`.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmState {
    /// Zero state for `batch` sequences (`None` means a single unbatched one).
    pub fn zeros<T: Scalar>(tape: &mut Tape<T>, hidden: usize, batch: Option<usize>) -> Self {
        let shape = match batch {
            Some(b) => vec![b, hidden],
            None => vec![hidden],
        };
        Self {
            h: tape.constant(Tensor::zeros(&shape)),
            c: tape.constant(Tensor::zeros(&shape)),
        }
    }
}

fn gate<T: Scalar>(tape: &mut Tape<T>, x: Var, h: Var, wx: Var, wh: Var, b: Var) -> Result<Var> {
    let a = tape.linear(x, wx, b)?;
    let r = tape.matmul_t(h, wh)?;
    tape.add(a, r)
}

/// One LSTM update:
///
/// ```text
/// f = σ(W_xf x + W_hf h + b_f)
/// i = σ(W_xi x + W_hi h + b_i)
/// o = σ(W_xo x + W_ho h + b_o)
/// c' = f ⊙ c + i ⊙ tanh(W_hc h + W_xc x + b_c)
/// h' = o ⊙ tanh(c')
/// ```
pub fn lstm_step<T: Scalar>(
    tape: &mut Tape<T>,
    p: &LstmVars,
    x: Var,
    s: LstmState,
) -> Result<LstmState> {
    let f = gate(tape, x, s.h, p.w_xf, p.w_hf, p.b_f)?;
    let f = tape.sigmoid(f);
    let i = gate(tape, x, s.h, p.w_xi, p.w_hi, p.b_i)?;
    let i = tape.sigmoid(i);
    let o = gate(tape, x, s.h, p.w_xo, p.w_ho, p.b_o)?;
    let o = tape.sigmoid(o);
    let g = gate(tape, x, s.h, p.w_xc, p.w_hc, p.b_c)?;
    let g = tape.tanh(g);

    let keep = tape.mul(f, s.c)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// Runs a stack of layers over `xs`. Layer `n` reads layer `n − 1`'s output
/// at the same timestep and its own previous state.
///
/// Returns the top layer's `h` at every step and the final state of each layer.
pub fn lstm_unroll<T: Scalar>(
    tape: &mut Tape<T>,
    stack: &[LstmVars],
    xs: &[Var],
    s0: &[LstmState],
) -> Result<(Vec<Var>, Vec<LstmState>)> {
    if xs.is_empty() {
        return Err(Error::Contract("lstm_unroll needs at least one timestep".into()));
    }
    if stack.len() != s0.len() || stack.is_empty() {
        return Err(Error::Contract(format!(
            "{} layers but {} initial states",
            stack.len(),
            s0.len()
        )));
    }
    let mut states = s0.to_vec();
    let mut outputs = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut input = x;
        for (layer, state) in stack.iter().zip(states.iter_mut()) {
            *state = lstm_step(tape, layer, input, *state)?;
            input = state.h;
        }
        outputs.push(input);
    }
    Ok((outputs, states))
}
