use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tape, Tensor, Var};
use crate::nn::Params;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Linear,
}

/// Fully connected layer `act(W x + b)` with `W: [out × in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
    pub activation: Activation,
}

#[derive(Clone, Copy, Debug)]
pub struct DenseVars {
    pub w: Var,
    pub b: Var,
    pub activation: Activation,
}

impl<T: Scalar> DenseParams<T> {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.rank() != 2 || self.b.shape() != [self.output_dim()] {
            return Err(Error::Dimension {
                op: "dense params",
                left: self.w.shape().to_vec(),
                right: self.b.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> DenseVars {
        let w = tape.leaf(self.w.clone());
        let b = tape.leaf(self.b.clone());
        DenseVars {
            w,
            b,
            activation: self.activation,
        }
    }
}

impl<T: Scalar> Params<T> for DenseParams<T> {
    fn names(&self) -> Vec<String> {
        vec!["w".into(), "b".into()]
    }

    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.w, &mut self.b]
    }
}

pub fn dense_forward<T: Scalar>(tape: &mut Tape<T>, p: &DenseVars, x: Var) -> Result<Var> {
    let z = tape.linear(x, p.w, p.b)?;
    Ok(match p.activation {
        Activation::Sigmoid => tape.sigmoid(z),
        Activation::Linear => z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(p: &DenseParams<f64>, x: Vec<f64>) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let v = p.bind(&mut tape);
        let x = tape.constant(Tensor::vector(x).unwrap());
        let y = dense_forward(&mut tape, &v, x)?;
        Ok(tape.value(y).data().to_vec())
    }

    #[test]
    fn zero_sigmoid_layer_outputs_half() {
        let p = DenseParams::<f64>::zeros(4, 3, Activation::Sigmoid);
        assert_eq!(eval(&p, vec![1.0, -2.0, 3.0, 0.1]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn identity_linear_layer() {
        let p = DenseParams {
            w: Tensor::eye(3),
            b: Tensor::zeros(&[3]),
            activation: Activation::Linear,
        };
        assert_eq!(eval(&p, vec![0.25, -4.0, 9.0]).unwrap(), vec![0.25, -4.0, 9.0]);
    }

    #[test]
    fn generator_fc_width() {
        let p = DenseParams::<f64>::zeros(256, 128, Activation::Sigmoid);
        assert_eq!(eval(&p, vec![0.1; 256]).unwrap().len(), 128);
        assert!(eval(&p, vec![0.1; 255]).is_err());
    }
}
