use crate::error::{Error, Result};
use crate::ndmath::{Scalar, Tensor};
use crate::training::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub eps: f64,
}

impl From<&TrainConfig> for RmsProp {
    fn from(c: &TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            decay: c.rmsprop_decay,
            eps: c.rmsprop_eps,
        }
    }
}

/// Running mean of squared gradients, one tensor per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub cache: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn for_params(params: &[&Tensor<T>]) -> Self {
        Self {
            cache: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }
}

/// `cache ← ρ·cache + (1−ρ)·g²`, then `θ ← θ − lr·g / (√cache + ε)`.
pub fn rmsprop_step<T: Scalar>(
    params: &mut [&mut Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut OptimizerState<T>,
    cfg: &RmsProp,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.cache.len() {
        return Err(Error::Contract(format!(
            "{} parameters, {} gradients, {} cache entries",
            params.len(),
            grads.len(),
            state.cache.len()
        )));
    }
    for ((p, g), c) in params.iter().zip(grads).zip(&state.cache) {
        if p.shape() != g.shape() || p.shape() != c.shape() {
            return Err(Error::Dimension {
                op: "rmsprop_step",
                left: p.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
    }
    let (rho, lr, eps) = (T::lit(cfg.decay), T::lit(cfg.learning_rate), T::lit(cfg.eps));
    let one = T::one();
    for ((p, g), c) in params.iter_mut().zip(grads).zip(state.cache.iter_mut()) {
        for ((pv, &gv), cv) in p.data_mut().iter_mut().zip(g.data()).zip(c.data_mut()) {
            *cv = rho * *cv + (one - rho) * gv * gv;
            *pv -= lr * gv / (cv.sqrt() + eps);
        }
    }
    state.step += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> RmsProp {
        RmsProp {
            learning_rate: lr,
            decay: 0.9,
            eps: 1e-6,
        }
    }

    #[test]
    fn zero_gradient_only_decays_cache() {
        let mut p = Tensor::<f64>::vector(vec![1.0, -2.0]).unwrap();
        let mut st = OptimizerState {
            cache: vec![Tensor::vector(vec![0.5, 2.0]).unwrap()],
            step: 0,
        };
        rmsprop_step(&mut [&mut p], &[Tensor::zeros(&[2])], &mut st, &cfg(0.1)).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0]);
        assert!((st.cache[0].data()[0] - 0.45).abs() < 1e-15);
        assert!((st.cache[0].data()[1] - 1.8).abs() < 1e-15);
    }

    #[test]
    fn closed_form_first_step() {
        let mut p = Tensor::<f64>::scalar(0.0);
        let mut st = OptimizerState::for_params(&[&p]);
        rmsprop_step(&mut [&mut p], &[Tensor::scalar(2.0)], &mut st, &cfg(0.1)).unwrap();
        assert!((st.cache[0].item() - 0.4).abs() < 1e-15);
        let want = -0.1 * 2.0 / (0.4f64.sqrt() + 1e-6);
        assert!((p.item() - want).abs() < 1e-15);
        assert!((p.item() + 0.316227).abs() < 1e-6);
    }

    #[test]
    fn repeated_gradient_shrinks_step() {
        let mut p = Tensor::<f64>::scalar(0.0);
        let mut st = OptimizerState::for_params(&[&p]);
        let g = [Tensor::scalar(2.0)];
        rmsprop_step(&mut [&mut p], &g, &mut st, &cfg(0.1)).unwrap();
        let d1 = p.item();
        rmsprop_step(&mut [&mut p], &g, &mut st, &cfg(0.1)).unwrap();
        let d2 = p.item() - d1;
        assert!(d2.abs() < d1.abs());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let mut st = OptimizerState::for_params(&[&p]);
        let r = rmsprop_step(&mut [&mut p], &[Tensor::zeros(&[3])], &mut st, &cfg(0.1));
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }
}
