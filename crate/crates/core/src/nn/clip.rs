use serde::{Deserialize, Serialize};

use crate::ndmath::{Scalar, Tensor};

/// How gradients are bounded before an optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "max")]
pub enum ClipMode {
    /// Rescale all gradients together when their joint L2 norm exceeds `max`.
    GlobalNorm(f64),
    /// Clamp each element into `[-max, max]`.
    PerElement(f64),
}

impl Default for ClipMode {
    fn default() -> Self {
        ClipMode::GlobalNorm(5.0)
    }
}

pub fn global_norm<T: Scalar>(grads: &[Tensor<T>]) -> T {
    grads.iter().map(Tensor::squared_norm).sum::<T>().sqrt()
}

/// Clips in place and returns the pre-clip global norm.
pub fn clip_gradients<T: Scalar>(grads: &mut [Tensor<T>], mode: ClipMode) -> T {
    let norm = global_norm(grads);
    match mode {
        ClipMode::GlobalNorm(max) => {
            let max = T::lit(max);
            if norm > max {
                let s = max / norm;
                for g in grads.iter_mut() {
                    g.data_mut().iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        ClipMode::PerElement(max) => {
            let max = T::lit(max);
            for g in grads.iter_mut() {
                g.data_mut().iter_mut().for_each(|v| *v = v.max(-max).min(max));
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_norm_untouched() {
        let mut g = vec![Tensor::vector(vec![0.3, 0.4]).unwrap()];
        let before = g.clone();
        clip_gradients(&mut g, ClipMode::GlobalNorm(5.0));
        assert_eq!(g, before);
    }

    #[test]
    fn three_four_five() {
        let mut g = vec![Tensor::<f64>::vector(vec![3.0, 4.0]).unwrap()];
        let n = clip_gradients(&mut g, ClipMode::GlobalNorm(1.0));
        assert_eq!(n, 5.0);
        assert!((g[0].data()[0] - 0.6).abs() < 1e-15);
        assert!((g[0].data()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn per_element_clamp() {
        let mut g = vec![Tensor::vector(vec![3.0, -0.5, -9.0]).unwrap()];
        clip_gradients(&mut g, ClipMode::PerElement(1.0));
        assert_eq!(g[0].data(), &[1.0, -0.5, -1.0]);
    }

    proptest! {
        #[test]
        fn post_clip_norm_bounded(
            a in prop::collection::vec(-100.0f64..100.0, 1..20),
            b in prop::collection::vec(-100.0f64..100.0, 1..20),
            max in 0.01f64..10.0,
        ) {
            let mut g = vec![Tensor::vector(a).unwrap(), Tensor::vector(b).unwrap()];
            clip_gradients(&mut g, ClipMode::GlobalNorm(max));
            let n: f64 = g.iter().flat_map(|t| t.data()).map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(n <= max + 1e-12);
        }
    }
}
