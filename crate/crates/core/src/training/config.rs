use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ClipMode;

/// Optimizer and schedule settings shared by every training phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub minibatch_size: usize,
    pub d_epochs: usize,
    pub g_epochs: usize,
    pub rounds: usize,
    pub minibatches_per_round: usize,
    /// Steps of truncated BPTT; generator windows hold one extra value.
    pub tbptt_window: usize,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    pub clip: ClipMode,
    pub sigma_floor: Option<f64>,
    pub holdout_fraction: f64,
    pub threshold: f64,
    /// First input fed to the generator when sampling fake windows, in
    /// model (normalized) units.
    pub seed_value: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            minibatch_size: 32,
            d_epochs: 200,
            g_epochs: 100,
            rounds: 10,
            minibatches_per_round: 8,
            tbptt_window: 100,
            learning_rate: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_eps: 1e-6,
            clip: ClipMode::GlobalNorm(5.0),
            sigma_floor: Some(crate::mdn::DEFAULT_SIGMA_FLOOR),
            holdout_fraction: 0.25,
            threshold: 0.5,
            seed_value: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.minibatch_size == 0 || self.minibatches_per_round == 0 || self.tbptt_window == 0 {
            return bad("minibatch size, minibatches per round and tbptt window must be ≥ 1".into());
        }
        if self.rounds == 0 {
            return bad("rounds must be ≥ 1".into());
        }
        if !(self.learning_rate >= 0.0) {
            return bad(format!("learning rate {} must be ≥ 0", self.learning_rate));
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return bad(format!("rmsprop decay {} must lie in (0, 1)", self.rmsprop_decay));
        }
        if !(self.rmsprop_eps > 0.0) {
            return bad("rmsprop epsilon must be > 0".into());
        }
        match self.clip {
            ClipMode::GlobalNorm(m) | ClipMode::PerElement(m) if !(m > 0.0) => {
                return bad("clip threshold must be > 0".into())
            }
            _ => {}
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad("holdout fraction must lie in (0, 1)".into());
        }
        if matches!(self.sigma_floor, Some(f) if !(f > 0.0)) {
            return bad("sigma floor must be > 0".into());
        }
        Ok(())
    }
}
