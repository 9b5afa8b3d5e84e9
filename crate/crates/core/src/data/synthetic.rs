use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Parameterized desk-scale processes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SyntheticKind {
    /// `amplitude · sin(2π · frequency · t) + noise · ε_t`, `t` in steps.
    Sine {
        amplitude: f64,
        frequency: f64,
        noise: f64,
    },
    /// `x_{t+1} = phi · x_t + noise · ε_t`, `x_0 = 0`.
    Ar1 { phi: f64, noise: f64 },
    /// Each value is `±1` with equal probability plus `noise · ε_t`.
    Bimodal { noise: f64 },
}

impl SyntheticKind {
    /// Default parameters for a kind name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "sine" => Ok(Self::Sine {
                amplitude: 1.0,
                frequency: 0.05,
                noise: 0.05,
            }),
            "ar1" => Ok(Self::Ar1 { phi: 0.9, noise: 0.1 }),
            "bimodal" => Ok(Self::Bimodal { noise: 0.05 }),
            other => Err(Error::Config(format!(
                "unknown synthetic kind '{other}' (expected sine, ar1 or bimodal)"
            ))),
        }
    }
}

pub fn synthetic_dataset(kind: SyntheticKind, length: usize, seed: u64) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::Config("synthetic length must be ≥ 1".into()));
    }
    let mut r = rng::stream(seed, "synthetic");
    let mut eps = move || -> f64 { r.sample(StandardNormal) };
    Ok(match kind {
        SyntheticKind::Sine {
            amplitude,
            frequency,
            noise,
        } => (0..length)
            .map(|t| {
                let clean = amplitude * (2.0 * std::f64::consts::PI * frequency * t as f64).sin();
                if noise == 0.0 {
                    clean
                } else {
                    clean + noise * eps()
                }
            })
            .collect(),
        SyntheticKind::Ar1 { phi, noise } => {
            let mut x = 0.0;
            (0..length)
                .map(|_| {
                    x = phi * x + noise * eps();
                    x
                })
                .collect()
        }
        SyntheticKind::Bimodal { noise } => {
            let mut coin = rng::stream(seed, "synthetic-coin");
            (0..length)
                .map(|_| {
                    let m = if coin.random::<bool>() { 1.0 } else { -1.0 };
                    m + noise * eps()
                })
                .collect()
        }
    })
}
