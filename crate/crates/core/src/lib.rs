//! Synthetic sensor time-series generation.
//!
//! A stacked-LSTM generator emits a Gaussian mixture over the next value of
//! a univariate series and is sampled autoregressively. An LSTM
//! discriminator is trained to tell real windows from generated ones; its
//! held-out accuracy measures how distinguishable the synthetic data is.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix `f64`, which the command-line tool and the test suites use.

pub mod data;
pub mod discriminator;
pub mod error;
pub mod generator;
pub mod mdn;
pub mod ndmath;
pub mod nn;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use ndmath::{Gradients, Scalar, Tape, Tensor, Var};

pub type Tensor64 = ndmath::Tensor<f64>;
pub type Tape64 = ndmath::Tape<f64>;
pub type GmmParams64 = mdn::GmmParams<f64>;
pub type Generator = generator::GeneratorModel<f64>;
pub type Discriminator = discriminator::DiscriminatorModel<f64>;
pub type Baseline = training::BaselineModel<f64>;
pub type LstmParams64 = nn::LstmParams<f64>;
pub type DenseParams64 = nn::DenseParams<f64>;
pub type OptimizerState64 = training::OptimizerState<f64>;
