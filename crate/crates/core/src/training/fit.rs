//! Minibatch training loops for the generator, the discriminator and the
//! RMSE baseline, and the round-based loop that alternates between them.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::SeriesPool;
use crate::discriminator::{accuracy_from_scores, DiscriminatorModel};
use crate::error::{Error, Result};
use crate::generator::GeneratorModel;
use crate::ndmath::{Gradients, Scalar, Tape, Tensor, Var};
use crate::nn::{clip_gradients, Params};
use crate::rng::{self, Rng};
use crate::training::baseline::BaselineModel;
use crate::training::optim::{rmsprop_step, OptimizerState, RmsProp};
use crate::training::TrainConfig;

fn gather<T: Scalar>(grads: &Gradients<T>, vars: &[Var]) -> Vec<Tensor<T>> {
    vars.iter().map(|&v| grads.get(v)).collect()
}

/// Backpropagates `loss / count`, clips, and applies one RMSProp step.
fn update<T: Scalar, M: Params<T>>(
    model: &mut M,
    tape: &mut Tape<T>,
    loss: Var,
    count: usize,
    vars: &[Var],
    opt: &mut OptimizerState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    let mean = tape.scale(loss, T::one() / T::lit(count as f64));
    let grads = tape.backward(mean)?;
    let mut g = gather(&grads, vars);
    clip_gradients(&mut g, cfg.clip);
    rmsprop_step(&mut model.tensors_mut(), &g, opt, &RmsProp::from(cfg))
}

fn check_windows<T>(windows: &[Vec<T>], what: &str) -> Result<usize> {
    let len = windows.first().map_or(0, Vec::len);
    if windows.is_empty() || len == 0 {
        return Err(Error::Config(format!("{what} dataset is empty")));
    }
    if windows.iter().any(|w| w.len() != len) {
        return Err(Error::Config(format!("{what} windows differ in length")));
    }
    Ok(len)
}

/// One-step-ahead sequence model trained by minibatch RMSProp: the generator
/// (NLL) and the RMSE baseline (squared error) share this loop.
pub(crate) trait SequenceObjective<T: Scalar>: Params<T> {
    /// Taped summed loss over the batch and the parameter variables in
    /// [`Params`] order.
    fn batch_loss(
        &self,
        tape: &mut Tape<T>,
        windows: &[&[T]],
        cfg: &TrainConfig,
    ) -> Result<(Var, Vec<Var>)>;
}

impl<T: Scalar> SequenceObjective<T> for GeneratorModel<T> {
    fn batch_loss(
        &self,
        tape: &mut Tape<T>,
        windows: &[&[T]],
        cfg: &TrainConfig,
    ) -> Result<(Var, Vec<Var>)> {
        let vars = self.bind(tape);
        let loss = self.batch_nll_taped(tape, &vars, windows, cfg.sigma_floor.map(T::lit))?;
        Ok((loss, vars.all))
    }
}

impl<T: Scalar> SequenceObjective<T> for BaselineModel<T> {
    fn batch_loss(
        &self,
        tape: &mut Tape<T>,
        windows: &[&[T]],
        _cfg: &TrainConfig,
    ) -> Result<(Var, Vec<Var>)> {
        let vars = self.bind(tape);
        let loss = self.batch_loss_taped(tape, &vars, windows)?;
        Ok((loss, vars.all))
    }
}

/// Runs `epochs` shuffled passes over `windows`; returns the mean per-step
/// loss of each epoch, measured on each minibatch before its update.
pub(crate) fn fit_sequence_model<T: Scalar, M: SequenceObjective<T>>(
    model: &mut M,
    windows: &[Vec<T>],
    epochs: usize,
    cfg: &TrainConfig,
    opt: &mut OptimizerState<T>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let len = check_windows(windows, "training")?;
    if len < 2 {
        return Err(Error::Config("training windows need at least 2 values".into()));
    }
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(cfg.minibatch_size) {
            let batch: Vec<&[T]> = chunk.iter().map(|&i| windows[i].as_slice()).collect();
            let mut tape = Tape::new();
            let (loss, vars) = model.batch_loss(&mut tape, &batch, cfg)?;
            let n = batch.len() * (len - 1);
            total += tape.value(loss).item().to_f64_lossy();
            count += n;
            update(model, &mut tape, loss, n, &vars, opt, cfg)?;
        }
        history.push(total / count as f64);
    }
    Ok(history)
}

/// Trains the generator for `cfg.g_epochs` passes over `windows`, each of
/// `cfg.tbptt_window + 1` values. LSTM state starts at zero in every window.
/// Returns the mean per-step NLL of each epoch.
pub fn train_generator<T: Scalar>(
    model: &mut GeneratorModel<T>,
    windows: &[Vec<T>],
    cfg: &TrainConfig,
    opt: &mut OptimizerState<T>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let len = check_windows(windows, "generator")?;
    if len != cfg.tbptt_window + 1 {
        return Err(Error::Config(format!(
            "generator windows hold {len} values, expected tbptt_window + 1 = {}",
            cfg.tbptt_window + 1
        )));
    }
    fit_sequence_model(model, windows, cfg.g_epochs, cfg, opt, rng)
}

/// Per-epoch held-out accuracy of one discriminator phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorHistory {
    pub accuracy: Vec<f64>,
    pub loss: Vec<f64>,
}

impl DiscriminatorHistory {
    pub fn final_accuracy(&self) -> f64 {
        self.accuracy.last().copied().unwrap_or(f64::NAN)
    }
}

/// Splits `n` shuffled indices into (train, held-out) with
/// `⌈n · fraction⌉` held out (at least one, and at least one kept).
fn split_holdout(n: usize, fraction: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let held = ((n as f64 * fraction).ceil() as usize).clamp(1, n.saturating_sub(1).max(1));
    let train = idx.split_off(held);
    (train, idx)
}

/// Trains the discriminator for `cfg.d_epochs` epochs. A held-out share of
/// each source (`cfg.holdout_fraction`) is never trained on; accuracy on it
/// is recorded after every epoch.
pub fn train_discriminator<T: Scalar>(
    model: &mut DiscriminatorModel<T>,
    real: &[Vec<T>],
    fake: &[Vec<T>],
    cfg: &TrainConfig,
    opt: &mut OptimizerState<T>,
    rng: &mut Rng,
) -> Result<DiscriminatorHistory> {
    cfg.validate()?;
    check_windows(real, "real")?;
    check_windows(fake, "fake")?;
    if real.len() < 2 || fake.len() < 2 {
        return Err(Error::Config("each source needs ≥ 2 windows to hold some out".into()));
    }
    let (mut real_train, real_held) = split_holdout(real.len(), cfg.holdout_fraction, rng);
    let (mut fake_train, fake_held) = split_holdout(fake.len(), cfg.holdout_fraction, rng);
    let pick = |src: &'_ [Vec<T>], idx: &[usize]| -> Vec<Vec<T>> {
        idx.iter().map(|&i| src[i].clone()).collect()
    };
    let held_real = pick(real, &real_held);
    let held_fake = pick(fake, &fake_held);
    let threshold = T::lit(cfg.threshold);
    let m = cfg.minibatch_size;

    let mut history = DiscriminatorHistory {
        accuracy: Vec::with_capacity(cfg.d_epochs),
        loss: Vec::with_capacity(cfg.d_epochs),
    };
    for _ in 0..cfg.d_epochs {
        real_train.shuffle(rng);
        fake_train.shuffle(rng);
        let batches = real_train.len().min(fake_train.len()).div_ceil(m);
        let (mut total, mut count) = (0.0, 0usize);
        for b in 0..batches {
            let r: Vec<&[T]> = real_train[b * m..((b + 1) * m).min(real_train.len())]
                .iter()
                .map(|&i| real[i].as_slice())
                .collect();
            let f: Vec<&[T]> = fake_train[b * m..((b + 1) * m).min(fake_train.len())]
                .iter()
                .map(|&i| fake[i].as_slice())
                .collect();
            let mut tape = Tape::new();
            let vars = model.bind(&mut tape);
            let loss = model.bce_loss_taped(&mut tape, &vars, &r, &f)?;
            let n = r.len() + f.len();
            total += tape.value(loss).item().to_f64_lossy();
            count += n;
            update(model, &mut tape, loss, n, &vars.all, opt, cfg)?;
        }
        history.loss.push(total / count as f64);
        let hr: Vec<&[T]> = held_real.iter().map(Vec::as_slice).collect();
        let hf: Vec<&[T]> = held_fake.iter().map(Vec::as_slice).collect();
        let acc = accuracy_from_scores(&model.score_batch(&hr)?, &model.score_batch(&hf)?, threshold);
        history.accuracy.push(acc);
    }
    Ok(history)
}

/// Metrics of one outer round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    /// Held-out discriminator accuracy at the end of the round's D phase.
    pub d_accuracy: f64,
    /// Mean per-step NLL of the last epoch of the round's G phase.
    pub g_nll: f64,
}

/// Optimizer state and random streams carried across rounds.
pub struct AlternatingState<T> {
    pub g_opt: OptimizerState<T>,
    pub d_opt: OptimizerState<T>,
    data_rng: Rng,
    sample_rng: Rng,
    shuffle_rng: Rng,
}

impl<T: Scalar> AlternatingState<T> {
    pub fn new(g: &GeneratorModel<T>, d: &DiscriminatorModel<T>, seed: u64) -> Self {
        Self {
            g_opt: OptimizerState::for_params(&g.tensors()),
            d_opt: OptimizerState::for_params(&d.tensors()),
            data_rng: rng::stream(seed, "data"),
            sample_rng: rng::stream(seed, "sampling"),
            shuffle_rng: rng::stream(seed, "shuffle"),
        }
    }
}

/// One round: sample real and generated windows, train the discriminator,
/// resample, then train the generator on real windows only. The generator's
/// objective never sees the discriminator.
pub fn alternating_round<T: Scalar>(
    round: usize,
    g: &mut GeneratorModel<T>,
    d: &mut DiscriminatorModel<T>,
    pool: &SeriesPool<T>,
    cfg: &TrainConfig,
    st: &mut AlternatingState<T>,
) -> Result<RoundMetrics> {
    let n = cfg.minibatch_size * cfg.minibatches_per_round;
    let d_len = d.config.window_len;
    let seed_value = T::lit(cfg.seed_value);

    let real = pool.sample_windows(d_len, n, &mut st.data_rng)?;
    let fake = g.generate_batch(n, d_len, seed_value, &mut st.sample_rng)?;
    let dh = train_discriminator(d, &real, &fake, cfg, &mut st.d_opt, &mut st.shuffle_rng)?;

    let g_windows = pool.sample_windows(cfg.tbptt_window + 1, n, &mut st.data_rng)?;
    // resampled alongside the real windows; the NLL objective does not read it
    let _unused_fake = g.generate_batch(n, d_len, seed_value, &mut st.sample_rng)?;
    let gh = train_generator(g, &g_windows, cfg, &mut st.g_opt, &mut st.shuffle_rng)?;

    let metrics = RoundMetrics {
        round,
        d_accuracy: dh.final_accuracy(),
        g_nll: gh.last().copied().unwrap_or(f64::NAN),
    };
    log::info!(
        "round {round}: d_accuracy {:.4} g_nll {:.5}",
        metrics.d_accuracy,
        metrics.g_nll
    );
    Ok(metrics)
}

/// Runs `cfg.rounds` rounds of [`alternating_round`].
pub fn alternating_loop<T: Scalar>(
    g: &mut GeneratorModel<T>,
    d: &mut DiscriminatorModel<T>,
    pool: &SeriesPool<T>,
    cfg: &TrainConfig,
) -> Result<Vec<RoundMetrics>> {
    cfg.validate()?;
    let mut st = AlternatingState::new(g, d, cfg.seed);
    (1..=cfg.rounds)
        .map(|r| alternating_round(r, g, d, pool, cfg, &mut st))
        .collect()
}
