//! Gaussian mixture output head.
//!
//! A head vector of width `3K` is read as `K` mixture logits, `K` means and
//! `K` log standard deviations. All likelihoods are computed in log space.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ndmath::{log_sum_exp, Scalar, Tape, Tensor, Var};
use crate::rng::Rng;

/// Lower bound applied to σ after `exp` while training.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-4;

/// One univariate mixture: weights, means and standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmParams<T> {
    pub pi: Vec<T>,
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Scalar> GmmParams<T> {
    pub fn new(pi: Vec<T>, mu: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        if pi.is_empty() || pi.len() != mu.len() || mu.len() != sigma.len() {
            return Err(Error::Contract(format!(
                "mixture parts differ in length: {} / {} / {}",
                pi.len(),
                mu.len(),
                sigma.len()
            )));
        }
        Ok(Self { pi, mu, sigma })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn mean(&self) -> T {
        self.pi.iter().zip(&self.mu).map(|(&p, &m)| p * m).sum()
    }

    pub fn variance(&self) -> T {
        let second: T = (0..self.k())
            .map(|k| self.pi[k] * (self.sigma[k] * self.sigma[k] + self.mu[k] * self.mu[k]))
            .sum();
        let m = self.mean();
        second - m * m
    }
}

fn check_divisible(width: usize, shape: &[usize]) -> Result<usize> {
    if width == 0 || width % 3 != 0 {
        return Err(Error::Shape {
            shape: shape.to_vec(),
            reason: format!("head width {width} is not a positive multiple of 3"),
        });
    }
    Ok(width / 3)
}

/// `pi = softmax(l[..K])`, `mu = l[K..2K]`, `sigma = exp(l[2K..])`.
pub fn split_head<T: Scalar>(l5: &[T]) -> Result<GmmParams<T>> {
    split_head_floored(l5, None)
}

pub fn split_head_floored<T: Scalar>(l5: &[T], sigma_floor: Option<T>) -> Result<GmmParams<T>> {
    let k = check_divisible(l5.len(), &[l5.len()])?;
    let pi = Tensor::vector(l5[..k].to_vec())?.softmax().into_data();
    let mu = l5[k..2 * k].to_vec();
    let sigma = l5[2 * k..]
        .iter()
        .map(|&s| match sigma_floor {
            Some(f) => s.exp().max(f),
            None => s.exp(),
        })
        .collect();
    Ok(GmmParams { pi, mu, sigma })
}

/// Log density of a univariate normal.
pub fn normal_log_pdf<T: Scalar>(x: T, mu: T, sigma: T) -> T {
    let z = (x - mu) / sigma;
    -T::lit(0.5) * z * z - sigma.ln() - T::lit(0.5) * (T::lit(2.0) * T::PI()).ln()
}

/// `log Σ_k pi_k N(x; mu_k, sigma_k)` via log-sum-exp.
pub fn gmm_log_pdf<T: Scalar>(g: &GmmParams<T>, x: T) -> Result<T> {
    if g.sigma.iter().any(|&s| !(s > T::zero())) {
        return Err(Error::Domain("mixture standard deviation must be positive".into()));
    }
    let terms: Vec<T> = (0..g.k())
        .map(|k| g.pi[k].ln() + normal_log_pdf(x, g.mu[k], g.sigma[k]))
        .collect();
    Ok(log_sum_exp(&terms))
}

/// `−Σ_t log p(x_{t+1} | g_t)`.
pub fn nll<T: Scalar>(g_seq: &[GmmParams<T>], x_next: &[T]) -> Result<T> {
    if g_seq.is_empty() || g_seq.len() != x_next.len() {
        return Err(Error::Contract(format!(
            "nll needs equal non-empty lengths, got {} mixtures and {} targets",
            g_seq.len(),
            x_next.len()
        )));
    }
    let mut total = T::zero();
    for (g, &x) in g_seq.iter().zip(x_next) {
        total -= gmm_log_pdf(g, x)?;
    }
    Ok(total)
}

/// Draws a component from `pi`, then a value from that component.
pub fn sample<T: Scalar>(g: &GmmParams<T>, rng: &mut Rng) -> T {
    let k = sample_component(&g.pi, rng);
    let z: f64 = rng.sample(StandardNormal);
    g.mu[k] + g.sigma[k] * T::lit(z)
}

fn sample_component<T: Scalar>(pi: &[T], rng: &mut Rng) -> usize {
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    for (k, &p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding can leave Σpi slightly below u
    pi.iter()
        .rposition(|&p| p > T::zero())
        .unwrap_or(pi.len() - 1)
}

/// Mixture parameters of a `[rows × 3K]` head, as tape nodes.
#[derive(Clone, Copy, Debug)]
pub struct GmmVars {
    pub log_pi: Var,
    pub mu: Var,
    pub log_sigma: Var,
    pub k: usize,
}

/// Taped split of a head. A rank-1 head is treated as a single row. With a
/// floor, `log_sigma = ln(max(exp(s), floor))`.
pub fn split_head_taped<T: Scalar>(
    tape: &mut Tape<T>,
    head: Var,
    sigma_floor: Option<T>,
) -> Result<GmmVars> {
    let head = if tape.value(head).rank() < 2 {
        tape.concat_rows(&[head])?
    } else {
        head
    };
    let k = check_divisible(tape.value(head).cols(), tape.value(head).shape())?;
    let logits = tape.slice_cols(head, 0, k)?;
    let log_pi = tape.log_softmax(logits);
    let mu = tape.slice_cols(head, k, 2 * k)?;
    let s = tape.slice_cols(head, 2 * k, 3 * k)?;
    let log_sigma = match sigma_floor {
        Some(f) => {
            let sigma = tape.exp(s);
            let sigma = tape.clamp(sigma, f, T::infinity());
            tape.ln(sigma)?
        }
        None => s,
    };
    Ok(GmmVars {
        log_pi,
        mu,
        log_sigma,
        k,
    })
}

/// Summed negative log-likelihood of `targets` (one per head row), taped.
pub fn nll_taped<T: Scalar>(tape: &mut Tape<T>, g: &GmmVars, targets: &[T]) -> Result<Var> {
    let rows = tape.value(g.mu).rows();
    if targets.len() != rows {
        return Err(Error::Contract(format!(
            "{rows} mixture rows but {} targets",
            targets.len()
        )));
    }
    let x = tape.constant(Tensor::vector(targets.to_vec())?);
    let x = tape.broadcast_cols(x, g.k)?;
    let (mu, log_sigma, log_pi) = (g.mu, g.log_sigma, g.log_pi);

    let diff = tape.sub(x, mu)?;
    let neg_ls = tape.neg(log_sigma);
    let inv_sigma = tape.exp(neg_ls);
    let z = tape.mul(diff, inv_sigma)?;
    let z2 = tape.square(z);
    let quad = tape.scale(z2, -T::lit(0.5));
    let log_n = tape.sub(quad, log_sigma)?;
    let log_n = tape.add_scalar(log_n, -T::lit(0.5) * (T::lit(2.0) * T::PI()).ln());
    let comp = tape.add(log_pi, log_n)?;
    let lse = tape.log_sum_exp(comp);
    let total = tape.sum(lse);
    Ok(tape.neg(total))
}
