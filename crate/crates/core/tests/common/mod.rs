//! Independent oracles shared by the integration suites.
//!
//! Nothing here goes through the tape or the tensor kernels: parameters are
//! read as flat row-major slices and every formula is written out as loops.

#![allow(dead_code)]

use sensegen::discriminator::DiscriminatorModel;
use sensegen::generator::{FinalActivation, GeneratorModel};
use sensegen::nn::{Activation, DenseParams, LstmParams, Params};
use sensegen::Tensor;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `W x` with `W` stored row-major `[rows × x.len()]`.
fn mat_vec(w: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn gate(wx: &Tensor<f64>, wh: &Tensor<f64>, b: &Tensor<f64>, x: &[f64], h: &[f64]) -> Vec<f64> {
    let a = mat_vec(wx.data(), x);
    let r = mat_vec(wh.data(), h);
    (0..b.len()).map(|j| a[j] + r[j] + b.data()[j]).collect()
}

/// One cell update for a single sequence, written gate by gate.
pub fn lstm_cell(p: &LstmParams<f64>, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f = gate(&p.w_xf, &p.w_hf, &p.b_f, x, h);
    let i = gate(&p.w_xi, &p.w_hi, &p.b_i, x, h);
    let o = gate(&p.w_xo, &p.w_ho, &p.b_o, x, h);
    let g = gate(&p.w_xc, &p.w_hc, &p.b_c, x, h);
    let n = h.len();
    let mut c2 = vec![0.0; n];
    let mut h2 = vec![0.0; n];
    for j in 0..n {
        c2[j] = sigmoid(f[j]) * c[j] + sigmoid(i[j]) * g[j].tanh();
        h2[j] = sigmoid(o[j]) * c2[j].tanh();
    }
    (h2, c2)
}

/// Top-layer outputs of a stack run from zero state over a scalar sequence.
pub fn lstm_stack(stack: &[LstmParams<f64>], xs: &[f64]) -> Vec<Vec<f64>> {
    let n = stack[0].b_f.len();
    let mut h = vec![vec![0.0; n]; stack.len()];
    let mut c = vec![vec![0.0; n]; stack.len()];
    let mut out = Vec::new();
    for &x in xs {
        let mut input = vec![x];
        for (l, p) in stack.iter().enumerate() {
            let (h2, c2) = lstm_cell(p, &input, &h[l], &c[l]);
            h[l] = h2.clone();
            c[l] = c2;
            input = h2;
        }
        out.push(input);
    }
    out
}

pub fn dense(p: &DenseParams<f64>, x: &[f64]) -> Vec<f64> {
    let z = mat_vec(p.w.data(), x);
    z.iter()
        .zip(p.b.data())
        .map(|(a, b)| match p.activation {
            Activation::Sigmoid => sigmoid(a + b),
            Activation::Linear => a + b,
        })
        .collect()
}

pub struct RefGmm {
    pub pi: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn ref_split(l5: &[f64]) -> RefGmm {
    let k = l5.len() / 3;
    let m = l5[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = l5[..k].iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    RefGmm {
        pi: e.iter().map(|v| v / z).collect(),
        mu: l5[k..2 * k].to_vec(),
        sigma: l5[2 * k..].iter().map(|v| v.exp()).collect(),
    }
}

/// Mixture density evaluated as a plain sum of weighted normal densities.
pub fn ref_pdf(g: &RefGmm, x: f64) -> f64 {
    (0..g.pi.len())
        .map(|k| {
            let z = (x - g.mu[k]) / g.sigma[k];
            g.pi[k] * (-0.5 * z * z).exp() / (g.sigma[k] * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum()
}

pub fn ref_generator(m: &GeneratorModel<f64>, xs: &[f64]) -> Vec<RefGmm> {
    lstm_stack(&m.stack, xs)
        .iter()
        .map(|h| ref_split(&dense(&m.fc5, &dense(&m.fc4, h))))
        .collect()
}

pub fn ref_sequence_nll(m: &GeneratorModel<f64>, w: &[f64]) -> f64 {
    ref_generator(m, &w[..w.len() - 1])
        .iter()
        .zip(&w[1..])
        .map(|(g, &x)| -ref_pdf(g, x).ln())
        .sum()
}

pub fn ref_score(d: &DiscriminatorModel<f64>, w: &[f64]) -> f64 {
    let h = lstm_stack(std::slice::from_ref(&d.lstm), w);
    dense(&d.out, &dense(&d.fc, h.last().unwrap()))[0]
}

pub fn ref_bce(d: &DiscriminatorModel<f64>, real: &[Vec<f64>], fake: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for w in real {
        s += ref_score(d, w).ln();
    }
    for w in fake {
        s += (1.0 - ref_score(d, w)).ln();
    }
    -s
}

pub fn is_sigmoid_head(m: &GeneratorModel<f64>) -> bool {
    m.config.final_activation == FinalActivation::SigmoidLiteral
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Worst central-difference disagreement across all parameters of `model`.
pub struct FdReport {
    pub checked: usize,
    pub worst_rel: f64,
    pub worst_abs: f64,
    pub worst_name: String,
    pub failures: usize,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

/// Compares `analytic` (one tensor per parameter, in [`Params`] order) with
/// central differences of `loss`. An entry passes when the relative error is
/// below `rel_tol` or the absolute error is below `abs_tol`.
pub fn fd_check<M: Params<f64> + Clone>(
    model: &M,
    analytic: &[Tensor<f64>],
    loss: impl Fn(&M) -> f64,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> FdReport {
    let names = model.names();
    let mut probe = model.clone();
    let mut report = FdReport {
        checked: 0,
        worst_rel: 0.0,
        worst_abs: 0.0,
        worst_name: String::new(),
        failures: 0,
    };
    for (p, name) in names.iter().enumerate() {
        let n = model.tensors()[p].len();
        for e in 0..n {
            let orig = model.tensors()[p].data()[e];
            probe.tensors_mut()[p].data_mut()[e] = orig + h;
            let up = loss(&probe);
            probe.tensors_mut()[p].data_mut()[e] = orig - h;
            let down = loss(&probe);
            probe.tensors_mut()[p].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[p].data()[e];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
            report.checked += 1;
            report.worst_abs = report.worst_abs.max(abs);
            if abs >= abs_tol && rel >= rel_tol {
                report.failures += 1;
            }
            if abs >= abs_tol && rel > report.worst_rel {
                report.worst_rel = rel;
                report.worst_name = format!("{name}[{e}]");
            }
        }
    }
    report
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}
