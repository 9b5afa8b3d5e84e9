mod common;

use common::fd_check;
use proptest::prelude::*;
use rand::Rng as _;
use sensegen::discriminator::{DiscriminatorConfig, DiscriminatorModel};
use sensegen::generator::{FinalActivation, GeneratorConfig, GeneratorModel};
use sensegen::mdn;
use sensegen::nn::Params;
use sensegen::rng;
use sensegen::{Tape, Tensor, Var};

fn random_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut r = rng::stream(seed, "test");
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn matmul_sum_gradient_matches_central_differences() {
    let a0 = random_tensor(&[3, 4], 1);
    let b0 = random_tensor(&[4, 2], 2);
    let mut tape = Tape::new();
    let a = tape.leaf(a0.clone());
    let b = tape.leaf(b0.clone());
    let c = tape.matmul(a, b).unwrap();
    let s = tape.sum(c);
    let g = tape.backward(s).unwrap();

    let f = |a: &Tensor<f64>, b: &Tensor<f64>| a.matmul(b).unwrap().sum();
    let h = 1e-5;
    for i in 0..a0.len() {
        let (mut up, mut down) = (a0.clone(), a0.clone());
        up.data_mut()[i] += h;
        down.data_mut()[i] -= h;
        let num = (f(&up, &b0) - f(&down, &b0)) / (2.0 * h);
        assert!(rel_err(g.get(a).data()[i], num) < 1e-6, "dA[{i}]");
    }
    for i in 0..b0.len() {
        let (mut up, mut down) = (b0.clone(), b0.clone());
        up.data_mut()[i] += h;
        down.data_mut()[i] -= h;
        let num = (f(&a0, &up) - f(&a0, &down)) / (2.0 * h);
        assert!(rel_err(g.get(b).data()[i], num) < 1e-6, "dB[{i}]");
    }
}

#[test]
fn tanh_gradient_at_point_seven() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(0.7));
    let y = tape.tanh(x);
    let g = tape.backward(y).unwrap().get(x).item();
    let h = 1e-5;
    let num = ((0.7f64 + h).tanh() - (0.7f64 - h).tanh()) / (2.0 * h);
    assert!(rel_err(g, num) < 1e-6);
    assert!((g - (1.0 - 0.7f64.tanh().powi(2))).abs() < 1e-15);
}

#[test]
fn sigmoid_gradient_closed_form() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![-3.0, 0.0, 1.5]).unwrap());
    let y = tape.sigmoid(x);
    let s = tape.sum(y);
    let g = tape.backward(s).unwrap().get(x);
    for (i, &v) in [-3.0f64, 0.0, 1.5].iter().enumerate() {
        let sg = common::sigmoid(v);
        assert!((g.data()[i] - sg * (1.0 - sg)).abs() < 1e-15);
    }
}

/// Builds a scalar loss touching every elementwise, row-wise and shape op.
fn composite(tape: &mut Tape<f64>, a: Var, b: Var) -> Var {
    let m = tape.matmul(a, b).unwrap(); // [2×3]
    let sm = tape.softmax(m);
    let ls = tape.log_softmax(m);
    let lse = tape.log_sum_exp(m); // [2]
    let left = tape.slice_cols(sm, 0, 2).unwrap();
    let right = tape.slice_cols(ls, 1, 3).unwrap();
    let prod = tape.mul(left, right).unwrap();
    let th = tape.tanh(prod);
    let sq = tape.square(th);
    let cat = tape.concat_rows(&[sq, th]).unwrap(); // [4×2]
    let ex = tape.exp(cat);
    let one = tape.add_scalar(ex, 1.0);
    let lg = tape.ln(one).unwrap();
    let sc = tape.scale(lg, 0.7);
    let ng = tape.neg(sc);
    let cl = tape.clamp(ng, -10.0, 10.0);
    let s1 = tape.sum(cl);
    let lse_sum = tape.sum(lse);
    let bc = tape.broadcast_cols(lse, 3).unwrap();
    let diff = tape.sub(m, bc).unwrap();
    let sig = tape.sigmoid(diff);
    let s2 = tape.sum(sig);
    let t = tape.add(s1, lse_sum).unwrap();
    tape.add(t, s2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composite_ops_match_central_differences(seed in 0u64..10_000) {
        let a0 = random_tensor(&[2, 4], seed);
        let b0 = random_tensor(&[4, 3], seed ^ 0x55);
        let mut tape = Tape::new();
        let a = tape.leaf(a0.clone());
        let b = tape.leaf(b0.clone());
        let loss = composite(&mut tape, a, b);
        let g = tape.backward(loss).unwrap();
        let eval = |a0: &Tensor<f64>, b0: &Tensor<f64>| {
            let mut t = Tape::new();
            let a = t.leaf(a0.clone());
            let b = t.leaf(b0.clone());
            let l = composite(&mut t, a, b);
            t.value(l).item()
        };
        let h = 1e-5;
        for (which, base) in [(a, &a0), (b, &b0)] {
            for i in 0..base.len() {
                let (mut up, mut down) = (base.clone(), base.clone());
                up.data_mut()[i] += h;
                down.data_mut()[i] -= h;
                let num = if which == a {
                    (eval(&up, &b0) - eval(&down, &b0)) / (2.0 * h)
                } else {
                    (eval(&a0, &up) - eval(&a0, &down)) / (2.0 * h)
                };
                let an = g.get(which).data()[i];
                prop_assert!((an - num).abs() < 1e-7 || rel_err(an, num) < 1e-4,
                    "entry {} analytic {} numeric {}", i, an, num);
            }
        }
    }

    #[test]
    fn tape_replay_is_bitwise_deterministic(seed in 0u64..10_000) {
        let run = || {
            let mut tape = Tape::new();
            let a = tape.leaf(random_tensor(&[2, 4], seed));
            let b = tape.leaf(random_tensor(&[4, 3], seed + 1));
            let l = composite(&mut tape, a, b);
            let g = tape.backward(l).unwrap();
            (g.get(a), g.get(b))
        };
        prop_assert_eq!(run(), run());
    }
}

fn generator_grads(m: &GeneratorModel<f64>, w: &[f64]) -> Vec<Tensor<f64>> {
    let mut tape = Tape::new();
    let vars = m.bind(&mut tape);
    let loss = m.batch_nll_taped(&mut tape, &vars, &[w], None).unwrap();
    let g = tape.backward(loss).unwrap();
    vars.all.iter().map(|&v| g.get(v)).collect()
}

#[test]
fn two_layer_lstm_mdn_gradients_match_central_differences() {
    let cfg = GeneratorConfig {
        lstm_layers: 2,
        lstm_units: 3,
        fc_units: 4,
        mixtures: 2,
        final_activation: FinalActivation::Linear,
    };
    let m = GeneratorModel::<f64>::init(cfg, 11).unwrap();
    let w = [0.2, -0.4, 0.9, 0.1, -0.3, 0.5];
    let r = fd_check(&m, &generator_grads(&m, &w), |m| m.sequence_nll(&w).unwrap(), 1e-5, 1e-4, 1e-7);
    assert!(r.passed(), "{} failures, worst {} at {}", r.failures, r.worst_rel, r.worst_name);
    assert_eq!(r.checked, m.param_count());
}

#[test]
fn sigmoid_head_generator_gradients_match_central_differences() {
    let cfg = GeneratorConfig {
        lstm_layers: 1,
        lstm_units: 4,
        fc_units: 3,
        mixtures: 2,
        final_activation: FinalActivation::SigmoidLiteral,
    };
    let m = GeneratorModel::<f64>::init(cfg, 3).unwrap();
    let w = [0.1, 0.7, 0.4, 0.95, 0.3];
    let r = fd_check(&m, &generator_grads(&m, &w), |m| m.sequence_nll(&w).unwrap(), 1e-5, 1e-4, 1e-7);
    assert!(r.passed(), "{} failures, worst {} at {}", r.failures, r.worst_rel, r.worst_name);
}

#[test]
fn nll_gradient_wrt_head_vector() {
    let l5 = random_tensor(&[1, 9], 21);
    let x = 0.35;
    let mut tape = Tape::new();
    let head = tape.leaf(l5.clone());
    let g = mdn::split_head_taped(&mut tape, head, None).unwrap();
    let loss = mdn::nll_taped(&mut tape, &g, &[x]).unwrap();
    let grad = tape.backward(loss).unwrap().get(head);
    let f = |v: &[f64]| -mdn::gmm_log_pdf(&mdn::split_head(v).unwrap(), x).unwrap();
    for i in 0..9 {
        let mut up = l5.data().to_vec();
        let mut down = up.clone();
        up[i] += 1e-5;
        down[i] -= 1e-5;
        let num = (f(&up) - f(&down)) / 2e-5;
        let an = grad.data()[i];
        assert!((an - num).abs() < 1e-7 || rel_err(an, num) < 1e-4, "head[{i}]");
    }
}

#[test]
fn discriminator_bce_gradients_match_central_differences() {
    let cfg = DiscriminatorConfig {
        lstm_units: 4,
        fc_units: 3,
        window_len: 5,
        strict: true,
    };
    let d = DiscriminatorModel::<f64>::init(cfg, 5).unwrap();
    let real = [0.1, 0.5, 0.9, 0.5, 0.1];
    let fake = [0.8, 0.2, 0.6, 0.3, 0.7];
    let mut tape = Tape::new();
    let vars = d.bind(&mut tape);
    let loss = d.bce_loss_taped(&mut tape, &vars, &[&real], &[&fake]).unwrap();
    let g = tape.backward(loss).unwrap();
    let analytic: Vec<_> = vars.all.iter().map(|&v| g.get(v)).collect();
    let r = fd_check(&d, &analytic, |d| d.bce_loss(&[&real], &[&fake]).unwrap(), 1e-5, 1e-4, 1e-7);
    assert!(r.passed(), "{} failures, worst {} at {}", r.failures, r.worst_rel, r.worst_name);
}
