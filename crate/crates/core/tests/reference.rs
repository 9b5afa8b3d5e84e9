mod common;

use rand::Rng as _;
use sensegen::discriminator::{bce_from_scores, DiscriminatorConfig, DiscriminatorModel};
use sensegen::generator::{FinalActivation, GeneratorConfig, GeneratorModel};
use sensegen::mdn::{self, GmmParams};
use sensegen::nn::{init_params, lstm_step, lstm_unroll, Layer, LayerSpec, LstmParams, LstmState};
use sensegen::{rng, Tape, Tensor};

fn stack_2x4(seed: u64) -> Vec<LstmParams<f64>> {
    let specs = [
        LayerSpec::Lstm { input: 1, hidden: 4 },
        LayerSpec::Lstm { input: 4, hidden: 4 },
    ];
    init_params::<f64>(&specs, seed)
        .unwrap()
        .into_iter()
        .map(|l| match l {
            Layer::Lstm(p) => p,
            Layer::Dense(_) => unreachable!(),
        })
        .collect()
}

#[test]
fn unrolled_stack_matches_scalar_loop() {
    let stack = stack_2x4(7);
    let xs = [0.3, -0.8, 1.1, 0.0, 0.45, -0.2];
    let mut tape = Tape::new();
    let vars: Vec<_> = stack.iter().map(|p| p.bind(&mut tape)).collect();
    let s0: Vec<_> = (0..2).map(|_| LstmState::zeros(&mut tape, 4, None)).collect();
    let inputs: Vec<_> = xs.iter().map(|&x| tape.constant(Tensor::vector(vec![x]).unwrap())).collect();
    let (hs, _) = lstm_unroll(&mut tape, &vars, &inputs, &s0).unwrap();
    let want = common::lstm_stack(&stack, &xs);
    assert_eq!(hs.len(), 6);
    for (h, w) in hs.iter().zip(&want) {
        for (a, b) in tape.value(*h).data().iter().zip(w) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            assert!(a.abs() < 1.0);
        }
    }
}

#[test]
fn unroll_equals_chained_steps() {
    let stack = stack_2x4(9);
    let xs = [0.5, -0.1, 0.9];
    let mut tape = Tape::new();
    let vars: Vec<_> = stack.iter().map(|p| p.bind(&mut tape)).collect();
    let s0: Vec<_> = (0..2).map(|_| LstmState::zeros(&mut tape, 4, None)).collect();
    let inputs: Vec<_> = xs.iter().map(|&x| tape.constant(Tensor::vector(vec![x]).unwrap())).collect();
    let (hs, finals) = lstm_unroll(&mut tape, &vars, &inputs, &s0).unwrap();

    let mut states = s0.clone();
    let mut top = Vec::new();
    for &x in &inputs {
        let mut input = x;
        for (l, v) in vars.iter().enumerate() {
            states[l] = lstm_step(&mut tape, v, input, states[l]).unwrap();
            input = states[l].h;
        }
        top.push(input);
    }
    for (a, b) in hs.iter().zip(&top) {
        assert_eq!(tape.value(*a), tape.value(*b));
    }
    assert_eq!(tape.value(finals[1].c), tape.value(states[1].c));
}

fn tiny_generator(act: FinalActivation, seed: u64) -> GeneratorModel<f64> {
    let cfg = GeneratorConfig {
        lstm_layers: 1,
        lstm_units: 4,
        fc_units: 3,
        mixtures: 2,
        final_activation: act,
    };
    GeneratorModel::init(cfg, seed).unwrap()
}

#[test]
fn generator_forward_matches_straight_line_reference() {
    for act in [FinalActivation::SigmoidLiteral, FinalActivation::Linear] {
        let m = tiny_generator(act, 13);
        let xs = [0.0, 0.25, 0.8, 0.6, 0.1, 0.9, 0.4];
        let (got, _) = m.forward(&xs, None).unwrap();
        let want = common::ref_generator(&m, &xs);
        for (g, w) in got.iter().zip(&want) {
            for k in 0..2 {
                assert!((g.pi[k] - w.pi[k]).abs() < 1e-12);
                assert!((g.mu[k] - w.mu[k]).abs() < 1e-12);
                assert!((g.sigma[k] - w.sigma[k]).abs() < 1e-12);
            }
        }
        let nll = m.sequence_nll(&xs).unwrap();
        assert!((nll - common::ref_sequence_nll(&m, &xs)).abs() < 1e-12);
    }
}

#[test]
fn sigmoid_literal_head_bounds_mu_and_sigma() {
    let m = tiny_generator(FinalActivation::SigmoidLiteral, 2);
    let mut r = rng::stream(5, "test");
    let xs: Vec<f64> = (0..200).map(|_| r.random_range(-3.0..3.0)).collect();
    let (gmms, _) = m.forward(&xs, None).unwrap();
    for g in &gmms {
        assert!(g.mu.iter().all(|&u| u > 0.0 && u < 1.0));
        assert!(g.sigma.iter().all(|&s| s > 1.0 && s < std::f64::consts::E));
    }
}

#[test]
fn default_generator_accepts_400_steps() {
    let m = GeneratorModel::<f64>::init(GeneratorConfig::default(), 1).unwrap();
    let xs: Vec<f64> = (0..400).map(|t| 0.5 + 0.4 * (t as f64 * 0.05).sin()).collect();
    let (gmms, state) = m.forward(&xs, None).unwrap();
    assert_eq!(gmms.len(), 400);
    assert_eq!(gmms[0].k(), 24);
    assert_eq!(state.h.len(), 3);
    assert_eq!(state.h[0].shape(), &[1, 256]);
}

#[test]
fn generate_lengths_and_seeds() {
    let m = tiny_generator(FinalActivation::SigmoidLiteral, 4);
    let run = |seed| m.generate(400, 0.0, &mut rng::stream(seed, "sampling")).unwrap();
    let a = run(1);
    assert_eq!(a.len(), 400);
    assert!(a.iter().all(|v| v.is_finite()));
    assert_eq!(a, run(1));
    assert_ne!(a, run(2));
    assert_eq!(m.generate(1, 0.0, &mut rng::stream(1, "sampling")).unwrap().len(), 1);
}

fn tiny_discriminator(seed: u64) -> DiscriminatorModel<f64> {
    let cfg = DiscriminatorConfig {
        lstm_units: 4,
        fc_units: 3,
        window_len: 12,
        strict: true,
    };
    DiscriminatorModel::init(cfg, seed).unwrap()
}

fn random_windows(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, "test");
    (0..n).map(|_| (0..len).map(|_| r.random_range(0.0..1.0)).collect()).collect()
}

#[test]
fn discriminator_matches_reference() {
    let d = tiny_discriminator(8);
    let ws = random_windows(5, 12, 3);
    let refs: Vec<&[f64]> = ws.iter().map(Vec::as_slice).collect();
    let batch = d.score_batch(&refs).unwrap();
    for (w, s) in ws.iter().zip(&batch) {
        let r = common::ref_score(&d, w);
        assert!((s - r).abs() < 1e-12);
        assert!((d.score(w).unwrap() - r).abs() < 1e-12);
        assert!(*s > 0.0 && *s < 1.0);
    }
}

#[test]
fn bce_matches_scalar_summation() {
    let d = tiny_discriminator(21);
    let real = random_windows(3, 12, 30);
    let fake = random_windows(3, 12, 31);
    let r: Vec<&[f64]> = real.iter().map(Vec::as_slice).collect();
    let f: Vec<&[f64]> = fake.iter().map(Vec::as_slice).collect();
    let want = common::ref_bce(&d, &real, &fake);
    assert!((d.bce_loss(&r, &f).unwrap() - want).abs() < 1e-12);
    let sr = d.score_batch(&r).unwrap();
    let sf = d.score_batch(&f).unwrap();
    assert!((bce_from_scores(&sr, &sf) - want).abs() < 1e-12);
    assert!(want >= 0.0);
}

#[test]
fn accuracy_is_invariant_to_batch_order() {
    let d = tiny_discriminator(2);
    let real = random_windows(6, 12, 40);
    let fake = random_windows(6, 12, 41);
    let r: Vec<&[f64]> = real.iter().map(Vec::as_slice).collect();
    let f: Vec<&[f64]> = fake.iter().map(Vec::as_slice).collect();
    let median = {
        let mut s = d.score_batch(&r).unwrap();
        s.extend(d.score_batch(&f).unwrap());
        s.sort_by(f64::total_cmp);
        s[6]
    };
    let a = d.accuracy(&r, &f, median).unwrap();
    let (mut r2, mut f2) = (r.clone(), f.clone());
    r2.reverse();
    f2.rotate_left(2);
    assert_eq!(a, d.accuracy(&r2, &f2, median).unwrap());
}

#[test]
fn eight_step_nll_matches_per_step_sum() {
    let mut r = rng::stream(77, "test");
    let gs: Vec<GmmParams<f64>> = (0..8)
        .map(|_| {
            let l5: Vec<f64> = (0..9).map(|_| r.random_range(-1.0..1.0)).collect();
            mdn::split_head(&l5).unwrap()
        })
        .collect();
    let xs: Vec<f64> = (0..8).map(|_| r.random_range(-2.0..2.0)).collect();
    let want: f64 = gs
        .iter()
        .zip(&xs)
        .map(|(g, &x)| {
            let rg = common::RefGmm {
                pi: g.pi.clone(),
                mu: g.mu.clone(),
                sigma: g.sigma.clone(),
            };
            -common::ref_pdf(&rg, x).ln()
        })
        .sum();
    assert!((mdn::nll(&gs, &xs).unwrap() - want).abs() < 1e-12);
}
