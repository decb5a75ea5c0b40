use nb2e_core::analysis::{cluster_dbscan, phase_of, project_pca, NOISE};
use nb2e_core::encoding::{decode_nb2e, encode_ffe, encode_nb2e};
use nb2e_core::experiment::{build_dataset, run_single, Architecture, InputEncoding};
use nb2e_core::nn::{
    adamw_step, backward, init_model, loss, train, Activation, AdamWConfig, Matrix, MlpModel, OptimizerState,
    TrainConfig, WarmRestartSchedule,
};
use nb2e_core::signals::{eval_beat, eval_sine, eval_expdecay, eval_sawtooth, eval_square, eval_triangle, SignalKind, SignalSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn roundtrip_within_resolution(x in 0.0f64..1.0, n in 1usize..=53) {
        let decoded = decode_nb2e(&encode_nb2e(x, n).unwrap());
        prop_assert!(decoded <= x);
        prop_assert!(x - decoded < 2f64.powi(-(n as i32)));
    }

    #[test]
    fn decode_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, n in 1usize..=64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(decode_nb2e(&encode_nb2e(lo, n).unwrap()) <= decode_nb2e(&encode_nb2e(hi, n).unwrap()));
    }

    #[test]
    fn ffe_pairs_have_unit_norm(x in 0.0f64..1.0, n in 1usize..=64) {
        let f = encode_ffe(x, n).unwrap();
        for i in 1..=n {
            let (s, c) = f.pair(i).unwrap();
            prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_repeats_with_its_period(x in 0.0f64..0.5, i in 2usize..=20) {
        // Bit i has period 2^-(i-1): shifting by it leaves bit i unchanged.
        let period = 2f64.powi(1 - i as i32);
        prop_assume!(x + period < 1.0);
        let a = encode_nb2e(x, 24).unwrap();
        let b = encode_nb2e(x + period, 24).unwrap();
        prop_assert_eq!(a.bit(i), b.bit(i));
    }

    #[test]
    fn periodic_shapes_repeat(x in -50.0f64..50.0, p in 0.5f64..20.0, amp in 0.1f64..5.0, rate in 0.1f64..10.0) {
        let u = x / p;
        let frac = u - u.floor();
        // Keep away from the jump points of the discontinuous shapes.
        prop_assume!(frac > 1e-6 && frac < 1.0 - 1e-6 && (frac - 0.5).abs() > 1e-6);
        let near = |a: f64, b: f64| (a - b).abs() < 1e-9 * (1.0 + a.abs());
        prop_assert!(near(eval_sawtooth(x + p, p).unwrap(), eval_sawtooth(x, p).unwrap()));
        prop_assert!(near(eval_triangle(x + p, p).unwrap(), eval_triangle(x, p).unwrap()));
        prop_assert!(near(eval_square(x + p, p, amp).unwrap(), eval_square(x, p, amp).unwrap()));
        prop_assert!(near(eval_expdecay(x + p, p, rate, amp).unwrap(), eval_expdecay(x, p, rate, amp).unwrap()));
        let beat_term = |x: f64| eval_beat(x, p, 1e9, 2.0 * amp).unwrap();
        prop_assert!((beat_term(x + p) - beat_term(x)).abs() < 1e-6);
    }

    #[test]
    fn shape_ranges(x in -1e3f64..1e3, p in 0.1f64..20.0, amp in 0.1f64..5.0, rate in 0.1f64..10.0) {
        let s = eval_sawtooth(x, p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        let t = eval_triangle(x, p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&t));
        let q = eval_square(x, p, amp).unwrap();
        prop_assert!(q == amp || q == -amp || q == 0.0);
        let e = eval_expdecay(x, p, rate, amp).unwrap();
        prop_assert!(e > amp * (-rate).exp() && e <= amp);
    }

    #[test]
    fn phase_in_unit_interval(x in -1e6f64..1e6, p in 1e-3f64..1e3) {
        let ph = phase_of(x, p).unwrap();
        prop_assert!((0.0..1.0).contains(&ph));
    }

    #[test]
    fn schedule_restarts_and_decays(t0 in 1u64..200, mult in 1.0f64..3.0, lr_min in 1e-7f64..1e-4, lr_max in 1e-4f64..1e-1) {
        let s = WarmRestartSchedule { lr_max, lr_min, first_cycle_steps: t0, cycle_mult: mult };
        let boundaries = s.restart_steps(5000);
        prop_assert_eq!(boundaries[0], 0);
        for &b in &boundaries {
            prop_assert_eq!(s.lr_at(b), lr_max);
        }
        let end = *boundaries.last().unwrap();
        for step in 1..end {
            if !boundaries.contains(&step) {
                prop_assert!(s.lr_at(step) <= s.lr_at(step - 1));
                prop_assert!(s.lr_at(step) >= lr_min);
            }
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> MlpModel {
    let input = rng.random_range(1..=4);
    let hidden = rng.random_range(1..=2);
    let mut sizes = vec![input];
    sizes.extend((0..hidden).map(|_| rng.random_range(1..=8)));
    sizes.push(1);
    let activation = if rng.random_bool(0.5) { Activation::Elu } else { Activation::Sine };
    let l2 = if rng.random_bool(0.5) { 1e-3 } else { 0.0 };
    let mut model = init_model(&sizes, activation, l2, rng.random()).unwrap();
    for p in model.parameters_mut() {
        p.iter_mut().for_each(|v| *v += rng.random_range(-0.2..0.2));
    }
    model
}

fn scalar_loss(model: &MlpModel, x: &Matrix, y: &[f64]) -> f64 {
    loss(&model.forward(x).unwrap(), y, model).unwrap()
}

#[test]
fn backprop_matches_finite_differences() {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 60 {
        let mut model = random_model(&mut rng);
        let width = model.input_width();
        let x = Matrix::from_fn(6, width, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pred = model.forward(&x).unwrap();
        if pred.as_slice().iter().zip(&y).any(|(p, t)| (p - t).abs() < 1e-3) {
            continue;
        }
        checked += 1;
        let (_, grads) = backward(&model, &x, &y).unwrap();
        let analytic: Vec<f64> = grads.slices().flat_map(|s| s.iter().copied()).collect();
        let sizes: Vec<usize> = model.parameters().map(<[f64]>::len).collect();
        let mut flat = 0;
        for (slot, &len) in sizes.iter().enumerate() {
            for j in 0..len {
                let set = |m: &mut MlpModel, delta: f64| {
                    m.parameters_mut().nth(slot).unwrap()[j] += delta;
                };
                set(&mut model, h);
                let up = scalar_loss(&model, &x, &y);
                set(&mut model, -2.0 * h);
                let down = scalar_loss(&model, &x, &y);
                set(&mut model, h);
                let numeric = (up - down) / (2.0 * h);
                let g = analytic[flat];
                // Central differences carry about 1e-10 of rounding noise, so tiny gradients are compared on that scale.
                let scale = g.abs().max(numeric.abs()).max(1e-5);
                assert!((g - numeric).abs() / scale < 1e-4, "param {flat}: backprop {g} vs numeric {numeric}");
                flat += 1;
            }
        }
    }
}

#[test]
fn penalty_alone_shrinks_weights() {
    for (l2, wd) in [(1e-3, 0.0), (0.0, 1e-2), (1e-3, 1e-2)] {
        let mut model = init_model(&[3, 5, 4, 1], Activation::Elu, l2, 7).unwrap();
        let x = Matrix::from_fn(8, 3, |r, c| ((r + c) % 3) as f64 - 1.0);
        // Targets equal to the predictions make the data gradient exactly zero.
        let y = model.forward(&x).unwrap().into_vec();
        let (_, grads) = backward(&model, &x, &y).unwrap();
        let total = |m: &MlpModel| m.layers().iter().map(|l| l.weights.sum_of_squares()).sum::<f64>();
        let (hidden_before, total_before) = (model.hidden_weight_norm_sq(), total(&model));
        let mut state = OptimizerState::new(&model);
        let cfg = AdamWConfig { weight_decay: wd, ..AdamWConfig::default() };
        adamw_step(&mut model, &grads, &mut state, 1e-3, &cfg).unwrap();
        if l2 > 0.0 {
            assert!(model.hidden_weight_norm_sq() < hidden_before);
        }
        assert!(total(&model) < total_before);
    }
}

#[test]
fn elu_is_continuously_differentiable_at_zero() {
    let elu = Activation::Elu;
    for eps in [1e-3, 1e-6, 1e-9, 1e-12] {
        assert!((elu.apply(eps) - elu.apply(-eps)).abs() <= 2.0 * eps * (1.0 + eps));
        let left = elu.derivative(-eps, elu.apply(-eps));
        let right = elu.derivative(eps, elu.apply(eps));
        assert!((left - right).abs() <= 2.0 * eps);
    }
}

fn affine() -> (Matrix, Vec<f64>) {
    let xs: Vec<f64> = (0..128).map(|i| i as f64 / 128.0).collect();
    let ys = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    (Matrix::from_vec(128, 1, xs), ys)
}

#[test]
fn training_is_deterministic() {
    let (x, y) = affine();
    let cfg = TrainConfig { epochs: 20, batch_size: 32, seed: 9, ..TrainConfig::default() };
    let run = || {
        let mut m = init_model(&[1, 8, 8, 1], Activation::Elu, 1e-4, 3).unwrap();
        let report = train(&mut m, &x, &y, &cfg).unwrap();
        (m, report)
    };
    assert_eq!(run(), run());
}

#[test]
fn affine_target_converges() {
    let (x, y) = affine();
    let mut m = init_model(&[1, 16, 16, 1], Activation::Elu, 0.0, 0).unwrap();
    let cfg = TrainConfig { epochs: 200, batch_size: 32, lr_max: 1e-2, ..TrainConfig::default() };
    train(&mut m, &x, &y, &cfg).unwrap();
    let pred = m.predict(&x, 64).unwrap();
    let mae = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).sum::<f64>() / y.len() as f64;
    assert!(mae < 1e-2, "train MAE {mae}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_is_exact(seed in any::<u64>(), p in 0.05f64..0.95, n in 50usize..2000, x_max in 1.0f64..1e4) {
        if let Ok(ds) = build_dataset(&SignalSpec::new(SignalKind::Sine), n, x_max, p, seed) {
            prop_assert_eq!(ds.train_idx.len() + ds.test_idx.len(), n);
            prop_assert!(ds.train_max() <= p && p < ds.test_min());
            prop_assert!(ds.x_norm.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn split_fraction_is_binomial(seed in any::<u64>(), p in 0.1f64..0.9) {
        let n = 10_000;
        let ds = build_dataset(&SignalSpec::new(SignalKind::Sine), n, 100.0, p, seed).unwrap();
        let q = p * (1.0 + 1.0 / 1_048_576.0);
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        prop_assert!((ds.train_idx.len() as f64 - n as f64 * q).abs() <= 5.0 * sd);
    }

    #[test]
    fn dbscan_labels_are_consistent(seed in any::<u64>(), eps in 0.05f64..0.4, min_samples in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = Matrix::from_fn(150, 2, |_, _| rng.random_range(0.0..1.0));
        let labels = cluster_dbscan(&pts, eps, min_samples).unwrap();
        let within = |a: usize, b: usize| {
            let d: f64 = pts.row(a).iter().zip(pts.row(b)).map(|(x, y)| (x - y) * (x - y)).sum();
            d <= eps * eps
        };
        let neighbors = |i: usize| (0..150).filter(|&j| within(i, j)).collect::<Vec<_>>();
        for i in 0..150 {
            let nb = neighbors(i);
            if nb.len() >= min_samples {
                prop_assert!(labels[i] != NOISE);
                prop_assert!(nb.iter().all(|&j| labels[j] != NOISE));
            }
            if labels[i] == NOISE {
                prop_assert!(nb.iter().all(|&j| neighbors(j).len() < min_samples));
            }
        }
    }

    #[test]
    fn pca_variance_is_bounded(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Matrix::from_fn(40, 5, |_, c| rng.random_range(-1.0..1.0) * (c + 1) as f64);
        let p = project_pca(&data, k).unwrap();
        let kept: f64 = p.explained_variance.iter().sum();
        prop_assert!(kept <= p.total_variance * (1.0 + 1e-12));
        if k == 5 {
            prop_assert!((kept - p.total_variance).abs() < 1e-8);
        }
    }
}

#[test]
fn runs_are_reproducible_and_width_contract_holds() {
    let ds = build_dataset(&SignalSpec::new(SignalKind::Sine).with_noise(0.3), 400, 60.0, 0.7, 5).unwrap();
    let arch = Architecture { hidden_layers: 2, width: 8, activation: Activation::Elu, l2_factor: 1e-4, init_seed: 1 };
    let cfg = TrainConfig { epochs: 3, batch_size: 64, ..TrainConfig::default() };
    for (enc, width) in InputEncoding::standard_set(16).into_iter().zip([16, 32, 1]) {
        assert_eq!(enc.width(), width);
        let mut a = run_single(&ds, enc, &arch, &cfg).unwrap();
        let mut b = run_single(&ds, enc, &arch, &cfg).unwrap();
        assert_eq!(a.model.layer_sizes(), vec![width, 8, 8, 1]);
        a.wall_time_secs = None;
        b.wall_time_secs = None;
        assert_eq!(a, b);
        for (k, &i) in a.test.indices.iter().enumerate() {
            assert_eq!(a.test.residuals[k], a.test.predictions[k] - eval_sine(ds.x_raw[i]));
        }
    }
}
