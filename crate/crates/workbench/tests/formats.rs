use nb2e_core::experiment::{InputEncoding, RunPlan};
use nb2e_core::nn::{Activation, Matrix};
use nb2e_core::signals::{Component, SignalKind, SignalSpec};
use nb2e_workbench::config::{EncodingName, ExperimentKind};
use nb2e_workbench::{model_io, RunSpec};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = ExperimentKind> {
    prop_oneof![
        Just(ExperimentKind::Compare),
        Just(ExperimentKind::SweepSplit),
        Just(ExperimentKind::SweepCycles),
        Just(ExperimentKind::SweepSize),
        Just(ExperimentKind::SweepNoise),
        Just(ExperimentKind::CompareActivations),
        Just(ExperimentKind::Analyze),
    ]
}

fn signal() -> impl Strategy<Value = SignalKind> {
    let component = prop_oneof![
        (0.1..10.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(period, amplitude, phase)| Component::Sine { period, amplitude, phase }),
        (0.1..10.0f64, 0.0..2.0f64).prop_map(|(period, amplitude)| Component::Square { period, amplitude }),
        (0.1..10.0f64, 0.1..10.0f64, 0.0..2.0f64)
            .prop_map(|(period, rate, amplitude)| Component::ExpDecay { period, rate, amplitude }),
    ];
    prop_oneof![
        Just(SignalKind::Sine),
        Just(SignalKind::CompositeSine),
        Just(SignalKind::SawTriangle),
        Just(SignalKind::CompositeMixed),
        prop::collection::vec(component, 1..4).prop_map(|components| SignalKind::CustomSum { components }),
    ]
}

fn spec() -> impl Strategy<Value = RunSpec> {
    (
        kind(),
        signal(),
        0.0..3.0f64,
        (2usize..50_000, 0.1..1e4f64, 0.01..0.99f64, any::<u64>()),
        (prop::option::of(1usize..8), prop::option::of(1usize..600), any::<bool>(), 0.0..1e-2f64, 1usize..64),
        (prop::option::of(1usize..5000), prop::option::of(1e-5..1e-1f64), prop::option::of(any::<u64>())),
        prop::collection::vec(prop_oneof![Just(EncodingName::Nb2e), Just(EncodingName::Ffe)], 1..3),
        (prop::option::of(1e-3..5.0f64), prop::option::of(prop::collection::vec(1usize..48, 1..4))),
    )
        .prop_map(|(experiment, kind, sigma, d, m, t, encodings, a)| {
            let mut s = RunSpec::from_toml("experiment = \"compare\"\n[signal]\nkind = \"sine\"\n").unwrap();
            s.experiment = experiment;
            s.signal = SignalSpec::new(kind).with_noise(sigma);
            (s.dataset.n_points, s.dataset.x_max, s.dataset.split_p, s.dataset.seed) = d;
            s.model.hidden_layers = m.0;
            s.model.width = m.1;
            s.model.activation = if m.2 { Activation::Sine } else { Activation::Elu };
            s.model.l2_factor = m.3;
            s.model.n_bits = m.4;
            (s.train.epochs, s.train.lr_max, s.train.seed) = t;
            s.sweep.encodings = encodings;
            (s.analysis.eps, s.analysis.bits) = a;
            s
        })
}

proptest! {
    #[test]
    fn config_round_trips(s in spec()) {
        let text = s.to_toml();
        let back = RunSpec::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_toml(), text);
    }
}

#[test]
fn saved_models_predict_identically() {
    let mut spec = RunSpec::from_toml("experiment = \"analyze\"\n[signal]\nkind = \"composite_sine\"\n").unwrap();
    spec.dataset.n_points = 200;
    spec.dataset.x_max = 400.0;
    spec.model.hidden_layers = Some(2);
    spec.model.width = Some(12);
    spec.train.epochs = Some(3);
    let plan: RunPlan = spec.base_plan();
    let record = plan.execute().unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.nb2m");
    model_io::save(&record.result.model, &path).unwrap();
    let loaded = model_io::load(&path).unwrap();

    let inputs: Matrix = InputEncoding::Nb2e { bits: spec.model.n_bits }.encode_all(&record.dataset.x_norm).unwrap();
    let a = record.result.model.predict(&inputs, 64).unwrap();
    let b = loaded.predict(&inputs, 64).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    let test_preds: Vec<f64> = record.result.test.indices.iter().map(|&i| b[i]).collect();
    assert!(test_preds.iter().zip(&record.result.test.predictions).all(|(x, y)| x.to_bits() == y.to_bits()));
}
