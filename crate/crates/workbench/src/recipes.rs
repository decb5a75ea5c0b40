//! Bundled experiment configurations, one per reproducible figure.

use std::path::PathBuf;

use nb2e_core::experiment::Profile;
use nb2e_core::nn::Activation;
use nb2e_core::signals::{SignalKind, SignalSpec};

use crate::config::{
    AnalysisSection, ConfigError, DatasetSection, ExperimentKind, ModelSection, RunSpec, SweepSection, TrainSection,
};

/// Recipe ids with a one-line description each.
pub const RECIPES: [(&str, &str); 11] = [
    ("fig3", "sin(x): NB2E vs FFE vs continuous input"),
    ("fig4", "composite sine: NB2E vs FFE vs continuous input"),
    ("fig5", "sawtooth + triangle: NB2E vs FFE vs continuous input"),
    ("composite-mixed", "beat + exponential decay + square: NB2E vs FFE vs continuous input"),
    ("fig6", "sin(x): train/test split point p from 0.1 to 0.7"),
    ("fig7", "sin(x): 1 to 7 cycles in the data"),
    ("fig8", "sin(x): 250 to 2000 data points"),
    ("fig9", "sin(x): Gaussian noise sigma from 0.25 to 2.0"),
    ("fig14", "sin(x): ELU vs sine hidden activations"),
    ("fig10", "sin(x): hidden-layer activation analysis"),
    ("fig12", "composite sine: hidden-layer activation analysis"),
];

fn spec(experiment: ExperimentKind, kind: SignalKind, x_max: f64, id: &str) -> RunSpec {
    RunSpec {
        experiment,
        profile: Profile::Desk,
        out_dir: PathBuf::from("out").join(id),
        signal: SignalSpec::new(kind),
        dataset: DatasetSection { x_max, ..DatasetSection::default() },
        model: ModelSection { activation: Activation::Elu, ..ModelSection::default() },
        train: TrainSection::default(),
        sweep: SweepSection::default(),
        analysis: AnalysisSection::default(),
    }
}

/// The bundled config for `id` at the desk profile.
pub fn recipe(id: &str) -> Result<RunSpec, ConfigError> {
    use ExperimentKind::*;
    use SignalKind::*;
    Ok(match id {
        "fig3" => spec(Compare, Sine, 100.0, id),
        "fig4" => spec(Compare, CompositeSine, 400.0, id),
        "fig5" => spec(Compare, SawTriangle, 200.0, id),
        "composite-mixed" => spec(Compare, CompositeMixed, 200.0, id),
        "fig6" => spec(SweepSplit, Sine, 100.0, id),
        "fig7" => spec(SweepCycles, Sine, 100.0, id),
        "fig8" => spec(SweepSize, Sine, 100.0, id),
        "fig9" => spec(SweepNoise, Sine, 100.0, id),
        "fig14" => spec(CompareActivations, Sine, 100.0, id),
        "fig10" => spec(Analyze, Sine, 100.0, id),
        "fig12" => spec(Analyze, CompositeSine, 400.0, id),
        _ => {
            let known: Vec<&str> = RECIPES.iter().map(|r| r.0).collect();
            return Err(ConfigError::new("figure", format!("unknown figure `{id}`; expected one of {}", known.join(", "))));
        }
    })
}
