//! Executes a [`RunSpec`] and writes its artifacts.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use nb2e_core::experiment::{ExperimentError, RunPlan, RunRecord};

use crate::analysis::{analyze_record, write_analysis, LayerReport, PROJECTION_NOTE};
use crate::config::{ExperimentKind, RunSpec};
use crate::output::{
    loss_csv, run_csv, slug, status_of, summary_csv, ArtifactWriter, FileEntry, Manifest, RunTiming, SCHEMA_VERSION,
};
use crate::svg::{line_chart, residual_figure, ResidualPanel};
use crate::{model_io, Error};

const TRUTH_LINE_POINTS: usize = 2000;

/// Runs every plan on up to `threads` workers. Results keep plan order.
pub fn execute_plans(plans: &[RunPlan], threads: usize) -> Vec<Result<RunRecord, ExperimentError>> {
    let threads = threads.clamp(1, plans.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunRecord, ExperimentError>>>> =
        Mutex::new((0..plans.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(plan) = plans.get(k) else { break };
                let result = plan.execute();
                slots.lock().unwrap_or_else(|e| e.into_inner())[k] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every plan is executed"))
        .collect()
}

#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub runs: Vec<(RunPlan, Result<RunRecord, ExperimentError>)>,
    pub analysis: Option<Vec<LayerReport>>,
    pub files: Vec<FileEntry>,
}

impl Outcome {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    /// The first failed run, as the error the process should exit with.
    pub fn status(&self) -> Result<(), Error> {
        match self.runs.iter().find(|(_, r)| r.is_err()) {
            Some((plan, Err(e))) => Err(Error::from_run(&plan.label, e.clone())),
            _ => Ok(()),
        }
    }
}

/// Validates, executes, and writes everything for `spec`. Failed runs are
/// reported in the outputs and by [`Outcome::status`]; the other runs still
/// complete.
pub fn run_spec(spec: &RunSpec, threads: usize) -> Result<Outcome, Error> {
    spec.validate()?;
    let plans = spec.plans()?;
    let runs: Vec<_> = plans.iter().cloned().zip(execute_plans(&plans, threads)).collect();

    let mut writer = ArtifactWriter::create(&spec.out_dir)?;
    writer.write("config.toml", spec.to_toml().as_bytes())?;
    write_runs(&mut writer, spec, &runs)?;

    let mut notes = Vec::new();
    let mut analysis = None;
    if spec.experiment == ExperimentKind::Analyze {
        if let Some(record) = runs.first().and_then(|(_, r)| r.as_ref().ok()) {
            let (trace, reports) = analyze_record(record, &spec.analysis, spec.model.n_bits, threads)?;
            let title = format!("{} hidden-layer activations (PCA projection)", record.plan.signal.name());
            write_analysis(&mut writer, "analysis", &title, &trace, &reports)?;
            notes.push(PROJECTION_NOTE.to_string());
            analysis = Some(reports);
        }
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: format!("nb2e-workbench {}", env!("CARGO_PKG_VERSION")),
        experiment: spec.experiment.to_string(),
        profile: spec.profile.name().to_string(),
        created_unix_secs: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        threads,
        config: spec.clone(),
        runs: runs
            .iter()
            .map(|(plan, r)| RunTiming {
                label: plan.label.clone(),
                status: status_of(r).to_string(),
                wall_time_secs: r.as_ref().ok().and_then(|rec| rec.result.wall_time_secs),
                error: r.as_ref().err().map(ToString::to_string),
            })
            .collect(),
        notes,
        files: Vec::new(),
    };
    let files = writer.finish(&manifest)?;
    Ok(Outcome { out_dir: spec.out_dir.clone(), runs, analysis, files })
}

fn write_runs(
    writer: &mut ArtifactWriter,
    spec: &RunSpec,
    runs: &[(RunPlan, Result<RunRecord, ExperimentError>)],
) -> Result<(), Error> {
    let records: Vec<&RunRecord> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    for r in &records {
        let name = slug(&r.plan.label);
        writer.write(&format!("runs/{name}.csv"), &run_csv(&r.dataset, r))?;
        writer.write(&format!("models/{name}.nb2m"), &model_io::to_bytes(&r.result.model))?;
    }
    writer.write("summary.csv", &summary_csv(runs))?;
    writer.write("loss.csv", &loss_csv(&records))?;

    let guides: Vec<f64> = if spec.experiment == ExperimentKind::SweepSplit {
        (1..8).map(|k| f64::from(k) / 8.0).collect()
    } else {
        Vec::new()
    };
    let panels: Vec<ResidualPanel> = records.iter().map(|r| residual_panel(r, &guides)).collect();
    let title = format!("{}: {}", spec.experiment, spec.signal.name());
    writer.write("predictions.svg", residual_figure(&title, &panels, 1).as_bytes())?;

    if let Some((xlabel, param)) = sweep_parameter(spec.experiment) {
        let points = |pick: fn(&RunRecord) -> f64| records.iter().map(|r| (param(r), pick(r))).collect::<Vec<_>>();
        let series = vec![
            (String::from("train MAE"), points(|r| r.result.train.mae)),
            (String::from("test MAE"), points(|r| r.result.test.mae)),
        ];
        writer.write("mae.svg", line_chart(&title, xlabel, "MAE", &series).as_bytes())?;
    }
    Ok(())
}

type Param = fn(&RunRecord) -> f64;

fn sweep_parameter(kind: ExperimentKind) -> Option<(&'static str, Param)> {
    let p: (&'static str, Param) = match kind {
        ExperimentKind::SweepSplit => ("split point p", |r| r.plan.split_p),
        ExperimentKind::SweepCycles => ("cycles", |r| r.plan.x_max / r.plan.signal.fundamental_period()),
        ExperimentKind::SweepSize => ("data points", |r| r.plan.n_points as f64),
        ExperimentKind::SweepNoise => ("noise sigma", |r| r.plan.signal.noise_sigma),
        _ => return None,
    };
    Some(p)
}

fn residual_panel(r: &RunRecord, guides: &[f64]) -> ResidualPanel {
    let ds = &r.dataset;
    let side = |e: &nb2e_core::experiment::Evaluation| -> Vec<(f64, f64, f64)> {
        e.indices.iter().enumerate().map(|(k, &i)| (ds.x_norm[i], e.predictions[k], e.residuals[k])).collect()
    };
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|&a, &b| ds.x_norm[a].total_cmp(&ds.x_norm[b]));
    let stride = order.len().div_ceil(TRUTH_LINE_POINTS).max(1);
    let truth = order.iter().step_by(stride).map(|&i| (ds.x_norm[i], ds.clean_targets[i])).collect();
    ResidualPanel {
        title: format!(
            "{} (train MAE {:.4}, test MAE {:.4})",
            r.plan.label, r.result.train.mae, r.result.test.mae
        ),
        train: side(&r.result.train),
        test: side(&r.result.test),
        truth,
        split: Some(r.plan.split_p),
        guides: guides.to_vec(),
    }
}
