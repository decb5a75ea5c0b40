//! Run artifacts: per-run CSVs, the summary table, loss curves, and the
//! manifest that lists every file with its SHA-256.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nb2e_core::experiment::{Dataset, ExperimentError, RunPlan, RunRecord, BIT_SEGMENTS};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunSpec;
use crate::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Every artifact of a run goes through one writer, which records what it
/// wrote for the manifest.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn create(root: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(root).map_err(Error::io(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), Error> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(Error::io(parent))?;
        }
        std::fs::write(&path, bytes).map_err(Error::io(&path))?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` (which does not list itself) and returns the
    /// entries of every other file.
    pub fn finish(self, manifest: &Manifest) -> Result<Vec<FileEntry>, Error> {
        let mut manifest = manifest.clone();
        manifest.files.clone_from(&self.files);
        let text = serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(Error::io(&path))?;
        Ok(self.files)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub label: String,
    pub status: String,
    pub wall_time_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub experiment: String,
    pub profile: String,
    pub created_unix_secs: u64,
    pub threads: usize,
    pub config: RunSpec,
    pub runs: Vec<RunTiming>,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV rows always serialize");
    }
    w.into_inner().expect("in-memory CSV flush cannot fail")
}

#[derive(Serialize)]
struct SampleRow {
    x_raw: f64,
    x_norm: f64,
    target: f64,
    clean_target: f64,
    prediction: f64,
    residual: f64,
    partition: &'static str,
}

/// One row per sample in dataset order.
pub fn run_csv(dataset: &Dataset, record: &RunRecord) -> Vec<u8> {
    let mut by_index: HashMap<usize, (f64, f64, &'static str)> = HashMap::new();
    for (eval, name) in [(&record.result.train, "train"), (&record.result.test, "test")] {
        for (k, &i) in eval.indices.iter().enumerate() {
            by_index.insert(i, (eval.predictions[k], eval.residuals[k], name));
        }
    }
    csv_bytes((0..dataset.len()).map(|i| {
        let (prediction, residual, partition) = by_index[&i];
        SampleRow {
            x_raw: dataset.x_raw[i],
            x_norm: dataset.x_norm[i],
            target: dataset.targets[i],
            clean_target: dataset.clean_targets[i],
            prediction,
            residual,
            partition,
        }
    }))
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    label: &'a str,
    status: &'static str,
    signal: &'static str,
    noise_sigma: f64,
    encoding: String,
    input_width: usize,
    activation: &'static str,
    hidden_layers: usize,
    width: usize,
    epochs: usize,
    n_points: usize,
    x_max: f64,
    split_p: f64,
    data_seed: u64,
    domain: Option<&'static str>,
    n_train: Option<usize>,
    n_test: Option<usize>,
    train_mae: Option<f64>,
    test_mae: Option<f64>,
    test_mae_0_5_to_1: Option<f64>,
    test_mae_0_25_to_0_5: Option<f64>,
    test_mae_0_125_to_0_25: Option<f64>,
    final_loss: Option<f64>,
}

pub fn status_of(result: &Result<RunRecord, ExperimentError>) -> &'static str {
    match result {
        Ok(_) => "ok",
        Err(e) if e.is_divergence() => "diverged",
        Err(_) => "failed",
    }
}

/// Deterministic table of per-run metrics; holds no timings.
pub fn summary_csv(runs: &[(RunPlan, Result<RunRecord, ExperimentError>)]) -> Vec<u8> {
    debug_assert_eq!(BIT_SEGMENTS.len(), 3);
    csv_bytes(runs.iter().map(|(plan, result)| {
        let ok = result.as_ref().ok();
        let segs = ok.map(|r| r.result.bit_segments(&r.dataset));
        let seg = |k: usize| segs.as_ref().and_then(|s| s[k].mae);
        SummaryRow {
            label: &plan.label,
            status: status_of(result),
            signal: plan.signal.name(),
            noise_sigma: plan.signal.noise_sigma,
            encoding: plan.encoding.to_string(),
            input_width: plan.encoding.width(),
            activation: plan.architecture.activation.name(),
            hidden_layers: plan.architecture.hidden_layers,
            width: plan.architecture.width,
            epochs: plan.train.epochs,
            n_points: plan.n_points,
            x_max: plan.x_max,
            split_p: plan.split_p,
            data_seed: plan.data_seed,
            domain: ok.map(|r| match r.dataset.domain_report().status {
                nb2e_core::encoding::DomainStatus::Pass => "pass",
                nb2e_core::encoding::DomainStatus::Warn => "warn",
                nb2e_core::encoding::DomainStatus::Fail => "fail",
            }),
            n_train: ok.map(|r| r.dataset.train_idx.len()),
            n_test: ok.map(|r| r.dataset.test_idx.len()),
            train_mae: ok.map(|r| r.result.train.mae),
            test_mae: ok.map(|r| r.result.test.mae),
            test_mae_0_5_to_1: seg(0),
            test_mae_0_25_to_0_5: seg(1),
            test_mae_0_125_to_0_25: seg(2),
            final_loss: ok.and_then(|r| r.result.loss_history.last().copied()),
        }
    }))
}

#[derive(Serialize)]
struct LossRow<'a> {
    label: &'a str,
    epoch: usize,
    loss: f64,
}

pub fn loss_csv(records: &[&RunRecord]) -> Vec<u8> {
    csv_bytes(records.iter().flat_map(|r| {
        r.result.loss_history.iter().enumerate().map(|(epoch, &loss)| LossRow { label: &r.result.label, epoch, loss })
    }))
}

/// File-name-safe version of a run label.
pub fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_records_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(dir.path()).unwrap();
        w.write("a/b.txt", b"abc").unwrap();
        w.write("a/b.txt", b"abc").unwrap();
        assert_eq!(w.files().len(), 1);
        assert_eq!(w.files()[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(std::fs::read(dir.path().join("a/b.txt")).unwrap(), b"abc");
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("p=0.4"), "p_0.4");
        assert_eq!(slug("activation=sine"), "activation_sine");
    }
}
