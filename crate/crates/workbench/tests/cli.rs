use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use nb2e_core::encoding::encode_nb2e;
use nb2e_workbench::output::sha256_hex;

fn nb2e(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nb2e")).args(args).output().expect("binary runs")
}

fn tiny_config(dir: &Path, experiment: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    let text = format!(
        "experiment = \"{experiment}\"\nout_dir = \"{}\"\n\n[signal]\nkind = \"sine\"\n\n\
         [dataset]\nn_points = 300\n\n[model]\nhidden_layers = 2\nwidth = 8\nn_bits = 12\n\n\
         [train]\nepochs = 5\nbatch_size = 64\n\n[analysis]\ncomponents = 3\nmin_samples = 5\nn_permutations = 10\n{extra}",
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn encode_prints_bits_and_value() {
    let out = nb2e(&["encode", "0.5", "--bits", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("10000000"));
    assert_eq!(lines.next(), Some("decoded: 0.5"));

    let out = nb2e(&["encode", "0.0", "--bits", "8"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next(), Some("00000000"));

    let out = nb2e(&["encode", "0.987654321", "--bits", "48"]);
    let oracle = encode_nb2e(0.987654321, 48).unwrap().to_string();
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next(), Some(oracle.as_str()));
}

#[test]
fn encode_rejects_out_of_domain_values() {
    let out = nb2e(&["encode", "1.5", "--bits", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_split_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "compare", "");
    let text = std::fs::read_to_string(&config).unwrap().replace("n_points = 300", "n_points = 300\nsplit_p = 1.5");
    std::fs::write(&config, text).unwrap();
    let out = nb2e(&["run", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dataset.split_p"), "{err}");
    assert_eq!(err.lines().count(), 1);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "compare", "\n[bogus]\nx = 1\n");
    let out = nb2e(&["run", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_4() {
    let out = nb2e(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let config = tiny_config(dir.path(), "analyze", "");
    let out = nb2e(&["run", config.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn divergence_exits_3_after_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "analyze", "");
    let text = std::fs::read_to_string(&config).unwrap().replace("epochs = 5", "epochs = 5\nlr_max = 1e200\nlr_min = 1e199");
    std::fs::write(&config, text).unwrap();
    let out = nb2e(&["run", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",diverged,"));
}

fn manifest_files(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn listed(manifest: &serde_json::Value) -> Vec<(String, String)> {
    manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn walk(root: &Path, dir: &Path, acc: &mut BTreeSet<String>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            walk(root, &path, acc);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            acc.insert(rel);
        }
    }
}

#[test]
fn manifest_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "analyze", "");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = nb2e(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }

    let a = listed(&manifest_files(&out_a));
    let mut on_disk = BTreeSet::new();
    walk(&out_a, &out_a, &mut on_disk);
    on_disk.remove("manifest.json");
    let names: BTreeSet<String> = a.iter().map(|f| f.0.clone()).collect();
    assert_eq!(names, on_disk);
    for (path, hash) in &a {
        assert_eq!(&sha256_hex(&std::fs::read(out_a.join(path)).unwrap()), hash, "{path}");
    }
    for required in ["summary.csv", "runs/nb2e.csv", "models/nb2e.nb2m", "predictions.svg", "analysis/signatures.csv"] {
        assert!(names.contains(required), "{required}");
    }

    let b = listed(&manifest_files(&out_b));
    let differing: Vec<_> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y && x.0 != "config.toml")
        .map(|(x, _)| x.0.clone())
        .collect();
    assert!(differing.is_empty(), "{differing:?}");

    let manifest = manifest_files(&out_a);
    assert!(manifest["notes"][0].as_str().unwrap().contains("PCA"));
    assert_eq!(manifest["config"]["dataset"]["seed"], 7);
}

#[test]
fn reproduce_rejects_unknown_figures() {
    let out = nb2e(&["reproduce", "fig99"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nb2e(&["recipe"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("fig14"));
    let out = nb2e(&["recipe", "fig6"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("sweep-split"));
}
