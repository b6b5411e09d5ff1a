use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_gcnboost");

const SMALL_SPEC: &str = "preset = \"easy\"\ntrain = 60\nvalidation = 20\ntest = 20\nfeature_dim = 8\n";

const FAST_RUN: &str = "
[n2v]
walk_length = 10
walks_per_node = 2
[sg]
dim = 16
epochs = 1
[gcn]
lr = 0.01
max_iterations = 30
";

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Temp dir holding `spec.toml`, a generated dataset `ds/` and `run.toml`.
fn workspace(extra_run: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    let o = run(&["generate", "--config", "spec.toml", "--out", "ds", "--seed", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(dir.path().join("run.toml"), format!("dataset = \"ds\"\n{extra_run}\n{FAST_RUN}")).unwrap();
    dir
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p.file_name().unwrap().into(), bytes)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn generate_writes_five_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(&["generate", "--preset", "easy", "--out", out, "--seed", "9"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = files(&dir.path().join("a"));
    let names: Vec<_> = a.iter().map(|(n, _)| n.to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["edges.csv", "features.bin", "nodes.csv", "pseudo.csv", "truth.csv"]);
    assert_eq!(a, files(&dir.path().join("b")));
}

#[test]
fn invalid_spec_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "pseudo_corruption = 1.5\n").unwrap();
    let o = run(&["generate", "--config", "bad.toml", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pseudo_corruption"), "{}", stderr(&o));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn ablate_writes_a_parseable_sixteen_row_report() {
    let dir = workspace("");
    let o = run(&["ablate", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[15]["strategy"], "Sall");
    assert_eq!(rows[15]["categories"], "Author+School+TimeFrame+Type");
    for row in rows {
        for m in row["metrics"].as_array().unwrap() {
            let acc = m["accuracy"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&acc));
        }
    }
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 * 4);
    let hist = fs::read_to_string(out.join("degree_histograms.csv")).unwrap();
    assert!(hist.starts_with("category,degree,count,sources\n"));
    assert!(hist.contains("train_plus_pseudo"));
    assert_eq!(fs::read_dir(out.join("embeddings")).unwrap().count(), 32);

    let o = run(&["report", "--out", "out"], dir.path());
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 18);
}

#[test]
fn missing_ingested_pseudo_labels_exit_3() {
    let dir = workspace("[pseudo]\nsource = \"ingested\"\n");
    fs::remove_file(dir.path().join("ds/pseudo.csv")).unwrap();
    let o = run(&["ablate", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = workspace("[baseline]\ndropout = 0.5\n");
    let o = run(&["ablate", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("baseline.dropout"));

    let dir = workspace("");
    let o = run(&["train", "--config", "run.toml", "--out", "out", "--strategy", "S2:Type"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["train", "--config", "run.toml", "--out", "out", "--filter", "Author"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_writes_one_checkpoint_per_category() {
    let dir = workspace("");
    let o = run(&["train", "--config", "run.toml", "--out", "out", "--strategy", "Sall"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert_eq!(fs::read_dir(out.join("checkpoints")).unwrap().count(), 4);
    let ckpt = fs::read(out.join("checkpoints/Type.gbmd")).unwrap();
    assert_eq!(&ckpt[..4], b"GBMD");
    let history = fs::read_to_string(out.join("history/Author.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("iteration,train_loss,val_loss"));
    assert!(lines.count() <= 30);
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["tasks"].as_array().unwrap().len(), 4);
}

#[test]
fn early_stopping_is_recorded() {
    let dir = workspace("");
    let cfg = dir.path().join("run.toml");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("lr = 0.01\nmax_iterations = 30", "lr = 0.5\nmax_iterations = 400\npatience = 3");
    fs::write(&cfg, text).unwrap();
    let o = run(&["train", "--config", "run.toml", "--out", "out", "--strategy", "S1:Type"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/metrics.json")).unwrap()).unwrap();
    for task in metrics["tasks"].as_array().unwrap() {
        let stopped = task["stopped_at"].as_u64().unwrap();
        assert!(stopped < 400, "{task}");
        assert_eq!(task["iterations"].as_u64().unwrap(), stopped);
    }
}

#[test]
fn divergent_training_exits_4_with_the_iteration() {
    let dir = workspace("");
    let cfg = dir.path().join("run.toml");
    let text = fs::read_to_string(&cfg).unwrap().replace("lr = 0.01", "lr = 1e300");
    fs::write(&cfg, text).unwrap();
    let o = run(&["train", "--config", "run.toml", "--out", "out", "--strategy", "S0"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("iteration"), "{}", stderr(&o));
}
