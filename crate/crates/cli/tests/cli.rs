use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ams_anomaly::features::{windowed_features, write_dataset_csv, Feature, FeatureRow, FeatureSelection, Label};
use ams_anomaly::waveforms::Waveform;
use tempfile::TempDir;

fn amsad(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amsad"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("run amsad")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TA: &str = r#"
experiment = "TA"
circuit = "vref_blocks"
n_samples_per_class = 20
"#;

#[test]
fn experiment_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("ta.toml"), TA).unwrap();
    for out in ["a", "b"] {
        let o = amsad(dir.path(), &["experiment", "--config", "ta.toml", "--seed", "1", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["report.csv", "report.txt"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(file)).unwrap(), "{file}");
    }
    let csv = fs::read_to_string(dir.path().join("a/report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("TA,vref_blocks,gmm,mean,output,none,false,"));
    assert!(csv.lines().nth(1).unwrap().ends_with(",1"));
}

#[test]
fn outputs_stay_under_out() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("ta.toml"), TA).unwrap();
    let o = amsad(dir.path(), &["featurize", "--config", "ta.toml", "--features", "variance", "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut top: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    top.sort();
    assert_eq!(top, ["o", "ta.toml"]);
    let features = fs::read_to_string(dir.path().join("o/features.csv")).unwrap();
    assert_eq!(features.lines().next(), Some("sample_id,label,window_index,f1"));
    assert_eq!(features.lines().count(), 41);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let dir = TempDir::new().unwrap();
    let o = amsad(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = amsad(dir.path(), &["detect", "--windows", "five"]);
    assert_eq!(o.status.code(), Some(1));
    for sub in ["simulate", "inject", "featurize", "fit", "select-centroids", "detect", "experiment", "suite", "report"] {
        let o = amsad(dir.path(), &[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    let help = String::from_utf8(amsad(dir.path(), &["inject", "--help"]).stdout).unwrap();
    assert!(help.contains("--rate <PERCENT>") && help.contains("(seconds)"), "{help}");
}

#[test]
fn runtime_errors_are_json_with_the_key() {
    let dir = TempDir::new().unwrap();
    let o = amsad(dir.path(), &["experiment", "--experiment", "Open", "--circuit", "vref_blocks"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["key"], "experiment");
    let o = amsad(dir.path(), &["experiment", "--experiment", "TA", "--circuit", "vref_blocks", "--n-per-class", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["key"], "n_samples_per_class");
    let o = amsad(dir.path(), &["suite"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(r#""key":"config""#));
}

const N: usize = 1500;
const DT: f64 = 20e-6 / N as f64;

/// Unit 250 kHz sinusoid, amplitude tripled inside window `burst` of 5. The
/// small per-id amplitude spread keeps training windows distinct.
fn burst(id: u64, burst: Option<usize>) -> Waveform {
    let scale = 1.0 + 0.01 * (id % 7) as f64;
    let samples = (0..N)
        .map(|i| {
            let amp = if burst == Some(i / (N / 5)) { 3.0 } else { 1.0 };
            scale * amp * (std::f64::consts::TAU * 250e3 * i as f64 * DT).sin()
        })
        .collect();
    Waveform::new("output", samples, DT).unwrap()
}

#[test]
fn detect_reports_a_fivefold_speedup_on_a_first_window_anomaly() {
    let dir = TempDir::new().unwrap();
    let sel = FeatureSelection::single(Feature::Variance);
    let mut rows = Vec::new();
    for id in 0..40u64 {
        let b = (id >= 20).then_some(0);
        for (k, values) in windowed_features(&burst(id, b), 5, &sel).unwrap().into_iter().enumerate() {
            let label = if b.is_some() { Label::Anomalous } else { Label::Normal };
            rows.push(FeatureRow { sample_id: id, label, window_index: k, values });
        }
    }
    write_dataset_csv(&rows, fs::File::create(dir.path().join("train.csv")).unwrap()).unwrap();
    burst(99, Some(0)).write_csv(fs::File::create(dir.path().join("sig.csv")).unwrap()).unwrap();
    burst(98, None).write_csv(fs::File::create(dir.path().join("clean.csv")).unwrap()).unwrap();

    let fit = ["fit", "--input", "train.csv", "--features", "variance", "--window-k", "5", "--algorithm", "kmeans", "--out", "m"];
    let o = amsad(dir.path(), &fit);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = amsad(
        dir.path(),
        &["detect", "--model", "m/model.json", "--input", "sig.csv", "clean.csv", "--windows", "5", "--early-stop", "--out", "d"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let detections = fs::read_to_string(dir.path().join("d/detections.csv")).unwrap();
    assert_eq!(
        detections,
        "sample_id,first_window,m,latency_s,speedup\n0,1,1,4e-6,5\n1,,5,2e-5,1\n"
    );
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["mean_speedup"], 3.0);
    assert_eq!(summary["detection_rate"], 0.5);

    let o = amsad(dir.path(), &["detect", "--model", "m/model.json", "--input", "sig.csv", "--early-stop", "--out", "d1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["mean_speedup"], 5.0);
    assert_eq!(summary["mean_latency_s"], 4e-6);

    let o = amsad(dir.path(), &["detect", "--model", "m/model.json", "--input", "sig.csv", "--windows", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(r#""key":"windows""#));
}

#[test]
fn select_centroids_rewrites_the_model() {
    let dir = TempDir::new().unwrap();
    let common = ["--experiment", "OmPfet", "--circuit", "opamp", "--features", "variance", "--n-per-class", "20", "--seed", "4"];
    let o = amsad(dir.path(), &[&["featurize", "--out", "f"][..], &common].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = amsad(dir.path(), &[&["fit", "--out", "m"][..], &common].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = amsad(dir.path(), &["select-centroids", "--model", "m/model.json", "--input", "f/features.csv", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("c/model.json")).unwrap()).unwrap();
    assert_eq!(model["model"]["algorithm"], "centroid");
    assert!(model["centroid_selection"].is_object());
    assert!(dir.path().join("c/centroids.json").exists());
}

#[test]
fn simulate_inject_and_report() {
    let dir = TempDir::new().unwrap();
    let o = amsad(dir.path(), &["simulate", "--experiment", "Short", "--circuit", "opamp", "--n-per-class", "10", "--out", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let labels = fs::read_to_string(dir.path().join("s/labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 21);
    let o = amsad(dir.path(), &["inject", "--input", "s/waveforms/output/0.csv", "--rate", "0.5", "--seed", "2", "--out", "i"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = fs::read_to_string(dir.path().join("i/injections.csv")).unwrap();
    assert_eq!(records.lines().count(), 9);

    fs::write(dir.path().join("ta.toml"), TA).unwrap();
    let o = amsad(dir.path(), &["experiment", "--config", "ta.toml", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = amsad(dir.path(), &["report", "--input", "r/report.csv", "r/report.csv", "--out", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("m/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("TA,gmm,false,8,0,"), "{summary}");
}
