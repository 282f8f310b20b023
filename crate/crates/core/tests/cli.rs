use std::path::Path;
use std::process::{Command, Output};

use abfnet::load_csv;

fn abfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abfnet"))
        .args(args)
        .output()
        .expect("spawn abfnet")
}

fn ok(args: &[&str]) -> Output {
    let out = abfnet(args);
    assert!(
        out.status.success(),
        "abfnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(path: &Path, years: &str, seed: &str) {
    ok(&["synth", "--years", years, "--seed", seed, "--out", p(path)]);
}

#[test]
fn synth_writes_full_record_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    synth(&a, "87", "3");
    synth(&b, "87", "3");
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1 + 87 * 12);
    assert!(text.starts_with("year,month,rainfall_mm\n1893,1,"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(load_csv(&a).unwrap().len(), 1044);
}

#[test]
fn synth_rejects_short_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = abfnet(&["synth", "--years", "3", "--out", p(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = abfnet(&["train", "--data", p(&missing), "--out-dir", p(dir.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nowhere.csv"), "{err}");
}

#[test]
fn bad_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    synth(&data, "10", "1");
    for extra in [
        ["--mode", "sideways"],
        ["--topology", "12,x,1"],
        ["--train-years", "1900-1890"],
        ["--beta", "-1"],
    ] {
        let mut args = vec!["train", "--data", p(&data), "--out-dir", p(dir.path())];
        args.extend(extra);
        assert!(!abfnet(&args).status.success(), "{extra:?}");
    }
}

#[test]
fn train_predict_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    synth(&data, "20", "2");
    for mode in ["batch", "online"] {
        let model = dir.path().join(mode);
        let m = p(&model);
        ok(&[
            "train", "--data", p(&data), "--out-dir", m, "--mode", mode, "--max-epochs", "30",
            "--train-years", "10", "--seed", "4", "--beta", "0.2", "--target-rmse", "0.01",
            "--topology", "12,5,1",
        ]);
        for f in ["model.abf", "model.norm", "rmse.csv", "summary.txt"] {
            assert!(model.join(f).is_file(), "{mode}: {f}");
        }
        let rmse = std::fs::read_to_string(model.join("rmse.csv")).unwrap();
        assert_eq!(rmse.lines().count(), 31);

        ok(&["predict", "--data", p(&data), "--out-dir", m]);
        let predicted = load_csv(model.join("predicted.csv")).unwrap();
        assert_eq!(predicted.len(), 240 - 49);
        assert_eq!(predicted.month_at(0), (1897, 2));

        let analysis = dir.path().join(format!("{mode}-analysis"));
        ok(&["analyze", "--data", p(&data), "--out-dir", p(&analysis), "--model-dir", m]);
        let metrics = std::fs::read_to_string(analysis.join("metrics.txt")).unwrap();
        assert!(metrics.contains("model_residual_fraction"));
        assert!(metrics.contains("drift_residual_fraction"));
    }
}

#[test]
fn analyze_rejects_series_without_training_period() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    synth(&data, "12", "2");
    ok(&[
        "train", "--data", p(&data), "--out-dir", p(dir.path()), "--max-epochs", "5",
        "--train-years", "6",
    ]);
    let other = dir.path().join("late.csv");
    ok(&["synth", "--years", "12", "--start-year", "1950", "--out", p(&other)]);
    let out = abfnet(&["analyze", "--data", p(&other), "--out-dir", p(dir.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("training start"), "{err}");
}
