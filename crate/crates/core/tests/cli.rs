use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn crsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crsp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn sbm_pipeline(out: &Path) -> Output {
    crsp(&["pipeline", "--sbm", "100,2,10,0.9,3", "--seed", "7", "--out", out.to_str().unwrap()])
}

#[test]
fn sbm_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result = sbm_pipeline(&out);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    for name in ["delta.csv", "coords.csv", "labels.csv", "node_ids.csv", "config.json", "metrics.json", "timing.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    assert!(!out.join("PARTIAL").exists());
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let ccr = metrics["ccr"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&ccr));
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(sbm_pipeline(&a).status.success());
    assert!(sbm_pipeline(&b).status.success());
    for name in ["delta.csv", "labels.csv", "coords.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn huge_beta_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result = crsp(&["pipeline", "--sbm", "60,2,10,0.9,2", "--beta", "1e6", "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(out.join("PARTIAL").exists());
}

#[test]
fn invalid_parameters_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result = crsp(&["pipeline", "--sbm", "60,2,10,0.9,2", "--beta=-1", "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("beta"));
    let result = crsp(&["pipeline", "--sbm", "60,2,10", "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_manifest_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = dir.path().join("run");
    let result = crsp(&["pipeline", "--manifest", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(4));
}

#[test]
fn staged_commands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let generated = crsp(&["generate", "swissroll", "--n", "120", "--seed", "2", "--format", "triplets", "--out", &d("data")]);
    assert!(generated.status.success(), "{}", String::from_utf8_lossy(&generated.stderr));
    let manifest = String::from_utf8(generated.stdout).unwrap().trim().to_string();
    let steps: [&[&str]; 3] = [
        &["dissimilarity", "--manifest", &manifest, "--beta", "0.05", "--cull", "--out", &d("delta.csv")],
        &["embed", "--delta", &d("delta.csv"), "--dims", "3", "--out", &d("coords.csv")],
        &["cluster", "--delta", &d("delta.csv"), "--k", "3", "--out", &d("pred.csv")],
    ];
    for args in steps {
        let r = crsp(args);
        assert!(r.status.success(), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
    }
    let coords = fs::read_to_string(d("coords.csv")).unwrap();
    assert_eq!(coords.lines().next().unwrap().split(',').count(), 3);
    let eval = crsp(&["evaluate", "--pred", &d("pred.csv"), "--truth", &d("pred.csv")]);
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(report["ccr"], 100.0);
}
