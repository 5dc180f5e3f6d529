//! End-to-end runs of the four subcommands against the bundled data.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moldesc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn featurize_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "featurize".to_string(),
        "--sdf".into(),
        path_str(&data("demo.sdf")),
        "--values".into(),
        path_str(&data("demo_values.csv")),
        "--dict".into(),
        path_str(&dir.join("dict.json")),
        "--features".into(),
        path_str(&dir.join("features.csv")),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&args)
}

#[test]
fn featurize_demo_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = featurize_into(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("featurized 13 molecules"), "{stdout}");
    let features = std::fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 14); // header + 13 rows
    assert!(features.lines().next().unwrap().contains("cc:"));
    assert!(dir.path().join("features.csv.skips.csv").exists());

    // Rerun: byte-identical outputs.
    let dir2 = tempfile::tempdir().unwrap();
    let out2 = featurize_into(dir2.path(), &[]);
    assert!(out2.status.success());
    for name in ["dict.json", "features.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(dir2.path().join(name)).unwrap(),
            "{name} differs between reruns"
        );
    }
}

#[test]
fn featurize_without_cc_drops_the_cc_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = featurize_into(dir.path(), &["--cc", "off"]);
    assert!(out.status.success());
    let features = std::fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert!(!features.lines().next().unwrap().contains("cc:"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("K_CC = 0"), "{stdout}");
}

#[test]
fn featurize_missing_values_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "featurize",
        "--sdf",
        &path_str(&data("demo.sdf")),
        "--values",
        &path_str(&dir.path().join("nope.csv")),
        "--dict",
        &path_str(&dir.path().join("dict.json")),
        "--features",
        &path_str(&dir.path().join("features.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_on_demo_features() {
    let dir = tempfile::tempdir().unwrap();
    assert!(featurize_into(dir.path(), &[]).status.success());
    let train = |tag: &str| {
        run(&[
            "train",
            "--features",
            &path_str(&dir.path().join("features.csv")),
            "--values",
            &path_str(&data("demo_values.csv")),
            "--model",
            &path_str(&dir.path().join(format!("model_{tag}.json"))),
            "--out",
            &path_str(&dir.path().join(format!("cv_{tag}.json"))),
            "--lambda",
            "0.1",
            "--seed",
            "7",
        ])
    };
    let out = train("a");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("median CV R^2"), "{stdout}");
    // Determinism across reruns with the same seed.
    assert!(train("b").status.success());
    let a = std::fs::read(dir.path().join("cv_a.json")).unwrap();
    let b = std::fs::read(dir.path().join("cv_b.json")).unwrap();
    assert_eq!(a, b);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model_a.json")).unwrap())
            .unwrap();
    assert_eq!(model["format"], "property-model-v1");
    assert_eq!(model["property"], "bp");
    assert_eq!(model["hyperplane"]["lambda"], 0.1);
}

#[test]
fn train_with_lambda_grid_records_the_winner() {
    let dir = tempfile::tempdir().unwrap();
    assert!(featurize_into(dir.path(), &[]).status.success());
    let out = run(&[
        "train",
        "--features",
        &path_str(&dir.path().join("features.csv")),
        "--values",
        &path_str(&data("demo_values.csv")),
        "--model",
        &path_str(&dir.path().join("model.json")),
        "--lambda-grid",
        "0.05,0.5",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap())
            .unwrap();
    let lambda = model["hyperplane"]["lambda"].as_f64().unwrap();
    assert!(lambda == 0.05 || lambda == 0.5, "{lambda}");
}

#[test]
fn infer_writes_lp_and_varmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "infer",
        "--spec",
        &path_str(&data("toy_spec.json")),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--lp",
        &path_str(&dir.path().join("toy.lp")),
        "--varmap",
        &path_str(&dir.path().join("toy.varmap.json")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("variables:") && stdout.contains("constraints:"),
        "{stdout}"
    );
    let lp = std::fs::read_to_string(dir.path().join("toy.lp")).unwrap();
    assert!(lp.starts_with('\\') && lp.ends_with("End\n"));
    assert!(dir.path().join("toy.varmap.json").exists());

    // Maximize objective shows up in the LP.
    let out = run(&[
        "infer",
        "--spec",
        &path_str(&data("toy_spec.json")),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--lp",
        &path_str(&dir.path().join("max.lp")),
        "--varmap",
        &path_str(&dir.path().join("max.varmap.json")),
        "--objective",
        "max",
    ]);
    assert!(out.status.success());
    let lp = std::fs::read_to_string(dir.path().join("max.lp")).unwrap();
    assert!(lp.contains("Maximize"));
}

#[test]
fn infer_rejects_infeasible_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = std::fs::read_to_string(data("toy_spec.json")).unwrap();
    let bad = spec.replace(
        r#""bounds": { "n": [4, 12] }"#,
        r#""bounds": { "n": [12, 4] }"#,
    );
    assert_ne!(spec, bad);
    let bad_path = dir.path().join("bad_spec.json");
    std::fs::write(&bad_path, bad).unwrap();
    let out = run(&[
        "infer",
        "--spec",
        &path_str(&bad_path),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--lp",
        &path_str(&dir.path().join("toy.lp")),
        "--varmap",
        &path_str(&dir.path().join("toy.varmap.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("infeasible bound n"), "{stderr}");
}

#[test]
fn decode_verify_accepts_the_bundled_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "decode-verify",
        "--solution",
        &path_str(&data("toy_solution.sol")),
        "--spec",
        &path_str(&data("toy_spec.json")),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--out",
        &path_str(&dir.path().join("decoded.sdf")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all checks passed"), "{stdout}");
    let sdf = std::fs::read_to_string(dir.path().join("decoded.sdf")).unwrap();
    assert!(sdf.contains("V2000"));
    assert!(dir.path().join("decoded.sdf.report.json").exists());
}

#[test]
fn decode_verify_flags_missing_variables() {
    let dir = tempfile::tempdir().unwrap();
    let sol = std::fs::read_to_string(data("toy_solution.sol")).unwrap();
    let truncated: String = sol.lines().skip(5).map(|l| format!("{l}\n")).collect();
    let bad_path = dir.path().join("bad.sol");
    std::fs::write(&bad_path, truncated).unwrap();
    let out = run(&[
        "decode-verify",
        "--solution",
        &path_str(&bad_path),
        "--spec",
        &path_str(&data("toy_spec.json")),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--out",
        &path_str(&dir.path().join("decoded.sdf")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decode_verify_exit_code_two_on_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    // Tighten the target window so eta = 8.5 falls outside.
    let out = run(&[
        "decode-verify",
        "--solution",
        &path_str(&data("toy_solution.sol")),
        "--spec",
        &path_str(&data("toy_spec.json")),
        "--model",
        &path_str(&data("toy_model.json")),
        "--dict",
        &path_str(&data("toy_dict.json")),
        "--out",
        &path_str(&dir.path().join("decoded.sdf")),
        "--ylb",
        "10.0",
        "--yub",
        "20.0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL property_range"), "{stdout}");
    assert!(dir.path().join("decoded.sdf.report.json").exists());
}
