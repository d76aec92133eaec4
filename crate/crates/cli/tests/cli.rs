use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use hhpim::workload::{Scenario, TaskStream};
use hhpim_cli::{cmd_compare, cmd_gen_workload, cmd_lut, cmd_verify, CliError, ExperimentSpec, VerifyOptions};

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        models: vec!["mobilenetv2".into()],
        slices: 12,
        ..ExperimentSpec::default()
    }
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn hhpim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hhpim"))
}

#[test]
fn lut_rows_are_normalized_to_the_peak() {
    let dir = tempfile::tempdir().unwrap();
    let files = cmd_lut(&small_spec(), dir.path()).unwrap();
    assert_eq!(files.len(), 1);
    let rows = data_rows(&files[0]);
    assert_eq!(
        rows[0][..5],
        ["t_index", "t_constraint_ns", "feasible", "E_task_pJ", "E_task_norm"]
    );
    let body = &rows[1..];
    assert_eq!(body[0][2], "0", "grid starts in the infeasible region");
    assert!(body[0][3].is_empty());
    let peak = body.iter().find(|r| r[2] == "1").unwrap();
    assert_eq!(peak[4], "1");
    let last = body.last().unwrap();
    assert_eq!(last[7], "100.0000", "relaxed row keeps everything in LP-MRAM");
    for r in body.iter().filter(|r| r[2] == "1") {
        let total: f64 = r[5..9].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((total - 100.0).abs() < 1e-2);
    }
}

#[test]
fn compare_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_compare(&small_spec(), dir.path()).unwrap();

    let savings = data_rows(&dir.path().join("savings.csv"));
    assert_eq!(savings.len() - 1, 6 * 3, "one row per case and baseline");

    // Totals equal the per-slice sums in the trace file.
    let traces = data_rows(&dir.path().join("traces.csv"));
    let col = |name: &str| traces[0].iter().position(|c| c == name).unwrap();
    let (arch, sc, e) = (col("arch"), col("scenario"), col("E_slice_pJ"));
    let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
    for r in &traces[1..] {
        *sums.entry((r[arch].clone(), r[sc].clone())).or_default() += r[e].parse::<f64>().unwrap();
    }
    let totals = data_rows(&dir.path().join("totals.csv"));
    assert_eq!(totals.len() - 1, 6 * 4);
    for r in &totals[1..] {
        let total: f64 = r[3].parse().unwrap();
        let summed = sums[&(r[2].clone(), r[1].clone())];
        assert!((total - summed).abs() <= 1e-9 * total, "{r:?}: {total} vs {summed}");
    }

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], summary.config_hash.as_str());
    assert_eq!(json["seed"], 42);
    for name in ["traces.csv", "totals.csv", "savings.csv"] {
        let head = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(head.starts_with(&format!("# config_hash={} seed=42\n", summary.config_hash)));
    }
}

#[test]
fn self_comparison_saves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        archs: vec!["hh-pim".into(), "hh-pim".into()],
        scenarios: vec![Scenario::Case6],
        ..small_spec()
    };
    let summary = cmd_compare(&spec, dir.path()).unwrap();
    assert_eq!(summary.savings_pct("mobilenetv2", Scenario::Case6, "HH-PIM"), Some(0.0));
}

#[test]
fn config_hash_tracks_the_spec() {
    let a = small_spec().resolve().unwrap().config_hash();
    assert_eq!(a, small_spec().resolve().unwrap().config_hash());
    let b = ExperimentSpec {
        seed: 7,
        ..small_spec()
    }
    .resolve()
    .unwrap()
    .config_hash();
    assert_ne!(a, b);
}

#[test]
fn spec_files_report_where_they_break() {
    let spec = ExperimentSpec::from_toml("models = [\"resnet-18\"]\nslices = 20\nseed = 3\n").unwrap();
    assert_eq!((spec.slices, spec.seed, spec.models.len()), (20, 3, 1));
    match ExperimentSpec::from_toml("slices = 20\nseed = \"three\"\n") {
        Err(e @ CliError::Config(_)) => {
            assert!(e.to_string().contains("line 2"), "{e}");
            assert_eq!(e.exit_code(), 3);
        }
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(ExperimentSpec::from_toml("slicez = 1\n").is_err());
}

#[test]
fn workload_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = cmd_gen_workload(Scenario::Case6, 30, 10, 5, &dir.path().join("w.csv")).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# config_hash="));
    let stream = TaskStream::read_csv(text.as_bytes()).unwrap();
    assert_eq!(stream, hhpim::workload::generate(Scenario::Case6, 30, 10, 5).unwrap());
}

#[test]
fn verify_passes_and_catches_a_perturbation() {
    let report = cmd_verify(&VerifyOptions::default());
    assert!(report.passed(), "{:?}", report.failures);
    assert!(report.comparisons > 500);

    let broken = cmd_verify(&VerifyOptions {
        perturb: Some(0.05),
        ..VerifyOptions::default()
    });
    assert!(!broken.passed());

    let empty = cmd_verify(&VerifyOptions {
        trials: 0,
        ..VerifyOptions::default()
    });
    assert!(empty.passed());
    assert_eq!(empty.warnings.len(), 1);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| hhpim().args(args).output().unwrap().status.code();

    assert_eq!(code(&["verify", "--trials", "20"]), Some(0));
    assert_eq!(code(&["verify", "--trials", "20", "--perturb", "0.5"]), Some(5));
    assert_eq!(code(&["compare", "--slicez", "3"]), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = [1,\n").unwrap();
    let out = hhpim()
        .args(["compare", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(
        code(&["lut", "--arch", "no-such-arch", "--out", dir.path().to_str().unwrap()]),
        Some(3)
    );
    let lut_out = dir.path().join("lut");
    assert_eq!(
        code(&[
            "lut",
            "--model",
            "mobilenetv2",
            "--budget-fraction",
            "1.5",
            "--out",
            lut_out.to_str().unwrap()
        ]),
        Some(3)
    );
    assert_eq!(
        code(&[
            "compare",
            "--model",
            "mobilenetv2",
            "--slices",
            "3",
            "--headroom=-0.9",
            "--out",
            lut_out.to_str().unwrap()
        ]),
        Some(3)
    );
    assert_eq!(
        code(&[
            "lut",
            "--model",
            "mobilenetv2",
            "--resolution",
            "1000000",
            "--out",
            lut_out.to_str().unwrap()
        ]),
        Some(4)
    );
    assert_eq!(code(&["gen-workload", "--scenario", "case9"]), Some(2));
}
