use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bfchart_cli::data::{format_data, parse_data};
use bfchart_cli::report::RunReport;

fn bfchart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfchart"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fitted(dir: &Path) {
    let o = bfchart(dir, &["simulate", "--scenario", "in_control", "-n", "300", "--seed", "21", "--out", "hist.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = bfchart(
        dir,
        &["fit", "hist.csv", "--estimate-target", "--reps", "2000", "--seed", "4", "--out", "model.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn simulate_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(dir.path(), &["simulate", "--scenario", "in_control", "-n", "1000", "--seed", "7", "--out", "a.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(text.lines().next(), Some("y1,y2"));
    assert!(!text.contains('\r'));
}

#[test]
fn simulate_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (out, seed) in [("a.csv", "7"), ("b.csv", "7"), ("c.csv", "8")] {
        let o = bfchart(dir.path(), &["simulate", "--scenario", "cov_shift", "-n", "50", "--seed", seed, "--out", out]);
        assert_eq!(code(&o), 0);
    }
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn simulated_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [&[][..], &["--with-t"][..]] {
        let mut args = vec!["simulate", "--dwr", "0.6", "-n", "40", "--seed", "3", "--out", "d.csv"];
        args.extend_from_slice(extra);
        assert_eq!(code(&bfchart(dir.path(), &args)), 0);
        let text = fs::read_to_string(dir.path().join("d.csv")).unwrap();
        let data = parse_data(&text).unwrap();
        assert_eq!(data.rows.len(), 40);
        assert_eq!(format_data(&data.columns, &data.rows, data.t.is_some()), text);
    }
}

#[test]
fn unknown_scenario_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(dir.path(), &["simulate", "--scenario", "sideways"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sideways"));
    assert_eq!(code(&bfchart(dir.path(), &["simulate", "--scenario", "all"])), 2);
}

#[test]
fn lbf_study_writes_histograms_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(dir.path(), &["simulate", "--scenario", "all", "--lbf", "--out-dir", "study", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let study = dir.path().join("study");
    for name in ["in_control", "mean_shift", "cov_shift", "both_shift"] {
        let h = parse_data(&fs::read_to_string(study.join(format!("lbf_{name}.csv"))).unwrap()).unwrap();
        assert_eq!(h.rows.len(), 40);
        let total: f64 = h.rows.iter().map(|r| r[2]).sum();
        assert_eq!(total, 1000.0);
    }
    let summary = fs::read_to_string(study.join("lbf_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(summary.starts_with("scenario,n,mean,std_error,skewness"));
}

#[test]
fn fit_needs_a_target() {
    let dir = tempfile::tempdir().unwrap();
    bfchart(dir.path(), &["simulate", "--scenario", "in_control", "-n", "100", "--out", "d.csv"]);
    let o = bfchart(dir.path(), &["fit", "d.csv"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn fit_reports_parse_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n3,x4\n").unwrap();
    let o = bfchart(dir.path(), &["fit", "bad.csv", "--estimate-target"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3, column 2"), "{}", stderr(&o));
}

#[test]
fn degenerate_fit_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..60).map(|_| "1.5,2.5\n").collect();
    fs::write(dir.path().join("flat.csv"), format!("a,b\n{rows}")).unwrap();
    fs::write(
        dir.path().join("target.json"),
        r#"{"mu": [0.0, 0.0], "v": {"dim": [2, 2], "data": [1.0, 0.0, 0.0, 1.0]}}"#,
    )
    .unwrap();
    let o = bfchart(dir.path(), &["fit", "flat.csv", "--target-file", "target.json", "--c", "3"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = bfchart(dir.path(), &["fit", "flat.csv", "--estimate-target", "--c", "3"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn fit_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    let first = fs::read(dir.path().join("model.json")).unwrap();
    fitted(dir.path());
    assert_eq!(fs::read(dir.path().join("model.json")).unwrap(), first);
    let o = bfchart(
        dir.path(),
        &["fit", "hist.csv", "--estimate-target", "--reps", "2000", "--seed", "5", "--out", "other.json"],
    );
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(dir.path().join("other.json")).unwrap(), first);
}

#[test]
fn monitor_in_control_stream_is_quiet() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    bfchart(dir.path(), &["simulate", "--scenario", "in_control", "-n", "30", "--seed", "22", "--out", "live.csv"]);
    let o = bfchart(dir.path(), &["monitor", "live.csv", "--model", "model.json", "--out", "r.json", "--plot", "c.svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(report.signals.is_empty());
    assert_eq!(report.points.len(), 30);
    assert_eq!(report.points[0].t, report.config.n_phase1 + 1);
    let model = fs::read(dir.path().join("model.json")).unwrap();
    assert_eq!(report.metadata.model_sha256, bfchart_cli::sha256_hex(&model));
    let svg = fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("Phase II"));
}

#[test]
fn monitor_flags_injected_spike() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    bfchart(dir.path(), &["simulate", "--scenario", "in_control", "-n", "30", "--seed", "22", "--out", "live.csv"]);
    let text = fs::read_to_string(dir.path().join("live.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[11] = "40,-40".into();
    fs::write(dir.path().join("spike.csv"), lines.join("\n") + "\n").unwrap();
    let o = bfchart(dir.path(), &["monitor", "spike.csv", "--model", "model.json", "--out", "r.json"]);
    assert_eq!(code(&o), 10, "{}", stderr(&o));
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report.signals.first(), Some(&(report.config.n_phase1 + 11)));
}

#[test]
fn monitor_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    bfchart(dir.path(), &["simulate", "--scenario", "both_shift", "-n", "80", "--seed", "23", "--out", "live.csv"]);
    for out in ["a.json", "b.json"] {
        bfchart(dir.path(), &["monitor", "live.csv", "--model", "model.json", "--out", out]);
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn monitor_rejects_other_schema() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    let model = fs::read_to_string(dir.path().join("model.json")).unwrap();
    fs::write(dir.path().join("v99.json"), model.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1)).unwrap();
    let o = bfchart(dir.path(), &["monitor", "hist.csv", "--model", "v99.json"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    fs::write(dir.path().join("junk.json"), "{\"schema_version\": 1}").unwrap();
    assert_eq!(code(&bfchart(dir.path(), &["monitor", "hist.csv", "--model", "junk.json"])), 4);
}

#[test]
fn monitor_rejects_wrong_width() {
    let dir = tempfile::tempdir().unwrap();
    fitted(dir.path());
    fs::write(dir.path().join("one.csv"), "a\n1\n2\n").unwrap();
    assert_eq!(code(&bfchart(dir.path(), &["monitor", "one.csv", "--model", "model.json"])), 2);
}

#[test]
fn calibrate_shewhart_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(dir.path(), &["calibrate", "--lambda", "1", "--phi", "0", "--reps", "20000", "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    let c: f64 = out.lines().next().unwrap().trim_start_matches("c = ").parse().unwrap();
    assert!((c - 3.0).abs() < 0.05, "{out}");
    assert!(stderr(&o).is_empty());

    let o = bfchart(dir.path(), &["calibrate", "--lambda", "0.05", "--phi", "0.1", "--reps", "100"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn calibrate_bracket_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(dir.path(), &["calibrate", "--lambda", "1", "--phi", "0", "--arl", "1.5", "--reps", "500"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn calibrate_grid_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfchart(
        dir.path(),
        &["calibrate", "--grid-lambda", "0.1,1", "--grid-phi", "0,0.2", "--reps", "2000", "--table", "grid.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
}
