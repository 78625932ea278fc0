use std::path::Path;
use std::process::{Command, Output};

fn uplink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uplink-aoi")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_light_load_at_five_db() {
    let dir = tempfile::tempdir().unwrap();
    let o = uplink(&["analyze", "--alpha", "0.05", "--theta-db", "5", "--eta", "4", "--eps", "1", "--classes", "10", "--out", arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    let peak = s["peak_aoi"].as_f64().unwrap();
    assert!((peak - 21.17).abs() < 0.05, "peak {peak}");
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "analyze");
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["equilibrium.csv", "ccdf.csv", "summary.json"]);
    assert_eq!(m["parameters"]["alpha"], 0.05);
}

#[test]
fn analyze_marks_unstable_classes() {
    let dir = tempfile::tempdir().unwrap();
    let o = uplink(&["analyze", "--alpha", "0.25", "--theta-db", "5", "--out", arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("equilibrium.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("class,d,stable,x0,mean_sojourn,peak_aoi"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    for (k, row) in rows.iter().enumerate() {
        let unbounded = row[5] == "inf";
        assert_eq!(unbounded, k < 8, "class {}: {row:?}", k + 1);
        assert_eq!(row[2] == "false", k < 8);
    }
    assert_eq!(json(&dir.path().join("summary.json"))["peak_aoi"], "inf");
}

#[test]
fn analyze_vanishing_load() {
    let dir = tempfile::tempdir().unwrap();
    let o = uplink(&["analyze", "--alpha", "0.0001", "--out", arg(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(json(&dir.path().join("summary.json"))["chi"].as_f64().unwrap() >= 0.999);
}

#[test]
fn non_convergence_exits_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = uplink(&["analyze", "--alpha", "0.3", "--max-iters", "2", "--tol", "1e-14", "--out", arg(dir.path())]);
    assert_eq!(code(&o), 2);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["converged"], false);
    assert_eq!(s["trajectory"].as_array().unwrap().len(), 3);
}

#[test]
fn parameter_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = arg(dir.path());
    assert_eq!(code(&uplink(&["analyze", "--alpha", "1.5", "--out", out])), 3);
    assert_eq!(code(&uplink(&["analyze", "--alpha", "0.1", "--theta", "1", "--theta-db", "0", "--out", out])), 3);
    assert_eq!(code(&uplink(&["analyze", "--out", out])), 3);
    assert_eq!(code(&uplink(&["simulate", "--alpha", "0.1", "--area-side", "2", "--out", out])), 3);
    assert_eq!(code(&uplink(&["frobnicate"])), 3);
    assert_eq!(code(&uplink(&["--help"])), 0);
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"alpha": 0.35, "theta-db": 0, "classes": 10}"#).unwrap();
    let out = dir.path().join("out");
    let o = uplink(&["analyze", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(code(&o), 0);
    let peak = json(&out.join("summary.json"))["peak_aoi"].as_f64().unwrap();
    assert!((peak - 7.34).abs() < 0.15, "peak {peak}");
}

const SMALL_SIM: [&str; 6] = ["--slots", "2000", "--realizations", "2", "--warmup-window", "500"];

#[test]
fn simulate_without_traffic_is_all_idle() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--alpha", "0", "--out", arg(dir.path())];
    args.extend(SMALL_SIM);
    assert_eq!(code(&uplink(&args)), 0);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["idle_fraction"], 1.0);
    assert_eq!(s["devices"], s["excluded_devices"]);
    assert!(s["peak_aoi"].is_null());
}

#[test]
fn simulate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let mut args = vec!["simulate", "--alpha", "0.2", "--seed", "7", "--jobs", "2", "--out", arg(d.path())];
        args.extend(SMALL_SIM);
        assert_eq!(code(&uplink(&args)), 0);
    }
    for f in ["ccdf.csv", "classes.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn compare_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let an = dir.path().join("an");
    assert_eq!(code(&uplink(&["analyze", "--alpha", "0.1", "--out", arg(&an)])), 0);
    let cmp = dir.path().join("cmp");
    let o = uplink(&["compare", "--analysis", arg(&an), "--simulation", arg(&an), "--out", arg(&cmp)]);
    assert_eq!(code(&o), 0);
    let c = json(&cmp.join("comparison.json"));
    assert_eq!(c["ccdf_sup_gap"], 0.0);
    assert_eq!(c["peak_aoi_rel_error"], 0.0);
    assert_eq!(c["pass"], true);
}

#[test]
fn compare_refuses_mismatched_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&uplink(&["analyze", "--alpha", "0.1", "--out", arg(&a)])), 0);
    assert_eq!(code(&uplink(&["analyze", "--alpha", "0.2", "--out", arg(&b)])), 0);
    let o = uplink(&["compare", "--analysis", arg(&a), "--simulation", arg(&b), "--out", arg(&dir.path().join("c"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn simulation_meta_distribution_matches_analysis_at_zero_db() {
    let dir = tempfile::tempdir().unwrap();
    let (an, sim) = (dir.path().join("an"), dir.path().join("sim"));
    assert_eq!(code(&uplink(&["analyze", "--alpha", "0.25", "--theta-db", "0", "--out", arg(&an)])), 0);
    // ~100 cells per realization: the realization-to-realization load swing
    // needs many realizations to average out
    let sim_args = ["simulate", "--alpha", "0.25", "--theta-db", "0", "--realizations", "200"];
    let mut args = sim_args.to_vec();
    args.extend(["--out", arg(&sim)]);
    assert_eq!(code(&uplink(&args)), 0);
    let cmp = dir.path().join("cmp");
    let o = uplink(&["compare", "--analysis", arg(&an), "--simulation", arg(&sim), "--out", arg(&cmp)]);
    assert!(matches!(code(&o), 0 | 1));
    let c = json(&cmp.join("comparison.json"));
    let gap = c["ccdf_sup_gap"].as_f64().unwrap();
    assert!(gap <= 0.05, "sup gap {gap}");
    assert_eq!(c["ccdf_pass"], true);
}

#[test]
fn sweep_finds_the_stability_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = uplink(&[
        "sweep", "--theta-db-list", "-5,0,5", "--alpha-start", "0.05", "--alpha-step", "0.02", "--alpha-stop", "0.65",
        "--out", arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let frontier = std::fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
    assert_eq!(frontier, "theta_db,stability_point\n-5,0.61\n0,0.35\n5,0.15\n");
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("theta_db,alpha,peak_aoi,mean_sojourn,all_stable\n-5,0.05,"));
    assert_eq!(sweep.lines().count(), 1 + 3 * 31);
    assert!(sweep.lines().any(|l| l.starts_with("5,0.25,inf,inf,false")));
}
