//! End-to-end runs of the `spde-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

use spde_lab::cli::report::read_json_report;
use spde_lab::experiments::{ExperimentReport, LowerBoundReport};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-lab"))
        .current_dir(dir)
        .env_remove("SPDE_LAB_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL: [&str; 4] = ["model.modes=6", "grid.N=[4,8,16]", "grid.N_ref=128", "mc.samples=200"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL).collect()
}

#[test]
fn lower_bound_defaults_write_gap_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["lower-bound"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("lower-bound.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,exact_gap,lower_bound"));
    let rows: Vec<Vec<f64>> = lines
        .by_ref()
        .take_while(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[1] >= r[2]));
    let footer = csv.lines().find(|l| l.starts_with("# order=")).unwrap();
    let order: f64 = footer.split_whitespace().nth(1).unwrap()["order=".len()..].parse().unwrap();
    assert!((order - 0.5).abs() < 0.1, "{footer}");
    assert!(csv.contains("# config model.modes=2000"));
}

#[test]
fn weak_rate_at_reference_only_has_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["weak-rate", "model.modes=4", "grid.N=[64]", "grid.N_ref=64", "mc.samples=10", "--format", "json"],
    );
    assert_eq!(code(&o), 0);
    let r: ExperimentReport = read_json_report(&dir.path().join("weak-rate.json")).unwrap();
    assert_eq!(r.points.len(), 1);
    assert_eq!(r.points[0].estimate, 0.0);
    assert!(r.fitted_order.is_none());
    assert!(r.warnings.iter().any(|w| w.contains("fit")));
}

#[test]
fn reruns_are_byte_identical_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["strong-rate", "--seed", "17", "--out", "a.csv", "--threads", "1"]);
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let first = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(first, std::fs::read(dir.path().join("a.csv")).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_spde-lab"))
        .current_dir(dir.path())
        .env("SPDE_LAB_THREADS", "3")
        .args(with_small(&["strong-rate", "--seed", "17", "--out", "a.csv"]))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(first, std::fs::read(dir.path().join("a.csv")).unwrap());
}

#[test]
fn report_embeds_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &with_small(&["weak-rate", "--config", "run.toml"]));
    assert_eq!(code(&o), 4, "missing config file is an I/O failure");
    std::fs::write(dir.path().join("run.toml"), "scheme = \"linear-implicit-euler\"\n[model]\nkind = \"chc\"\n").unwrap();
    let o = run(dir.path(), &with_small(&["weak-rate", "--config", "run.toml", "--format", "json"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: ExperimentReport = read_json_report(&dir.path().join("weak-rate.json")).unwrap();
    assert_eq!(r.config["model.kind"], "chc");
    assert_eq!(r.config["scheme"], "linear-implicit-euler");
    assert_eq!(r.config["mc.samples"], "200");
    assert_eq!(r.config["functional"], "exp_neg_sq_norm");
    assert_eq!(r.points.len(), 3);
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["weak-rate", "mc.sampels=5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sampels"));
    assert_eq!(code(&run(dir.path(), &["weak-rate", "grid.N=[12]"])), 2);
    assert_eq!(code(&run(dir.path(), &["weak-rate", "--threads", "zero"])), 2);
    assert_eq!(code(&run(dir.path(), &["no-such-command"])), 2);
    assert_eq!(code(&run(dir.path(), &["oracle-check", "model.kind=anderson"])), 2);
}

#[test]
fn unwritable_report_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["lower-bound", "model.modes=10", "--out", "missing/dir/lb.csv"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn acceptance_checks_map_to_0_or_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["oracle-check", "model.modes=16", "grid.N=[8]", "grid.N_ref=8", "mc.samples=3000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    // Three samples give a noisy standard error; this seed lands outside the band.
    let o = run(
        dir.path(),
        &["oracle-check", "model.modes=1", "grid.N=[1]", "grid.N_ref=1", "mc.samples=3", "--seed", "0"],
    );
    assert_eq!(code(&o), 3);
    let o = run(
        dir.path(),
        &["perturbation-check", "model.modes=8", "perturbation.N=16", "perturbation.seeds=2", "mc.samples=50"],
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn simulate_round_trips_noise_file() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "model.modes=5", "grid.N=[32]", "--seed", "4"];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["simulate.noise_out=\"w.bin\"", "--out", "a.csv"]);
    assert_eq!(code(&run(dir.path(), &a)), 0);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["simulate.noise_in=\"w.bin\"", "--out", "b.csv"]);
    assert_eq!(code(&run(dir.path(), &b)), 0);
    let table = |p: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(p))
            .unwrap()
            .lines()
            .take_while(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    let ta = table("a.csv");
    assert_eq!(ta.len(), 34);
    assert_eq!(ta[0], "step,t,c0,c1,c2,c3,c4");
    assert_eq!(ta, table("b.csv"));
}

#[test]
fn lower_bound_json_mirrors_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["lower-bound", "lower_bound.quantity=weak-gap", "model.modes=200", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r: LowerBoundReport = read_json_report(&dir.path().join("lower-bound.json")).unwrap();
    assert_eq!(r.quantity, "weak-gap");
    assert!(r.bound_holds);
}
