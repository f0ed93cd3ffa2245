use std::path::Path;
use std::process::{Command, Output};

fn softcoap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softcoap"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOFTCOAP_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const SMALL: &str = "[experiment]
name = \"small\"
sweep = \"n_sensors\"
values = [2]
modes = [\"single_ap\", \"co_ap\", \"soft_co_ap\"]

[system]
rounds = 300

[decode]
p_primary = 0.6
p_secondary = 0.8
p_joint = 0.5
";

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("min.toml"), "[experiment]\n").unwrap();
    let o = softcoap(dir.path(), &["validate", "min.toml"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let out = text(&o.stdout);
    assert!(out.contains("slot_ms = 1.2"), "{out}");
    assert!(out.contains("warmup_rounds = 10"), "{out}");
    assert!(out.contains("name = \"min\""), "{out}");
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[system]\nm = 9\nslot_ms = -1\ntypo = 3\n").unwrap();
    let o = softcoap(dir.path(), &["validate", "bad.toml"]);
    assert_eq!(code(&o), 1);
    let err = text(&o.stderr);
    for key in ["system.m", "system.slot_ms", "system.typo"] {
        assert!(err.contains(key), "{err}");
    }
    assert_eq!(code(&softcoap(dir.path(), &["validate", "missing.toml"])), 1);
    assert_eq!(code(&softcoap(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&softcoap(dir.path(), &["recipe", "nope"])), 1);
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("short.csv"), "0,0,0,1,1,,,,,,,,\n").unwrap();
    std::fs::write(
        dir.path().join("t.toml"),
        "[experiment]\nmodes = [\"co_ap\"]\n[system]\nn_sensors = 1\nrounds = 50\n\
         [decode]\nsource = \"trace\"\nfile = \"short.csv\"\n",
    )
    .unwrap();
    let o = softcoap(dir.path(), &["run", "t.toml"]);
    assert_eq!(code(&o), 2, "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("no row for round 1"));
}

#[test]
fn degenerate_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = softcoap(dir.path(), &["run", "small.toml"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let out = dir.path().join("results/small");
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    for f in ["manifest.toml", "config.toml", "per_sensor.csv", "single_ap.dat", "soft_co_ap_m4.dat"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    // The echoed config reproduces the run.
    let again = softcoap(&out, &["validate", "config.toml"]);
    assert_eq!(code(&again), 0, "{}", text(&again.stderr));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL.replace("values = [2]", "values = [1, 2, 3]")).unwrap();
    let csv = || std::fs::read(dir.path().join("results/small/results.csv")).unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_softcoap"))
        .args(["run", "small.toml"])
        .current_dir(dir.path())
        .env("SOFTCOAP_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let one = csv();
    assert_eq!(code(&softcoap(dir.path(), &["--workers", "3", "run", "small.toml"])), 0);
    assert_eq!(csv(), one);
    assert_eq!(code(&softcoap(dir.path(), &["--sequential", "run", "small.toml"])), 0);
    assert_eq!(csv(), one);
}

#[test]
fn trace_writes_table_and_replayable_traces() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = softcoap(dir.path(), &["trace", "small.toml"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let traces = dir.path().join("results/small/traces");
    let table = std::fs::read_to_string(traces.join("probabilities.csv")).unwrap();
    assert!(table.starts_with("x,class,n_packets"), "{table}");
    assert!(traces.join("trace_x2.csv").is_file());

    let replay = SMALL
        .replace("name = \"small\"", "name = \"replay\"")
        .replace("p_primary = 0.6\np_secondary = 0.8\np_joint = 0.5\n", "source = \"trace\"\nfile = \"results/small/traces/trace_x2.csv\"\n");
    std::fs::write(dir.path().join("replay.toml"), replay).unwrap();
    assert_eq!(code(&softcoap(dir.path(), &["run", "small.toml"])), 0);
    let o = softcoap(dir.path(), &["run", "replay.toml"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let aoi = |name: &str| {
        let csv = std::fs::read_to_string(dir.path().join(format!("results/{name}/results.csv"))).unwrap();
        let row: Vec<String> = csv.lines().nth(1).unwrap().split(',').map(String::from).collect();
        row[row.len() - 5..].to_vec()
    };
    assert_eq!(aoi("small"), aoi("replay"));
}

#[test]
fn oracle_battery_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = softcoap(dir.path(), &["oracle", "--instances", "6"]);
    assert_eq!(code(&o), 0, "{}{}", text(&o.stdout), text(&o.stderr));
    assert!(text(&o.stdout).contains("6 cases"));

    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = softcoap(dir.path(), &["oracle", "small.toml"]);
    assert_eq!(code(&o), 0, "{}{}", text(&o.stdout), text(&o.stderr));
}

#[test]
fn recipes_list_and_print() {
    let dir = tempfile::tempdir().unwrap();
    let o = softcoap(dir.path(), &["recipe"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o.stdout).contains("fig_aoi_vs_snr"));
    let o = softcoap(dir.path(), &["recipe", "fig_multi_ap"]);
    assert!(text(&o.stdout).contains("sweep = \"n_aps\""));
}
