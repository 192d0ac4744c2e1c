mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::single_hop;
use dcc_sim::config::{PriorityScheme, ScenarioConfig};
use dcc_sim::control::ControllerMode;
use dcc_sim::export::{
    export, read_summary, read_tables, report, Tables, CBR_FILE, DELTA_FILE, SATISFACTION_FILE,
    SUMMARY_FILE,
};
use dcc_sim::run;

const FILES: [&str; 4] = [CBR_FILE, DELTA_FILE, SATISFACTION_FILE, SUMMARY_FILE];

fn quick(duration: f64) -> ScenarioConfig {
    let mut c = single_hop(ControllerMode::Dpa, PriorityScheme::Differentiated);
    c.duration_s = duration;
    c.warmup_s = 1.0;
    c
}

fn dcc_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcc-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const QUICK_TOML: &str = r#"
scenario = "single_hop"
mode = "dpa"
priorities = "differentiated"
duration_s = 4.0
warmup_s = 1.0
"#;

#[test]
fn report_reproduces_summary_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let summary = export(&run(&quick(6.0)).unwrap(), dir.path()).unwrap();
    assert_eq!(read_summary(dir.path()).unwrap(), summary);
    assert_eq!(report(dir.path()).unwrap(), summary.aggregates);
    assert!(summary.aggregates.steady_cbr.is_some());
}

#[test]
fn tables_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&quick(3.0)).unwrap();
    export(&m, dir.path()).unwrap();
    assert_eq!(read_tables(dir.path()).unwrap(), Tables::from_metrics(&m));
}

#[test]
fn identical_runs_export_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export(&run(&quick(3.0)).unwrap(), a.path()).unwrap();
    export(&run(&quick(3.0)).unwrap(), b.path()).unwrap();
    for f in FILES {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn empty_run_exports_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let summary = export(&run(&quick(0.0)).unwrap(), dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join(CBR_FILE)).unwrap(),
        "time_s,vehicle_id,cbr\n"
    );
    assert_eq!(
        fs::read_to_string(dir.path().join(DELTA_FILE)).unwrap(),
        "time_s,vehicle_id,vehicle_type,delta\n"
    );
    assert!(summary.aggregates.cbr_percentiles.is_empty());
    assert!(summary.aggregates.steady_cbr.is_none());
    assert_eq!(report(dir.path()).unwrap(), summary.aggregates);
}

#[test]
fn exported_values_have_nine_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    export(&run(&quick(2.0)).unwrap(), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join(CBR_FILE)).unwrap();
    for line in text.lines().skip(1) {
        let cbr = line.rsplit(',').next().unwrap();
        let digits = cbr.trim_start_matches("0.").trim_start_matches('0');
        assert!(
            digits.chars().filter(char::is_ascii_digit).count() <= 9,
            "{cbr}"
        );
    }
}

#[test]
fn cli_simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TOML);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let sim = dcc_sim(&[
        "simulate", "--config", &config, "--seed", "3", "--out", out_s,
    ]);
    assert!(
        sim.status.success(),
        "{}",
        String::from_utf8_lossy(&sim.stderr)
    );
    for f in FILES {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(read_summary(&out).unwrap().seed, 3);

    let json = dcc_sim(&["report", "--in", out_s]);
    assert!(json.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(
        parsed,
        serde_json::to_value(read_summary(&out).unwrap().aggregates).unwrap()
    );

    let csv = dcc_sim(&["report", "--in", out_s, "--format", "csv"]);
    assert!(csv.status.success());
    assert!(String::from_utf8(csv.stdout)
        .unwrap()
        .starts_with("time_s,p5,p25,p50,p75,p95\n"));
}

#[test]
fn cli_sweep_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TOML);
    let out = dir.path().join("sweep");
    let status = dcc_sim(&[
        "sweep",
        "--config",
        &config,
        "--seeds",
        "1..3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    for seed in 1..=3u64 {
        assert_eq!(
            read_summary(&out.join(format!("seed_{seed}")))
                .unwrap()
                .seed,
            seed
        );
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");

    let r = dcc_sim(&["report", "--in", missing.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error:"));

    assert_eq!(dcc_sim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        dcc_sim(&["sweep", "--config", "x.toml", "--seeds", "5..1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(dcc_sim(&["--version"]).status.code(), Some(0));
    assert_eq!(dcc_sim(&["--help"]).status.code(), Some(0));
}

#[test]
fn cli_names_the_offending_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "scenario = \"single_hop\"\nmode = \"dpa\"\n[controller]\nalpha = 2.0\n",
    );
    let r = dcc_sim(&[
        "simulate",
        "--config",
        &bad,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("alpha"));

    let unknown = write_config(
        dir.path(),
        "scenario = \"single_hop\"\nmode = \"dpa\"\nbogus = 1\n",
    );
    let r = dcc_sim(&[
        "simulate",
        "--config",
        &unknown,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("bogus"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            dcc_sim::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
