use std::path::Path;
use std::process::{Command, Output};

use arofsim_cli::report::sha256_hex;

fn arofsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arofsim")).args(args).output().expect("spawn arofsim")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn csv_body(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema_version=1"));
    assert!(lines.next().unwrap().starts_with("# config_hash=sha256:"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn check_manifest(dir: &Path) -> serde_json::Value {
    let m: serde_json::Value = serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap();
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(format!("sha256:{}", sha256_hex(read(&dir.join("config.toml")).as_bytes())), hash);
    for f in m["files"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        if f["path"].as_str().unwrap().ends_with(".csv") {
            assert!(String::from_utf8(bytes).unwrap().contains(hash));
        }
    }
    m
}

#[test]
fn plan_reports_the_free_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = arofsim(&["plan", "--preset", "400G", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_body(&read(&dir.path().join("plan.csv")));
    assert_eq!(rows[0][0], "preset");
    let free = rows[0].iter().position(|c| c == "free_total_hz").unwrap();
    assert!(rows[1..].iter().all(|r| r[0] == "400G" && r[free] == "17540000000"));
    let m = check_manifest(dir.path());
    assert_eq!(m["command"], "plan");
}

#[test]
fn run_is_reproducible_and_complete() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out =
            arofsim(&["run", "--preset", "100G-topoA-200MHz", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ra = std::fs::read(a.path().join("result.json")).unwrap();
    let rb = std::fs::read(b.path().join("result.json")).unwrap();
    assert_eq!(ra, rb);
    let result: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(result["topology"], "A");
    assert_eq!(result["seed"], 3);
    assert!(result["evm_low"].as_f64().unwrap() < 8.0);

    let psd = csv_body(&read(&a.path().join("psd.csv")));
    assert_eq!(psd[0], ["freq_ghz", "psd_dbm_per_hz"]);
    assert!(psd.len() > 1000);
    let con = csv_body(&read(&a.path().join("constellation_low.csv")));
    assert_eq!(con[0], ["i", "q", "ref_i", "ref_q"]);
    // 128 subcarriers at 200 MHz, eight data symbols.
    assert_eq!(con.len() - 1, 128 * 8);
    let m = check_manifest(a.path());
    assert_eq!(m["seeds"], serde_json::json!([3]));
    assert_eq!(m["cells"][0]["status"], "ok");
}

#[test]
fn sweep_writes_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[sweep]\npresets = [\"100G\"]\ntopologies = [\"baseline\"]\nbandwidths = [\"200 mhz\", \"2.4 ghz\"]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = arofsim(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_body(&read(&out_dir.join("matrix.csv")));
    assert_eq!(rows[0][..7], ["preset", "topology", "bw_mhz", "evm_low_pct", "evm_high_pct", "q_db", "pass_3gpp"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][..3], ["100G", "baseline", "200"]);
    assert_eq!(rows[1][8], "ok");
    assert!(rows[2][8].starts_with("error: allocation infeasible"));
    let m = check_manifest(&out_dir);
    assert_eq!(m["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn failures_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let out = arofsim(&["run", "--preset", "100G-topoB-2400MHz", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "infeasible");
    assert!(dir.path().join("error.json").exists());
    let m = check_manifest(dir.path());
    assert!(m["cells"][0]["status"].as_str().unwrap().starts_with("error"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[coherent]\nchannel_width = \"50 ghz\"\noccupied_width = \"82.46 ghz\"\n").unwrap();
    let out = arofsim(&["plan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "contradiction");
    assert_eq!(err["error"]["key"], "coherent.occupied_width");

    let out = arofsim(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");

    let out = arofsim(&["plan", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn help_succeeds() {
    let out = arofsim(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["plan", "run", "sweep", "calibrate"] {
        assert!(text.contains(cmd));
    }
}
