//! End-to-end checks of the command-line driver: exit codes, config
//! validation, output determinism, and manifest integrity.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nhberry"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nhberry-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Every file named in the manifest exists with a matching checksum.
fn check_manifest(dir: &Path) {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run_manifest.json")).unwrap())
            .unwrap();
    let outputs = manifest["outputs"].as_array().expect("outputs array");
    assert!(!outputs.is_empty());
    for entry in outputs {
        let name = entry["file"].as_str().unwrap();
        let bytes = std::fs::read(dir.join(name)).unwrap();
        assert_eq!(
            entry["bytes"].as_u64().unwrap(),
            bytes.len() as u64,
            "{name} size"
        );
        let expect = entry["fnv1a64"].as_str().unwrap();
        assert_eq!(
            expect,
            format!("{:016x}", fnv1a64(&bytes)),
            "{name} checksum"
        );
    }
}

#[test]
fn loop_command_writes_summary_and_manifest() {
    let dir = tmp_dir("loop");
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["loop", "--kind", "RR", "--band", "+", "--z0", "1", "--z", "0.5", "--r", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert!(json["phase"]["re"].is_f64());
    check_manifest(&dir);
}

#[test]
fn config_file_fills_defaults_and_flags_override() {
    let dir = tmp_dir("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.conf");
    std::fs::write(&cfg_path, "kind = RR\nband = +\nz = 0.5\nr = 1\nz0 = 0\n").unwrap();
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--config"])
        .arg(&cfg_path)
        .args(["loop"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    // Hermitian reference loop: the principal phase is -π(1 - z/|R|).
    let expect = -std::f64::consts::PI * (1.0 - 0.5 / 1.25f64.sqrt());
    assert!((json["phase"]["re"].as_f64().unwrap() - expect).abs() < 1e-6);

    // A flag overrides the file value.
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--config"])
        .arg(&cfg_path)
        .args(["loop", "--r", "2"])
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert_eq!(json["r"].as_f64().unwrap(), 2.0);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tmp_dir("zeta");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("bad.conf");
    std::fs::write(&cfg_path, "zeta = 3\n").unwrap();
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--config"])
        .arg(&cfg_path)
        .args(["loop"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let json = stdout_json(&out);
    assert_eq!(json["error"]["kind"], "config");
    assert!(json["error"]["message"].as_str().unwrap().contains("zeta"));
}

#[test]
fn evolve_rejects_wrong_adiabatic_region() {
    let dir = tmp_dir("region");
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["evolve", "--z", "-0.5", "--band", "+", "--r", "1", "--omega", "0.0157"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert_eq!(json["error"]["kind"], "config");
    assert!(json["error"]["message"]
        .as_str()
        .unwrap()
        .contains("upper half-space"));
}

#[test]
fn identical_sweeps_are_byte_identical() {
    let run = |tag: &str| -> Vec<u8> {
        let dir = tmp_dir(tag);
        let out = bin()
            .args(["--out"])
            .arg(&dir)
            .args([
                "sweep",
                "--kind",
                "radius",
                "--z0",
                "1",
                "--z",
                "0.5",
                "--omega",
                "0.157",
                "--values",
                "0.5,1.0,1.5",
                "--jobs",
                "2",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        check_manifest(&dir);
        std::fs::read(dir.join("phase_sweep.csv")).unwrap()
    };
    let a = run("det-a");
    let b = run("det-b");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn charges_summary_reports_expected_total() {
    // Hermitian point source: the total is -1/2 already on a coarse grid
    // (non-Hermitian edge cells need the acceptance-grade resolution).
    let dir = tmp_dir("charges");
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args([
            "charges", "--kind", "TildeRR", "--z0", "0", "--n-r", "24", "--n-angle", "24",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    let total = json["total"]["re"].as_f64().unwrap();
    assert!((total + 0.5).abs() < 2e-2, "total = {total}");
    assert!(dir.join("disk_charges.csv").exists());
    check_manifest(&dir);
}

#[test]
fn gpe_run_extracts_a_phase() {
    let dir = tmp_dir("gpe");
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args([
            "gpe", "--r", "1", "--omega", "0.314159265", "--n-grid", "256",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert!(json["extracted_phase"]["re"].is_f64());
    assert!(dir.join("gpe_trace.csv").exists());
    check_manifest(&dir);
}

#[test]
fn verify_subset_runs_and_reports() {
    let dir = tmp_dir("verify");
    let out = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["verify", "--criteria", "8,10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("criterion 08"));
    assert!(text.contains("criterion 10"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_passed"], true);
}

#[test]
fn output_dir_falls_back_to_environment() {
    let dir = tmp_dir("env");
    let out = bin()
        .env("NHBERRY_OUT", &dir)
        .args(["loop", "--z0", "1", "--z", "0.5", "--r", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("loop_summary.json").exists());
}
