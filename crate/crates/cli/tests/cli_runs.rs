//! End-to-end runs of the binary: exit codes, output files, manifest
//! replay and trajectory export.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gridfreq")
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            "[case]\nfile = \"{}\"\nmachines = \"{}\"\n{extra}",
            data_path("case39.m").display(),
            data_path("ieee39_machines.toml").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn missing_case_file_exits_2_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "[case]\nfile = \"/nowhere/case.m\"\n").unwrap();
    let out = Command::new(bin())
        .args(["sample", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nowhere/case.m"), "stderr: {stderr}");
}

#[test]
fn missing_config_exits_2() {
    let out = Command::new(bin())
        .args(["sample", "--config", "/nowhere/run.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_diamond_writes_stats_near_half() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("demo");
    let out = Command::new(bin())
        .args([
            "demo-diamond",
            "--out",
            out_dir.to_str().unwrap(),
            "--samples",
            "30000",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("demo_stats.json")).unwrap())
            .unwrap();
    let p = stats["p_x_positive"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 0.1, "P(x>0) = {p}");
    assert!(stats["diamond_crossings"].as_u64().unwrap() >= 10);
    assert!(out_dir.join("samples.csv").exists());
    assert!(out_dir.join("demo_stats.csv").exists());
}

#[test]
fn manifest_replay_reproduces_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "[region]\nn_steps = 30\n\n[sampler]\nburn_in = 1000\nsamples = 800\nseed = 5\nchains = 2\n",
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    let run = Command::new(bin())
        .args([
            "sample",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_a.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    // Re-run from the manifest alone (output redirected).
    let replay = Command::new(bin())
        .args([
            "sample",
            "--config",
            out_a.join("manifest.json").to_str().unwrap(),
            "--out",
            out_b.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));

    for file in ["violation_table.csv", "summary.csv", "samples_N30.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs after manifest replay");
    }
}

#[test]
fn trajectory_zero_disturbance_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "");
    let out_dir = tmp.path().join("traj");
    let run = Command::new(bin())
        .args([
            "trajectory",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--u",
            "0,0,0,0,0,0,0,0,0,0",
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    let text = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    lines.next(); // header
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 22); // t, coi, 10x omega, 10x omegadot
        for v in &cols[1..] {
            assert_eq!(*v, "0.00000e0");
        }
        rows += 1;
    }
    assert_eq!(rows, 401);

    // A violating disturbance exceeds the threshold somewhere on the grid.
    let run = Command::new(bin())
        .args([
            "trajectory",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--u",
            "0,-2.0,0,0,0,0,0,0,0,0",
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    let text = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let max_rocof = text
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(12).map(|v| v.parse::<f64>().unwrap().abs()))
        .fold(0.0f64, f64::max);
    assert!(max_rocof > 1.0, "max |omegadot| = {max_rocof}");

    // Wrong dimension is a usage error.
    let bad = Command::new(bin())
        .args([
            "trajectory",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--u",
            "1,2,3",
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn region_cache_roundtrips_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "[region]\nn_steps = 15\n");
    let out_dir = tmp.path().join("region");
    let run = Command::new(bin())
        .args([
            "region",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    let polytope = gridfreq::region::Polytope::load(&out_dir.join("region.json")).unwrap();
    assert_eq!(polytope.len(), 2 * 10 * 16);
}

#[test]
fn env_overrides_apply_between_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "[region]\nn_steps = 15\n\n[sampler]\nburn_in = 500\nsamples = 300\nseed = 9\n",
    );
    let out_dir = tmp.path().join("env");
    let run = Command::new(bin())
        .env("GRIDFREQ_N", "10")
        .args([
            "sample",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out_dir.join("samples_N10.csv").exists());

    // The flag wins over the environment.
    let out_dir2 = tmp.path().join("env2");
    let run = Command::new(bin())
        .env("GRIDFREQ_N", "10")
        .args([
            "sample",
            "--config",
            config.to_str().unwrap(),
            "--N",
            "12",
            "--out",
            out_dir2.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(out_dir2.join("samples_N12.csv").exists());
}
