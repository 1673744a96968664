//! End-to-end checks of the command-line surface and exit codes.

use std::process::Command;

fn gricci() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gricci"))
}

#[test]
fn empty_campaign_list_is_usage_error() {
    let out = gricci().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_campaign_is_usage_error() {
    let out = gricci().args(["verify", "bogus-campaign"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_identity_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gricci()
        .args(["convergence", "--identity", "nope", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = gricci().args(["geodesic", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn geodesic_writes_reports_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = gricci()
        .args(["geodesic", "--sample", "flat-const", "--grid", "16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("existence window"));
    assert!(stdout.contains("config: sample=flat-const"));
    let csv = std::fs::read_to_string(dir.path().join("geodesic_flat-const.csv")).unwrap();
    assert!(csv.starts_with("t,G_t,mass_t,min_u,f_residual_norm,ricci_invariance_norm"));
    assert!(dir.path().join("fields_flat-const/g_000.gfld").exists());
    assert!(dir.path().join("geodesic_flat-const.json").exists());
}

#[test]
fn degenerate_time_request_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gricci()
        .args([
            "geodesic",
            "--sample",
            "flat-fourier",
            "--grid",
            "16",
            "--times",
            "0,50",
            "--no-fields",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("existence window"), "window not printed: {stdout}");
}

#[test]
fn dump_sample_writes_fields_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = gricci()
        .args(["dump-sample", "--sample", "curved-010", "--grid", "16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let base = dir.path().join("sample_curved-010");
    for f in ["metric.gfld", "volume.gfld", "structure.gfld", "seed.json", "sample.json", "seed_v.gfld"] {
        assert!(base.join(f).exists(), "missing {f}");
    }
    let metric = gricci_core::fields::io::read_field(&base.join("metric.gfld")).unwrap();
    assert_eq!(metric.rank(), gricci_core::fields::Rank::SymTwo);
    assert_eq!(metric.spec().n, 16);
}

#[test]
fn verify_small_variation_passes_and_tol_override_can_fail_it() {
    let dir = tempfile::tempdir().unwrap();
    let ok = gricci()
        .args(["verify", "variation", "--samples", "curved-010", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("variation-suite_curved-010.json").exists());

    // squeezing a tolerance below the measured residual must flip the exit code
    let fail = gricci()
        .args([
            "verify",
            "variation",
            "--samples",
            "curved-010",
            "--tol-override",
            "symplectic-ricci-variation=1e-30",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid = 16\nscheme = central4\n").unwrap();
    let out = gricci()
        .args(["geodesic", "--sample", "flat-const", "--no-fields", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("grid=16"), "echo missing grid: {stdout}");
    assert!(stdout.contains("scheme=central4"), "echo missing scheme: {stdout}");
}
