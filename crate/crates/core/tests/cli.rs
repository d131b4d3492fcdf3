use std::path::Path;
use std::process::{Command, Output};

fn pulsedoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsedoa")).args(args).env_remove("PULSEDOA_ABSORPTION").output().unwrap()
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

fn small_config(dir: &Path, runs: usize) -> std::path::PathBuf {
    let path = dir.join("c.toml");
    std::fs::write(
        &path,
        format!(
            "runs = {runs}\nbase_seed = 3\npower_w = 1e-7\ntheta_deg = 12.5175\npath_lengths_m = [2.0]\n\
             snapshot_times_s = [42e-12]\nf_min_hz = 100e9\nf_max_hz = 325e9\n\n\
             [array]\nelements = 8\nspacing_m = 0.4615e-3\n\n[centers_hz]\n6 = [131e9, 260e9]\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn table1_rows() {
    let out = pulsedoa(&["table1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("order,center_ghz,f_low_ghz,f_high_ghz,bandwidth_ghz,duration_ps\n"));
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 28);
    let close = |a: f64, b: f64| ((a - b) / b).abs() < 0.01;
    let r1 = &rows[0];
    assert_eq!((r1[0], r1[1]), (1.0, 200.0));
    for (got, want) in r1[2..].iter().zip([96.32, 327.31, 230.98, 7.95]) {
        assert!(close(*got, want), "{got} vs {want}");
    }
    let r6 = rows.iter().find(|r| r[0] == 6.0 && r[1] == 131.0).unwrap();
    for (got, want) in r6[2..].iter().zip([100.883, 163.64, 62.76, 29.75]) {
        assert!(close(*got, want), "{got} vs {want}");
    }
}

#[test]
fn table1_unwritable_path_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("t.csv");
    let out = pulsedoa(&["table1", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!target.exists());

    let ok = dir.path().join("t.csv");
    assert!(pulsedoa(&["table1", "--out", ok.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn pulse_waveform_contract() {
    let out = pulsedoa(&["pulse", "--order", "6", "--center-hz", "131e9", "--samples", "501"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t_seconds,amplitude\n"));
    let rows = parse_rows(&text);
    assert_eq!(rows.len(), 501);
    let peak = rows.iter().enumerate().max_by(|a, b| a.1[1].abs().total_cmp(&b.1[1].abs())).unwrap().0;
    assert!(peak > 0 && peak < 500);

    let out = pulsedoa(&["pulse", "--order", "7", "--center-hz", "128e9", "--samples", "101"]);
    let rows = parse_rows(&String::from_utf8(out.stdout).unwrap());
    let scale = rows.iter().map(|r| r[1].abs()).fold(0.0, f64::max);
    assert!(rows[50][0].abs() < 1e-25);
    assert!(rows[50][1].abs() <= 1e-15 * scale);
}

#[test]
fn pulse_energy_by_trapezoid() {
    let n_samples = 20001;
    let out = pulsedoa(&["pulse", "--order", "6", "--center-hz", "131e9", "--samples", &n_samples.to_string()]);
    let rows = parse_rows(&String::from_utf8(out.stdout).unwrap());
    let energy: f64 = rows.windows(2).map(|w| 0.5 * (w[0][1].powi(2) + w[1][1].powi(2)) * (w[1][0] - w[0][0])).sum();
    let t_g = rows.last().unwrap()[0] - rows[0][0];
    let e_g = 1e-7 * t_g;
    assert!(((energy - e_g) / e_g).abs() < 1e-3, "{energy:e} vs {e_g:e}");
}

#[test]
fn pulse_rejects_bad_order() {
    let out = pulsedoa(&["pulse", "--order", "11", "--center-hz", "131e9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_missing_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = pulsedoa(&["sweep", "--config", "/nonexistent/c.toml", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_zero_runs_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0);
    let out_dir = dir.path().join("out");
    let out = pulsedoa(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn sweep_unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1);
    let text = std::fs::read_to_string(&cfg).unwrap().replace("base_seed = 3", "base_sead = 3");
    std::fs::write(&cfg, text).unwrap();
    let out = pulsedoa(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":2:") || err.contains("line 2"), "{err}");
}

#[test]
fn sweep_outputs_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 2);
    let out_dir = dir.path().join("out");
    let out = pulsedoa(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--kind",
        "confusion",
        "--runs",
        "3",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<_> = results.lines().collect();
    assert_eq!(lines[0], "order,center_hz,d_r_m,delta_t_s,n_run,rmse_theta_deg,rmse_fc_hz,tpr");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("6,131000000000.0,2.0,4.2e-11,3,"));
    let confusion = std::fs::read_to_string(out_dir.join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("order,center_true_hz,center_est_hz,count,d_r_m,delta_t_s\n"));
    assert_eq!(confusion.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["base_seed"], 9);
    assert_eq!(manifest["config"]["runs"], 3);
    assert_eq!(manifest["kind"], "confusion");
}

#[test]
fn sweep_uses_absorption_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1);
    let table = dir.path().join("k.csv");
    std::fs::write(&table, "frequency_hz,k_per_meter\n5e10,0.0\n4e11,0.0\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_pulsedoa"))
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .env("PULSEDOA_ABSORPTION", &table)
        .status()
        .unwrap();
    assert!(status.success());
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    // a lossless table means no noise: exact angle and class
    for line in results.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[5] < 1e-3);
        assert_eq!(f[6], 0.0);
        assert_eq!(f[7], 1.0);
    }
}
