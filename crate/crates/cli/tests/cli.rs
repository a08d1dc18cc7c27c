use std::path::Path;
use std::process::{Command, Output};

use oppradar_cli::{preset_fig3, single_point_spec, surface_for, write_surface, SURFACE_HEADER};
use oppradar_core::estimators::{metric_direct, pilot_combine, DataCovariance};
use oppradar_core::harness::{read_metrics_csv, trial_observations, CSV_HEADER};
use oppradar_core::numerics::GridSpec;

fn oppradar(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oppradar"));
    cmd.args(args).env_remove("OPPRADAR_SEED");
    if let Some(s) = env_seed {
        cmd.env("OPPRADAR_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK: [&str; 6] = ["--snr", "-20,0", "--trials", "4", "--estimators", "jpudl,pilot_only,dd_lmmse"];

#[test]
fn sweep_snr_writes_the_metrics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/fig3.csv");
    let mut args = vec!["sweep-snr", "--out", path_str(&out)];
    args.extend(QUICK);
    let o = oppradar(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_metrics_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.n_trials == 4 && r.experiment == "fig3"));
    assert_eq!(rows[2].ser.is_some(), true);
}

#[test]
fn printed_spec_reruns_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let mut args = vec!["sweep-snr", "--out", path_str(&first), "--seed", "99", "--pad", "4"];
    args.extend(QUICK);
    let o = oppradar(&args, None);
    assert!(o.status.success());
    let stderr = String::from_utf8(o.stderr).unwrap();
    // the resolved spec is the leading JSON document on stderr
    let end = stderr.find("\n}").unwrap() + 2;
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, &stderr[..end]).unwrap();

    let second = dir.path().join("b.csv");
    let o = oppradar(
        &["sweep-snr", "--config", path_str(&spec_path), "--out", path_str(&second)],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn seed_comes_from_the_environment_unless_given() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed_flag: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut args = vec!["sweep-snr", "--out", path_str(&out)];
        args.extend(QUICK);
        if let Some(s) = seed_flag {
            args.extend(["--seed", s]);
        }
        assert!(oppradar(&args, env).status.success());
        std::fs::read(out).unwrap()
    };
    let env5 = run("env5.csv", None, Some("5"));
    let flag5 = run("flag5.csv", Some("5"), None);
    let flag_wins = run("flag5_env6.csv", Some("5"), Some("6"));
    let env6 = run("env6.csv", None, Some("6"));
    assert_eq!(env5, flag5);
    assert_eq!(env5, flag_wins);
    assert_ne!(env5, env6);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = oppradar(&["sweep-snr", "--out", path_str(&out), "--estimators", "magic"], None);
    assert!(!o.status.success());
    let o = oppradar(&["sweep-snr", "--out", path_str(&out), "--trials", "0"], None);
    assert!(!o.status.success());
    let o = oppradar(&["sweep-snr", "--out", path_str(&out)], Some("not-a-number"));
    assert!(!o.status.success());
    assert!(!out.exists());

    // an N-sweep config handed to sweep-snr
    let cfg = dir.path().join("n.json");
    std::fs::write(&cfg, serde_json::to_string(&oppradar_cli::preset_fig5a()).unwrap()).unwrap();
    let o = oppradar(&["sweep-snr", "--config", path_str(&cfg), "--out", path_str(&out)], None);
    assert!(!o.status.success());
}

#[test]
fn sweep_n_and_q_use_their_presets() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, param, n_values) in [("sweep-n", "n_antennas", 5), ("sweep-q", "n_subcarriers", 6)] {
        let out = dir.path().join(format!("{cmd}.csv"));
        let o = oppradar(
            &[cmd, "--out", path_str(&out), "--trials", "1", "--snr", "-10", "--estimators", "jpudl", "--pad", "2"],
            None,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = read_metrics_csv(std::fs::File::open(&out).unwrap()).unwrap();
        assert_eq!(rows.len(), n_values);
        assert!(rows.iter().all(|r| r.sweep_param == param && r.snr_db == -10.0));
    }
}

#[test]
fn single_reports_every_estimator() {
    let o = oppradar(&["single", "--snr", "-5", "--range", "20000", "--aoa", "-0.4", "--seed", "3"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["scene"]["range"], 20000.0);
    let ests = doc["estimates"].as_array().unwrap();
    assert_eq!(ests.len(), 5);
    for e in ests {
        assert!(e["err_sin_aoa"].as_f64().unwrap().abs() < 0.01, "{e}");
    }
}

#[test]
fn trial_dump_is_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let trials = dir.path().join("t.csv");
    let mut args = vec!["sweep-snr", "--out", path_str(&out), "--trials-out", path_str(&trials)];
    args.extend(QUICK);
    assert!(oppradar(&args, None).status.success());
    let text = std::fs::read_to_string(&trials).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4 * 3);
}

#[test]
fn dump_surface_writes_every_bin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = oppradar(
        &["dump-surface", "--out", path_str(&out), "--snr", "inf", "--pad", "2", "--range", "30000", "--aoa", "0.2"],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SURFACE_HEADER.join(","));
    // Q=256, N=16, pad 2: 256 range bins x 32 aoa bins
    assert_eq!(lines.count(), 256 * 32);
}

fn point_spec(snr: f64, scene: Option<(f64, f64)>) -> oppradar_core::harness::ExperimentSpec {
    let mut base = preset_fig3();
    base.grid = GridSpec {
        pad_range: 4,
        pad_aoa: 4,
    };
    single_point_spec(base, snr, 17, scene)
}

#[test]
fn noiseless_surface_peaks_at_the_true_bins() {
    for (range, aoa) in [(12_345.6, 0.31), (80_000.0, -0.7), (40_000.2, 0.0)] {
        let spec = point_spec(f64::INFINITY, Some((range, aoa)));
        let (scene, coarse) = surface_for(&spec, 0, false).unwrap();
        let cfg = spec.system;
        let want = (
            spec.grid.bin_of_range(&cfg, scene.range).unwrap(),
            spec.grid.bin_of_sin_aoa(&cfg, scene.sin_aoa()),
        );
        assert_eq!(coarse.peak, want);
        assert!(coarse.surface.values.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn surface_matches_direct_metric_at_random_bins() {
    use rand::{Rng, SeedableRng};
    let spec = point_spec(-5.0, None);
    let (_, coarse) = surface_for(&spec, 0, false).unwrap();
    let point = spec.points()[0];
    let (_, frame, obs) = trial_observations(&spec, &point, 0).unwrap();
    let pc = pilot_combine(&obs.pilot, &frame.pilots).unwrap();
    let cov = DataCovariance::from_observations(&obs.data);
    let s = &coarse.surface;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let k_r = rng.random_range(0..s.range_axis.len());
        let k_a = rng.random_range(0..s.sin_aoa_axis.len());
        let want = metric_direct(&pc, Some(&cov), s.range_axis[k_r], s.sin_aoa_axis[k_a], &point.system);
        assert!((s.values[[k_r, k_a]] - want).abs() <= 1e-9 * want);
    }
    let mut buf = Vec::new();
    write_surface(&coarse, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + s.values.len());
}
