use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oulab_cli::RunManifest;

fn oulab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oulab"))
        .args(args)
        .output()
        .expect("run oulab")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.conf");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn spectrum_of_ex42() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = oulab(&[
        "spectrum",
        "--config",
        "ex42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = rows(&out.join("spectrum.csv"));
    assert_eq!(rows.len(), 21);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(num(&row[0]) as usize, k);
        assert_eq!(num(&row[1]), 2.0);
        assert_eq!(num(&row[2]), -(k as f64));
    }
}

#[test]
fn even_only_operator_has_no_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[theta]\nc.1 = 1\n[operator]\nA.0 = 1\nA.2 = 0.5\n[noise]\nsigma = 1\n[run]\nt0 = 0.1\n",
    );
    let out = dir.path().join("s");
    assert!(oulab(&[
        "spectrum",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    assert!(rows(&out.join("spectrum.csv"))
        .iter()
        .all(|r| num(&r[2]) == 0.0));
}

#[test]
fn malformed_config_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[operator]\nA.0 = 2\n\n[noise]\nsigma = 1 +\n");
    let o = oulab(&[
        "spectrum",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains(":5:"), "{stderr}");
    assert_eq!(
        oulab(&["spectrum", "--config", "no-such-preset"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn evolve_starts_at_theta_and_overflow_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    let o = oulab(&[
        "evolve",
        "--config",
        "ex41",
        "--times",
        "0:pi/7:64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = rows(&out.join("frames.csv"));
    assert_eq!(rows.len(), 64 * 200);
    let theta = |x: f64| {
        0.5 + 15.0 * x.cos()
            + 3.0 * (3.0 * x).cos()
            + (8.0 * x).cos()
            + 5.0 * (3.0 * x).sin()
            + 15.0 * (5.0 * x).sin()
    };
    for r in rows.iter().take(200) {
        assert_eq!(num(&r[0]), 0.0);
        assert!((num(&r[2]) - theta(num(&r[1]))).abs() < 1e-12);
    }

    let o = oulab(&[
        "evolve",
        "--config",
        "ex41",
        "--times",
        "0,400",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode 0"));
}

#[test]
fn noiseless_samples_repeat_and_estimate_recovers_theta() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[theta]\nc0 = 1\nc.1 = 5\nd.5 = 5\n[operator]\nA.0 = 2\nA.1 = -1\n[noise]\nsigma = 0\n[run]\nt0 = pi/7\nn = 3\n",
    );
    let s = dir.path().join("s");
    assert!(
        oulab(&["sample", "--config", &config, "--out", s.to_str().unwrap()])
            .status
            .success()
    );
    let samples = rows(&s.join("samples.csv"));
    assert_eq!(samples.len(), 600);
    for g in 0..200 {
        assert_eq!(samples[g][2], samples[200 + g][2]);
        assert_eq!(samples[g][2], samples[400 + g][2]);
    }

    let e = dir.path().join("e");
    let samples_path = s.join("samples.csv");
    let o = oulab(&[
        "estimate",
        "--config",
        &config,
        "--samples",
        samples_path.to_str().unwrap(),
        "--out",
        e.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report = rows(&e.join("report.csv"));
    assert!(num(&report[0][3]) < 1e-9);
}

#[test]
fn samples_file_without_columns_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "sample_id,value\n1,2\n").unwrap();
    let o = oulab(&[
        "estimate",
        "--config",
        "ex42",
        "--samples",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_errors_increase_with_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    assert!(oulab(&[
        "estimate",
        "--config",
        "ex43",
        "--seed",
        "12",
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let report = rows(&out.join("report.csv"));
    let sigmas: Vec<f64> = report.iter().map(|r| num(&r[1])).collect();
    assert_eq!(sigmas, vec![150.0, 1500.0, 7500.0, 15000.0]);
    let errors: Vec<f64> = report.iter().map(|r| num(&r[3])).collect();
    assert!(errors.windows(2).all(|w| w[0] < w[1]), "{errors:?}");
    assert!(report
        .iter()
        .all(|r| num(&r[2]) == 10.0 && num(&r[5]) < 1e-9));
}

#[test]
fn cauchy_surrogate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = oulab(&[
        "estimate",
        "--config",
        "ex42",
        "--seed",
        "1",
        "--epsilon",
        "0",
        "--n-max",
        "30",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(dir.path().join("estimate.csv").exists());
    let o = oulab(&[
        "estimate",
        "--config",
        "ex42",
        "--seed",
        "1",
        "--epsilon",
        "200",
        "--out",
        out,
    ]);
    assert!(o.status.success());
}

#[test]
fn verify_noiseless_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[operator]\nA.0 = 2\n[noise]\nsigma = 0\n[run]\nt0 = 0.5\n",
    );
    let out = dir.path().join("v");
    assert!(oulab(&[
        "verify",
        "--config",
        &config,
        "--samples",
        "100",
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let checks = rows(&out.join("verify.csv"));
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|r| r[6] == "true"));
}

#[test]
fn convergence_single_trial_and_unsorted_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = oulab(&[
        "convergence",
        "--config",
        "ex42",
        "--n-grid",
        "5,50",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(rows(&out.join("trials.csv")).len(), 2);
    let summary = rows(&out.join("summary.csv"));
    assert!(summary.iter().all(|r| num(&r[2]) == 0.0));
    assert!(fs::read_to_string(out.join("summary.meta"))
        .unwrap()
        .starts_with("slope="));

    let o = oulab(&[
        "convergence",
        "--config",
        "ex42",
        "--n-grid",
        "50,5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeds_are_recorded_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert!(oulab(&[
            "sample",
            "--config",
            "ex42",
            "--seed",
            "77",
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .success());
    }
    assert_eq!(
        fs::read(a.join("samples.csv")).unwrap(),
        fs::read(b.join("samples.csv")).unwrap()
    );

    let c = dir.path().join("c");
    assert!(
        oulab(&["sample", "--config", "ex42", "--out", c.to_str().unwrap()])
            .status
            .success()
    );
    let manifest = RunManifest::read(&c.join("manifest.json")).unwrap();
    assert_eq!(manifest.seed_source, "entropy");
    assert_eq!(manifest.run.config.seed, Some(manifest.run.seed));
    assert_eq!(manifest.outputs, vec!["samples.csv".to_string()]);
}
