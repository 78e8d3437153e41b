use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use irradiance_cli::commands::train_spec;
use irradiance_cli::{run, Cli, CliError, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO};
use irradiance_core::nn::HeadKind;

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn go(args: &[&str]) -> Result<Vec<String>, CliError> {
    run(std::iter::once("irradiance").chain(args.iter().copied()))
}

/// Three synthetic years written to a temporary directory.
fn dataset(dir: &Path) -> PathBuf {
    go(&["--seed", "3", "--out", &s(dir), "synth", "--years", "3"]).unwrap();
    dir.join("dataset.csv")
}

fn tiny_train(dir: &Path, data: &Path, head: &str, name: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec![
        "--seed",
        "5",
        "--out",
        &s(dir),
        "train",
        "--data",
        &s(data),
        "--head",
        head,
        "--hidden",
        "4",
        "--layers",
        "1",
        "--window",
        "24",
        "--epochs",
        "2",
        "--stride",
        "48",
        "--lr",
        "3e-3",
        "--name",
        name,
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    args.extend(extra.iter().map(|e| e.to_string()));
    run(std::iter::once("irradiance".to_string()).chain(args)).unwrap();
    dir.join(format!("{name}.ckpt"))
}

#[test]
fn synth_row_count_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        go(&["--seed", "7", "--out", &s(d.path()), "synth", "--years", "5", "--lat", "60"]).unwrap();
    }
    let x = std::fs::read(a.path().join("dataset.csv")).unwrap();
    let y = std::fs::read(b.path().join("dataset.csv")).unwrap();
    assert_eq!(x, y);
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 5 * 8760 + 1);
}

#[test]
fn invalid_latitude_is_a_usage_error() {
    let err = go(&["synth", "--lat", "120"]).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("latitude"));
}

#[test]
fn train_defaults_match_reference_configuration() {
    let cli = Cli::try_parse_from(["irradiance", "train", "--data", "x.csv"]).unwrap();
    let irradiance_cli::args::Command::Train(a) = &cli.command else { panic!() };
    let spec = train_spec(&cli, a, 10).unwrap();
    assert_eq!((spec.window, spec.layers, spec.hidden, spec.batch_size), (72, 2, 128, 64));
    assert_eq!(spec.learning_rate, 1e-5);
    assert_eq!(spec.head, HeadKind::Deterministic);

    let cli =
        Cli::try_parse_from(["irradiance", "train", "--data", "x", "--head", "qr", "--quantiles", "0.05,0.25,0.5,0.75,0.95"])
            .unwrap();
    let irradiance_cli::args::Command::Train(a) = &cli.command else { panic!() };
    assert_eq!(train_spec(&cli, a, 10).unwrap().output_width(), 5);
}

#[test]
fn quantile_head_without_median_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let start = Instant::now();
    let err = go(&["--out", &s(dir.path()), "train", "--data", &s(&data), "--head", "qr", "--quantiles", "0.1,0.9"]).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG, "{err}");
    assert!(err.to_string().contains("0.5"));
    assert!(start.elapsed().as_secs() < 5);
    assert!(!dir.path().join("model.ckpt").exists());
}

#[test]
fn smoke_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let start = Instant::now();
    let ck = tiny_train(dir.path(), &data, "det", "det", &[]);
    assert!(start.elapsed().as_secs() < 60);
    assert!(ck.exists());
    let log = std::fs::read_to_string(dir.path().join("det_training_log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_loss,val_loss,val_ace\n"));

    let out = dir.path().join("eval");
    go(&["--out", &s(&out), "eval", "--data", &s(&data), "--checkpoint", &s(&ck), "--baseline", "smart-persistence"]).unwrap();
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "model,MAE,RMSE,quantile_loss,ACE");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("det,") && rows[1].ends_with(",,"));
    assert!(rows[2].starts_with("smart-persistence,"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(json["models"][0]["ace"].is_null());
    assert_eq!(json["models"][0]["per_horizon_rmse"].as_array().unwrap().len(), 36);
    for p in ["per_horizon_rmse", "picp", "reliability", "forecast_bands"] {
        let svg = std::fs::read_to_string(out.join("plots").join(format!("{p}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    let again = dir.path().join("eval2");
    go(&["--out", &s(&again), "eval", "--data", &s(&data), "--checkpoint", &s(&ck), "--baseline", "smart-persistence"]).unwrap();
    assert_eq!(std::fs::read(out.join("report.json")).unwrap(), std::fs::read(again.join("report.json")).unwrap());
}

fn forecast_rows(dir: &Path, ck: &Path, data: &Path) -> Vec<Vec<String>> {
    go(&["--out", &s(dir), "forecast", "--checkpoint", &s(ck), "--data", &s(data)]).unwrap();
    let text = std::fs::read_to_string(dir.join("forecast.csv")).unwrap();
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn forecast_bands_are_nested() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let ck = tiny_train(dir.path(), &data, "mle-g", "g", &[]);
    let rows = forecast_rows(dir.path(), &ck, &data);
    assert_eq!(rows[0].join(","), "horizon_hour,point,median,lower50,upper50,lower90,upper90,mu,sigma");
    assert_eq!(rows.len(), 37);
    for r in &rows[1..] {
        let v: Vec<f64> = r[1..7].iter().map(|x| x.parse().unwrap()).collect();
        let (median, l50, u50, l90, u90) = (v[1], v[2], v[3], v[4], v[5]);
        assert!(l90 <= l50 && l50 <= median && median <= u50 && u50 <= u90, "{r:?}");
    }
}

#[test]
fn bounded_forecasts_stay_inside_observed_range() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let ck = tiny_train(dir.path(), &data, "mle-jsb", "sb", &[]);
    let max = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    let rows = forecast_rows(dir.path(), &ck, &data);
    for r in &rows[1..] {
        for x in &r[1..7] {
            let v: f64 = x.parse().unwrap();
            assert!((0.0..max).contains(&v), "{v} outside [0, {max})");
        }
    }
}

#[test]
fn forecast_needs_a_full_window() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let ck = tiny_train(dir.path(), &data, "det", "m", &[]);
    let text = std::fs::read_to_string(&data).unwrap();
    let short: String = text.lines().take(11).map(|l| format!("{l}\n")).collect();
    let short_path = dir.path().join("short.csv");
    std::fs::write(&short_path, short).unwrap();
    let err = go(&["--out", &s(dir.path()), "forecast", "--checkpoint", &s(&ck), "--data", &s(&short_path)]).unwrap_err();
    assert!(err.to_string().contains("window of 24 rows, got 10"), "{err}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# synthetic data\nyears = 2\nlat = 45\nfile = from_config.csv\n").unwrap();
    go(&["--config", &s(&cfg), "--out", &s(dir.path()), "synth", "--years", "1"]).unwrap();
    let text = std::fs::read_to_string(dir.path().join("from_config.csv")).unwrap();
    assert_eq!(text.lines().count(), 8760 + 1);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let err = go(&["--config", &s(&cfg), "synth"]).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(err.to_string().contains("colour"));
}

#[test]
fn config_file_can_supply_required_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let cfg = dir.path().join("train.cfg");
    std::fs::write(
        &cfg,
        format!(
            "data = {}\nhidden = 4\nlayers = 1\nwindow = 24\nepochs = 1\nstride = 96\nno_inject = true\nname = cfg\n",
            s(&data)
        ),
    )
    .unwrap();
    go(&["--config", &s(&cfg), "--out", &s(dir.path()), "train"]).unwrap();
    assert!(dir.path().join("cfg.ckpt").exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let err = go(&["train", "--data", "/nonexistent/data.csv"]).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_IO);
    assert!(err.to_string().contains("/nonexistent/data.csv"));
}

#[test]
fn divergence_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let err = go(&[
        "--out",
        &s(dir.path()),
        "train",
        "--data",
        &s(&data),
        "--hidden",
        "4",
        "--layers",
        "1",
        "--window",
        "24",
        "--stride",
        "48",
        "--lr",
        "1e308",
        "--epochs",
        "3",
        "--name",
        "boom",
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), EXIT_DIVERGED, "{err}");
    assert!(!dir.path().join("boom.ckpt").exists());
}

#[test]
fn quantile_eval_uses_available_coverages() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let ck = tiny_train(dir.path(), &data, "qr", "q", &[]);
    let lines = go(&["--out", &s(dir.path()), "eval", "--data", &s(&data), "--checkpoint", &s(&ck)]).unwrap();
    assert!(lines.iter().any(|l| l.starts_with("warning: q: only coverages [0.5, 0.9]")), "{lines:?}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let cal = &json["models"][0]["calibration"];
    assert_eq!(cal["coverages"].as_array().unwrap().len(), 2);
    assert_eq!(cal["reliability"].as_array().unwrap().len(), 5);
}
