use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use irradiance_core::baselines::single_channel;
use irradiance_core::data::{
    clearsky_curve, make_windows, read_csv, split_by_year, synthesize_dataset, write_csv, Dataset, MinMaxScaler, SyntheticConfig,
    WindowedSample,
};
use irradiance_core::evaluation::{
    evaluation_windows, model_forecasts, persistence_forecasts, score, EvalOptions, EvaluationReport, ModelForecasts,
};
use irradiance_core::losses::QuantileSet;
use irradiance_core::metrics::{self, QuantileTable};
use irradiance_core::nn::{train, Backbone, Checkpoint, ForecastOutput, HeadKind, ModelSpec, StopReason, TrainConfig};
use irradiance_core::Error as CoreError;

use crate::args::{BackboneArg, Cli, Command, EvalArgs, ForecastArgs, SynthArgs, TrainArgs};
use crate::plot::{Band, Chart, Line};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<Vec<String>> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Forecast(a) => forecast(cli, a),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv(BufReader::new(file)).map_err(|e| match e {
        CoreError::Data(msg) => CoreError::Data(format!("{}: {msg}", path.display())).into(),
        other => other.into(),
    })
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|e| CoreError::Checkpoint(format!("{}: {e}", path.display())).into())
}

fn parse_list(what: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Config(format!("{what}: `{v}`: {e}")))).collect()
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<Vec<String>> {
    let cfg = SyntheticConfig {
        latitude: a.lat,
        year_count: a.years,
        cloud_autocorrelation: a.rho,
        cloud_floor: a.cloud_floor,
        seed: cli.seed,
        start_year: a.start_year,
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let ds = synthesize_dataset(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    let path = cli.out.join(&a.file);
    write_atomic(&path, &buf)?;
    Ok(vec![format!("wrote {} hourly rows to {}", ds.len(), path.display())])
}

fn windows(runs: &[Dataset], spec: &ModelSpec, stride: usize, scaler: &MinMaxScaler) -> Result<Vec<WindowedSample>> {
    let mut out = Vec::new();
    for run in runs.iter().filter(|r| r.len() >= spec.window + spec.horizon) {
        for s in make_windows(run, spec.window, spec.horizon, stride)? {
            out.push(scaler.scale_sample(&s)?);
        }
    }
    Ok(out)
}

fn split_years(ds: &Dataset, test: Option<i32>, val: Option<i32>) -> Result<(i32, i32)> {
    let years = ds.years();
    let test = test.or_else(|| years.last().copied()).ok_or_else(|| CliError::Config("dataset is empty".into()))?;
    let val = match val {
        Some(v) => v,
        None => *years
            .iter()
            .rev()
            .find(|&&y| y != test)
            .ok_or_else(|| CliError::Config("dataset spans a single year; no validation year".into()))?,
    };
    Ok((test, val))
}

/// Model spec from training flags; fails before any training starts.
pub fn train_spec(cli: &Cli, a: &TrainArgs, input_dim: usize) -> Result<ModelSpec> {
    let mut spec = ModelSpec::new(a.head, input_dim);
    spec.backbone = match a.backbone {
        BackboneArg::Lstm => Backbone::Lstm,
        BackboneArg::Mlp => Backbone::Mlp,
    };
    if spec.backbone == Backbone::Mlp && (a.head != HeadKind::Deterministic) {
        return Err(CliError::Config("the mlp backbone only supports --head det".into()));
    }
    spec.layers = a.layers;
    spec.hidden = a.hidden;
    spec.window = a.window;
    spec.horizon = a.horizon;
    spec.learning_rate = a.lr;
    spec.batch_size = a.batch;
    spec.seed = cli.seed;
    spec.inject_clear_sky = !a.no_inject && spec.backbone == Backbone::Lstm;
    spec.sort_quantiles = a.sort_quantiles;
    match (&a.quantiles, a.head) {
        (Some(q), HeadKind::Quantile) => {
            spec.quantiles = Some(QuantileSet::new(parse_list("--quantiles", q)?).map_err(|e| CliError::Config(e.to_string()))?)
        }
        (Some(_), h) => return Err(CliError::Config(format!("--quantiles only applies to --head qr, not {h}"))),
        (None, _) => {}
    }
    spec.validate()?;
    Ok(spec)
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<Vec<String>> {
    let ds = load_dataset(&a.data)?;
    let ds = match (&a.features, a.backbone) {
        (Some(_), BackboneArg::Mlp) => return Err(CliError::Config("--features cannot be combined with --backbone mlp".into())),
        (Some(f), _) => ds.select_features(&f.split(',').map(str::trim).collect::<Vec<_>>())?,
        (None, BackboneArg::Mlp) => single_channel(&ds)?,
        (None, BackboneArg::Lstm) => ds,
    };
    let spec = train_spec(cli, a, ds.num_features())?;
    if a.stride == 0 {
        return Err(CliError::Config("--stride must be positive".into()));
    }
    let (test_year, val_year) = split_years(&ds, a.test_year, a.val_year)?;
    let splits = split_by_year(&ds, test_year, val_year).map_err(|e| CliError::Config(e.to_string()))?;
    let scaler = MinMaxScaler::fit_runs(&splits.train)?;
    let train_w = windows(&splits.train, &spec, a.stride, &scaler)?;
    let val_w = windows(&splits.val, &spec, a.stride, &scaler)?;
    if train_w.is_empty() || val_w.is_empty() {
        return Err(CoreError::Data(format!(
            "splits hold {} training and {} validation windows of {} h; need at least one each",
            train_w.len(),
            val_w.len(),
            spec.window + spec.horizon
        ))
        .into());
    }
    let config = TrainConfig {
        max_epochs: a.epochs,
        patience: a.patience,
        max_steps: a.max_steps,
        ace_guard: !a.no_ace_guard,
        freeze_alpha: a.freeze_alpha,
        ..TrainConfig::default()
    };
    let outcome = train(&spec, &config, &train_w, &val_w)?;
    let log_path = cli.out.join(format!("{}_training_log.csv", a.name));
    write_atomic(&log_path, outcome.log.to_csv().as_bytes())?;
    if outcome.stop == StopReason::Diverged {
        return Err(CliError::Diverged(format!(
            "non-finite loss after {} steps; log written to {}",
            outcome.steps,
            log_path.display()
        )));
    }
    let mut ck = Checkpoint::new(outcome.model, outcome.optimizer);
    ck.scaler = Some(scaler);
    let meta = [
        ("latitude", a.lat.to_string()),
        ("test_year", test_year.to_string()),
        ("val_year", val_year.to_string()),
        ("train_stride", a.stride.to_string()),
        ("best_epoch", outcome.best_epoch.to_string()),
        ("stop_reason", format!("{:?}", outcome.stop)),
        ("steps", outcome.steps.to_string()),
    ];
    ck.meta.extend(meta.into_iter().map(|(k, v)| (k.to_string(), v)));
    let ck_path = cli.out.join(format!("{}.ckpt", a.name));
    write_atomic(&ck_path, &ck.to_bytes())?;
    Ok(vec![
        format!(
            "trained {} ({} params) on {} windows, validated on {}; best epoch {} of {}, stop: {:?}",
            spec.head,
            ck.model.num_params(),
            train_w.len(),
            val_w.len(),
            outcome.best_epoch,
            outcome.log.epochs.len(),
            outcome.stop
        ),
        format!("checkpoint: {}", ck_path.display()),
        format!("training log: {}", log_path.display()),
    ])
}

fn meta_year(ck: &Checkpoint, key: &str) -> Option<i32> {
    ck.meta.get(key).and_then(|v| v.parse().ok())
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<Vec<String>> {
    let ds = load_dataset(&a.data)?;
    let cks = a.checkpoints.iter().map(|p| load_checkpoint(p)).collect::<Result<Vec<_>>>()?;
    let first = &cks[0];
    let test_year = a
        .test_year
        .or_else(|| meta_year(first, "test_year"))
        .ok_or_else(|| CliError::Config("no --test-year given and none stored in the checkpoint".into()))?;
    let val_year = match meta_year(first, "val_year").filter(|&v| v != test_year) {
        Some(v) => v,
        None => split_years(&ds, Some(test_year), None)?.1,
    };
    let horizon = first.model.spec().horizon;
    if let Some(p) = a.checkpoints.iter().zip(&cks).find(|(_, c)| c.model.spec().horizon != horizon).map(|(p, _)| p) {
        return Err(CliError::Config(format!(
            "{} forecasts a different horizon than {}",
            p.display(),
            a.checkpoints[0].display()
        )));
    }
    let mut opts = EvalOptions { daylight_only: a.daylight_only, stride: a.stride, ..EvalOptions::default() };
    if let Some(c) = &a.coverages {
        opts.coverages = parse_list("--coverages", c)?;
        if let Some(bad) = opts.coverages.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(CliError::Config(format!("coverage {bad} outside (0, 1)")));
        }
    }
    if a.stride == 0 {
        return Err(CliError::Config("--stride must be positive".into()));
    }
    let splits = split_by_year(&ds, test_year, val_year).map_err(|e| CliError::Config(e.to_string()))?;
    let context = cks.iter().map(|c| c.model.spec().window).max().unwrap_or(0);
    let wins = evaluation_windows(&splits.test, context, horizon, a.stride)?;

    let mut lines = Vec::new();
    let mut forecasts: Vec<ModelForecasts> = Vec::new();
    for (path, ck) in a.checkpoints.iter().zip(&cks) {
        let scaler = ck.scaler.as_ref().ok_or_else(|| CoreError::Checkpoint(format!("{}: no scaler stored", path.display())))?;
        let mut name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
        if forecasts.iter().any(|f| f.name == name) {
            name = format!("{name}#{}", forecasts.len() + 1);
        }
        forecasts.push(model_forecasts(&name, &ck.model, scaler, ds.feature_names(), &wins, &opts)?);
    }
    if !a.baseline.is_empty() {
        forecasts.push(persistence_forecasts(&splits.test, &wins)?);
    }
    let mut models = Vec::new();
    for f in &forecasts {
        let (report, warnings) = score(f, &opts)?;
        lines.extend(warnings.into_iter().map(|w| format!("warning: {w}")));
        models.push(report);
    }
    let report = EvaluationReport { horizon, daylight_only: a.daylight_only, windows: wins.len(), models };
    let json_path = cli.out.join("report.json");
    let csv_path = cli.out.join("report.csv");
    write_atomic(&json_path, report.to_json().as_bytes())?;
    write_atomic(&csv_path, report.to_csv().as_bytes())?;
    let plots = write_plots(&cli.out.join("plots"), &report, &forecasts)?;
    lines.push(format!("scored {} windows from test year {test_year}", wins.len()));
    lines.extend(report.to_csv().lines().map(String::from));
    lines.push(format!("report: {} and {}", json_path.display(), csv_path.display()));
    lines.push(format!("plots: {}", plots.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")));
    Ok(lines)
}

fn write_plots(dir: &Path, report: &EvaluationReport, forecasts: &[ModelForecasts]) -> Result<Vec<PathBuf>> {
    let mut rmse = Chart::new("RMSE across the forecast horizon", "horizon (h)", "RMSE (W/m²)");
    let mut picp = Chart::new("Interval coverage", "nominal coverage", "observed coverage (PICP)");
    let mut rel = Chart::new("Reliability", "quantile level", "observed frequency");
    for c in [&mut picp, &mut rel] {
        c.diagonal = true;
        c.x_range = Some((0.0, 1.0));
        c.y_range = Some((0.0, 1.0));
    }
    for m in &report.models {
        let pts = m.per_horizon_rmse.iter().enumerate().map(|(i, r)| ((i + 1) as f64, *r)).collect();
        rmse.lines.push(Line { name: m.model.clone(), points: pts, dashed: m.head.is_none(), markers: false });
        if let Some(cal) = &m.calibration {
            let pts = cal.coverages.iter().zip(&cal.picp).map(|(c, p)| (*c, *p)).collect();
            picp.lines.push(Line { name: m.model.clone(), points: pts, dashed: false, markers: true });
            let pts = cal.reliability.iter().map(|r| (r.p, r.frequency)).collect();
            rel.lines.push(Line { name: m.model.clone(), points: pts, dashed: false, markers: true });
        }
    }
    let bands = band_chart(forecasts);
    let mut paths = Vec::new();
    for (name, chart) in [("per_horizon_rmse", rmse), ("picp", picp), ("reliability", rel), ("forecast_bands", bands)] {
        let p = dir.join(format!("{name}.svg"));
        write_atomic(&p, chart.render().as_bytes())?;
        paths.push(p);
    }
    Ok(paths)
}

/// First window's forecast with 50 % and 90 % bands when available.
fn band_chart(forecasts: &[ModelForecasts]) -> Chart {
    let mut chart = Chart::new("Forecast from the first test origin", "horizon (h)", "GHI (W/m²)");
    let Some(f) = forecasts.iter().find(|f| f.quantiles.is_some()).or(forecasts.first()) else {
        return chart;
    };
    let p = f.horizon;
    let xs = |v: &[f64]| v.iter().take(p).enumerate().map(|(i, y)| ((i + 1) as f64, *y)).collect::<Vec<_>>();
    if let Some(t) = &f.quantiles {
        for (c, opacity) in [(0.9, 0.18), (0.5, 0.35)] {
            if let Ok(iv) = t.intervals(c) {
                let pts = iv.iter().take(p).enumerate().map(|(i, iv)| ((i + 1) as f64, iv.lower, iv.upper)).collect();
                chart.bands.push(Band { name: format!("{}% interval", (c * 100.0) as u32), points: pts, opacity });
            }
        }
    }
    chart.lines.push(Line { name: "observed".into(), points: xs(&f.observed), dashed: false, markers: false });
    chart.lines.push(Line { name: format!("{} forecast", f.name), points: xs(&f.point), dashed: true, markers: false });
    chart
}

fn forecast(cli: &Cli, a: &ForecastArgs) -> Result<Vec<String>> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let scaler = ck.scaler.as_ref().ok_or_else(|| CoreError::Checkpoint("checkpoint stores no scaler".into()))?;
    let lat = match a.lat {
        Some(l) => l,
        None => ck
            .meta
            .get("latitude")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Config("no --lat given and none stored in the checkpoint".into()))?,
    };
    let ds = load_dataset(&a.data)?;
    let spec = ck.model.spec();
    if ds.len() < spec.window {
        return Err(CoreError::Data(format!(
            "{}: the model needs a window of {} rows, got {}",
            a.data.display(),
            spec.window,
            ds.len()
        ))
        .into());
    }
    let names: Vec<&str> = scaler.features.iter().map(|c| c.name.as_str()).collect();
    let ds = ds.select_features(&names)?;
    let recent = &ds.records()[ds.len() - spec.window..];
    let last = recent.last().expect("window is non-empty").timestamp;
    let sample = WindowedSample {
        input: recent.iter().flat_map(|r| r.features.iter().copied()).collect(),
        window: spec.window,
        num_features: names.len(),
        target: vec![0.0; spec.horizon],
        future_clear_sky: (1..=spec.horizon).map(|h| clearsky_curve((last + h as i64) as f64, lat)).collect(),
        origin: ds.len() - 1,
        origin_timestamp: last,
    };
    let out = ck.model.predict(&[scaler.scale_sample(&sample)?])?;
    let csv = forecast_csv(&out, scaler)?;
    let path = cli.out.join(&a.file);
    write_atomic(&path, csv.as_bytes())?;
    Ok(vec![format!(
        "wrote {}-hour forecast from {} to {}",
        spec.horizon,
        irradiance_core::data::format_timestamp(last),
        path.display()
    )])
}

/// Irradiance cannot be negative; forecasts are floored at zero W/m².
fn physical(v: f64) -> f64 {
    v.max(0.0)
}

/// `horizon_hour,point,median,lower50,upper50,lower90,upper90,<params>`;
/// band and median cells are empty when the head cannot provide them.
/// Distribution parameters are in scaled target units.
pub fn forecast_csv(out: &ForecastOutput, scaler: &MinMaxScaler) -> Result<String> {
    let p = out.horizon();
    let unscale = |v: f64| physical(scaler.unscale_target(v));
    let point: Vec<f64> = metrics::point_forecast(out)?.into_iter().map(unscale).collect();
    let levels = [0.05, 0.25, 0.5, 0.75, 0.95];
    let table: Option<QuantileTable> = match out {
        ForecastOutput::Point { .. } => None,
        ForecastOutput::Quantiles { levels: q, .. } => {
            let have: Vec<f64> = levels.iter().copied().filter(|l| q.index_of(*l).is_some()).collect();
            Some(metrics::quantiles_from_output(out, &have)?.map(unscale))
        }
        ForecastOutput::Params { .. } => Some(metrics::quantiles_from_output(out, &levels)?.map(unscale)),
    };
    let (param_names, params): (&[&str], Vec<Vec<f64>>) = match out {
        ForecastOutput::Params { family, values, .. } => (family.param_names(), values.iter().map(|d| d.values()).collect()),
        _ => (&[], vec![]),
    };
    let mut s = String::from("horizon_hour,point,median,lower50,upper50,lower90,upper90");
    for n in param_names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (h, pt) in point.iter().enumerate().take(p) {
        let cell = |level: f64| -> String {
            table
                .as_ref()
                .and_then(|t| t.level_index(level).map(|k| t.values[h * t.levels.len() + k].to_string()))
                .unwrap_or_default()
        };
        s.push_str(&format!("{},{},{},{},{},{},{}", h + 1, pt, cell(0.5), cell(0.25), cell(0.75), cell(0.05), cell(0.95)));
        if let Some(row) = params.get(h) {
            for v in row {
                s.push_str(&format!(",{v}"));
            }
        }
        s.push('\n');
    }
    Ok(s)
}
