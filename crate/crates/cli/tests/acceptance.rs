//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::Path;
use std::time::{Duration, Instant};

use irradiance_cli::run;
use irradiance_core::baselines::smart_persistence_for_windows;
use irradiance_core::data::{clearsky_curve, make_windows, synthesize_dataset, MinMaxScaler, SyntheticConfig, WindowedSample};
use irradiance_core::distributions::{
    ContinuousDistribution, DistributionParams, Family, GaussianParams, JohnsonSBParams, JohnsonSUParams, WeibullParams,
};
use irradiance_core::losses::{pinball, pinball_term, QuantileSet};
use irradiance_core::metrics::{default_coverages, default_reliability_grid, quantile_loss, CalibrationReport};
use irradiance_core::nn::{
    adam_step, check_gradients, train, AdamState, ForecastOutput, HeadKind, Model, ModelSpec, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("distribution correctness", Duration::from_secs(60), distributions),
        ("gradient fidelity", Duration::from_secs(120), gradients),
        ("overfit capacity", Duration::from_secs(300), overfit),
        ("calibration recovery", Duration::from_secs(1800), calibration),
        ("baseline ordering", Duration::from_secs(3600), baseline_ordering),
        ("smart persistence exactness", Duration::from_secs(30), persistence_exactness),
        ("pinball optimality", Duration::from_secs(30), pinball_optimality),
        ("loss/metric consistency", Duration::from_secs(30), loss_metric_consistency),
        ("injection contract", Duration::from_secs(30), injection_contract),
        ("reproducibility", Duration::from_secs(3600), reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > *budget => Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name}: {detail} ({:.1}s)", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

/// Parameter draws over the ranges the forecasting heads emit.
fn random_params(family: Family, rng: &mut ChaCha8Rng) -> DistributionParams {
    match family {
        Family::Gaussian => {
            DistributionParams::Gaussian(GaussianParams::new(rng.random_range(-1.0..2.0), rng.random_range(0.01..1.0)).unwrap())
        }
        Family::JohnsonSU => DistributionParams::JohnsonSU(
            JohnsonSUParams::new(
                rng.random_range(-1.0..2.0),
                rng.random_range(0.01..1.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(5.0..9.0),
            )
            .unwrap(),
        ),
        Family::JohnsonSB => DistributionParams::JohnsonSB(
            JohnsonSBParams::new(0.0, 1.0, rng.random_range(-4.0..4.0), rng.random_range(0.05..6.0)).unwrap(),
        ),
        Family::Weibull => {
            DistributionParams::Weibull(WeibullParams::new(rng.random_range(0.05..1.0), rng.random_range(0.3..2.0)).unwrap())
        }
    }
}

/// Adaptive Simpson on `[a.0, b.0]`; each point carries its function value.
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: (f64, f64),
    m: (f64, f64),
    b: (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, rm) = (0.5 * (a.0 + m.0), 0.5 * (m.0 + b.0));
    let (l, r) = ((lm, f(lm)), (rm, f(rm)));
    let left = (m.0 - a.0) / 6.0 * (a.1 + 4.0 * l.1 + m.1);
    let right = (b.0 - m.0) / 6.0 * (m.1 + 4.0 * r.1 + b.1);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, l, m, left, 0.5 * tol, depth - 1) + adaptive_simpson(f, m, r, b, right, 0.5 * tol, depth - 1)
}

/// Integral of the density over its support, found without the CDF. A change
/// of variable maps the support onto the real line and the range is widened
/// until the integrand is negligible at both ends.
fn density_mass(d: &DistributionParams) -> f64 {
    let map: Box<dyn Fn(f64) -> (f64, f64)> = match *d {
        DistributionParams::Gaussian(p) => Box::new(move |u| (p.mu + p.sigma * u, p.sigma)),
        DistributionParams::JohnsonSU(p) => Box::new(move |u: f64| (p.xi + p.lambda * u.sinh(), p.lambda * u.cosh())),
        DistributionParams::JohnsonSB(p) => Box::new(move |u: f64| {
            let x = 1.0 / (1.0 + (-u).exp());
            (p.xi + p.lambda * x, p.lambda * x * (1.0 - x))
        }),
        DistributionParams::Weibull(_) => Box::new(|u: f64| (u.exp(), u.exp())),
    };
    let f = |u: f64| {
        let (x, jac) = map(u);
        let v = d.pdf(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut l = 8.0;
    while (f(l) > 1e-14 || f(-l) > 1e-14) && l < 1e4 {
        l *= 2.0;
    }
    let n = 4000;
    let h = 2.0 * l / n as f64;
    (0..n)
        .map(|i| {
            let (x0, x1) = (-l + i as f64 * h, -l + (i + 1) as f64 * h);
            let xm = 0.5 * (x0 + x1);
            let (a, m, b) = ((x0, f(x0)), (xm, f(xm)), (x1, f(x1)));
            let whole = h / 6.0 * (a.1 + 4.0 * m.1 + b.1);
            adaptive_simpson(&f, a, m, b, whole, 1e-12, 30)
        })
        .sum()
}

fn distributions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_mass, mut worst_cdf) = (0.0_f64, 0.0_f64);
    for family in Family::ALL {
        for _ in 0..100 {
            let d = random_params(family, &mut rng);
            worst_mass = worst_mass.max((density_mass(&d) - 1.0).abs());
            for i in 1..100 {
                let p = i as f64 / 100.0;
                worst_cdf = worst_cdf.max((d.cdf(d.quantile(p)) - p).abs());
            }
        }
    }
    check(
        worst_mass <= 1e-3 && worst_cdf <= 1e-6,
        format!("max |mass - 1| = {worst_mass:.2e}, max |cdf(quantile(p)) - p| = {worst_cdf:.2e} over 400 draws"),
    )
}

/// Random windows whose targets lie inside every family's support.
fn random_samples(spec: &ModelSpec, n: usize, seed: u64) -> Vec<WindowedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match spec.head {
        HeadKind::JohnsonSB => (0.1, 0.9),
        HeadKind::Weibull => (0.05, 1.0),
        _ => (0.0, 1.2),
    };
    (0..n)
        .map(|i| WindowedSample {
            input: (0..spec.window * spec.input_dim).map(|_| rng.random_range(0.0..1.0)).collect(),
            window: spec.window,
            num_features: spec.input_dim,
            target: (0..spec.horizon).map(|_| rng.random_range(lo..hi)).collect(),
            future_clear_sky: (0..spec.horizon).map(|_| rng.random_range(0.85..1.0)).collect(),
            origin: i,
            origin_timestamp: i as i64,
        })
        .collect()
}

fn small_spec(head: HeadKind) -> ModelSpec {
    let mut s = ModelSpec::new(head, 3);
    s.hidden = 4;
    s.window = 6;
    s.horizon = 2;
    s.seed = 31;
    s
}

fn gradients() -> Outcome {
    let mut parts = Vec::new();
    let mut worst = 0.0_f64;
    for head in HeadKind::ALL {
        let spec = small_spec(head);
        let model = Model::new(spec.clone()).map_err(|e| e.to_string())?;
        let data = random_samples(&spec, 4, 77);
        let batch: Vec<&WindowedSample> = data.iter().collect();
        let r = check_gradients(&model, &batch, 1e-6).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_rel_error);
        parts.push(format!("{head} {:.1e}", r.max_rel_error));
    }
    check(worst <= 1e-4, format!("max relative error per head: {}", parts.join(", ")))
}

fn synthetic_windows(years: u32, window: usize, horizon: usize, stride: usize) -> Vec<WindowedSample> {
    let ds = synthesize_dataset(&SyntheticConfig { year_count: years, seed: 9, ..Default::default() }).unwrap();
    let scaler = MinMaxScaler::fit(&ds).unwrap();
    make_windows(&ds, window, horizon, stride).unwrap().iter().map(|s| scaler.scale_sample(s).unwrap()).collect()
}

fn overfit() -> Outcome {
    // Ten daytime origins spread across the year.
    let all = synthetic_windows(1, 24, 36, 1);
    let data: Vec<WindowedSample> = (0..10).map(|k| all[k * 800 + 12].clone()).collect();
    let mut spec = ModelSpec::new(HeadKind::Deterministic, data[0].num_features);
    spec.layers = 1;
    spec.hidden = 32;
    spec.window = 24;
    spec.seed = 4;
    // Without injection the clear-sky shortcut is gone and the LSTM must memorize.
    spec.inject_clear_sky = false;
    let batch: Vec<&WindowedSample> = data.iter().collect();
    let mut model = Model::new(spec).map_err(|e| e.to_string())?;
    let mut opt = AdamState::new(model.blocks());
    for step in 0..=5000 {
        let (loss, grad) = model.loss_and_grad(&batch).map_err(|e| e.to_string())?;
        if loss < 1e-3 {
            return Ok(format!("train MSE {loss:.2e} after {step} Adam steps"));
        }
        if step == 5000 {
            return Err(format!("train MSE {loss:.2e} after 5000 Adam steps"));
        }
        adam_step(model.blocks_mut(), &grad, &mut opt, 1e-2).map_err(|e| e.to_string())?;
    }
    unreachable!()
}

const CAL_OFFSET: f64 = 0.1;
const CAL_SLOPE: f64 = 0.8;
const CAL_SIGMA: f64 = 0.05;

/// Hourly `y = a + b·cs + σ·N` around a normalized clear-sky curve.
fn calibration_windows(start: i64, hours: usize, window: usize, horizon: usize, stride: usize, seed: u64) -> Vec<WindowedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs: Vec<f64> = (0..hours).map(|t| clearsky_curve((start + t as i64) as f64, 50.0) / 1098.0).collect();
    let y: Vec<f64> = cs
        .iter()
        .map(|c| {
            let n: f64 = StandardNormal.sample(&mut rng);
            CAL_OFFSET + CAL_SLOPE * c + CAL_SIGMA * n
        })
        .collect();
    let features = |t: usize| {
        let angle = 2.0 * std::f64::consts::PI * ((start + t as i64) % 24) as f64 / 24.0;
        [y[t], cs[t], angle.sin(), angle.cos()]
    };
    (0..)
        .map(|k| k * stride)
        .take_while(|s| s + window + horizon <= hours)
        .map(|s| {
            let origin = s + window - 1;
            WindowedSample {
                input: (s..=origin).flat_map(features).collect(),
                window,
                num_features: 4,
                target: y[origin + 1..origin + 1 + horizon].to_vec(),
                future_clear_sky: cs[origin + 1..origin + 1 + horizon].to_vec(),
                origin,
                origin_timestamp: start + origin as i64,
            }
        })
        .collect()
}

fn calibration() -> Outcome {
    let (window, horizon) = (24, 36);
    let train_set = calibration_windows(0, 12_000, window, horizon, 4, 1);
    let val_set = calibration_windows(20_000, 10_900, window, horizon, horizon, 2);
    let mut spec = ModelSpec::new(HeadKind::Gaussian, 4);
    spec.layers = 1;
    spec.hidden = 8;
    spec.window = window;
    spec.learning_rate = 1e-2;
    spec.seed = 12;
    let config = TrainConfig { max_epochs: 60, patience: 10, ..Default::default() };
    let outcome = train(&spec, &config, &train_set, &val_set).map_err(|e| e.to_string())?;
    let out = outcome.model.predict(&val_set).map_err(|e| e.to_string())?;
    let y: Vec<f64> = val_set.iter().flat_map(|s| s.target.iter().copied()).collect();
    let coverages = default_coverages();
    let report = CalibrationReport::compute(&y, &out, &coverages, &default_reliability_grid()).map_err(|e| e.to_string())?;
    let worst = report.picp.iter().zip(&coverages).map(|(p, c)| (p - c).abs()).fold(0.0, f64::max);
    let picps: Vec<String> = report.picp.iter().map(|p| format!("{p:.3}")).collect();
    check(
        y.len() >= 10_000 && report.ace < 0.05 && worst <= 0.03,
        format!(
            "N = {}, ACE {:.4}, max |PICP - c| {worst:.4}, PICP [{}], best epoch {}",
            y.len(),
            report.ace,
            picps.join(", "),
            outcome.best_epoch
        ),
    )
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> Result<Vec<String>, String> {
    run(std::iter::once("irradiance").chain(args.iter().copied())).map_err(|e| format!("irradiance {}: {e}", args.join(" ")))
}

fn baseline_ordering() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = s(dir.path());
    let data = s(&dir.path().join("dataset.csv"));
    cli(&["--seed", "1", "--out", &out, "synth", "--years", "5", "--rho", "0.7"])?;
    let shared = ["--window", "24", "--lr", "3e-3", "--stride", "3", "--epochs", "30", "--patience", "5"];
    let mut lstm =
        vec!["--seed", "1", "--out", &out, "train", "--data", &data, "--layers", "1", "--hidden", "16", "--name", "lstm"];
    lstm.extend(shared);
    cli(&lstm)?;
    let mut mlp = vec!["--seed", "1", "--out", &out, "train", "--data", &data, "--backbone", "mlp", "--name", "mlp"];
    mlp.extend(shared);
    cli(&mlp)?;
    let lstm_ck = s(&dir.path().join("lstm.ckpt"));
    let mlp_ck = s(&dir.path().join("mlp.ckpt"));
    cli(&[
        "--out",
        &out,
        "eval",
        "--data",
        &data,
        "--checkpoint",
        &lstm_ck,
        "--checkpoint",
        &mlp_ck,
        "--baseline",
        "smart-persistence",
    ])?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let rmse = |name: &str| {
        report["models"].as_array().unwrap().iter().find(|m| m["model"] == name).and_then(|m| m["rmse"].as_f64()).unwrap()
    };
    let (l, m, p) = (rmse("lstm"), rmse("mlp"), rmse("smart-persistence"));
    check(l < p && m > l, format!("test RMSE W/m²: LSTM {l:.3}, smart persistence {p:.3}, single-channel MLP {m:.3}"))
}

fn persistence_exactness() -> Outcome {
    let cfg = SyntheticConfig { year_count: 2, cloud_floor: 1.0, cloud_autocorrelation: 0.0, seed: 5, ..Default::default() };
    let ds = synthesize_dataset(&cfg).map_err(|e| e.to_string())?;
    let windows = make_windows(&ds, 24, 36, 1).map_err(|e| e.to_string())?;
    let pred = smart_persistence_for_windows(&ds, &windows).map_err(|e| e.to_string())?;
    let y: Vec<f64> = windows.iter().flat_map(|w| w.target.iter().copied()).collect();
    let worst = y.iter().zip(&pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(worst == 0.0, format!("max |error| {worst:e} over {} forecasts", y.len()))
}

fn pinball_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let sample: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..1.0) * rng.random_range(0.0..1.0)).collect();
    let mut sorted = sample.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[99]);
    let step = (hi - lo) / 999.0;
    let candidates: Vec<f64> = (0..1000).map(|i| lo + i as f64 * step).collect();
    let mut worst = 0.0_f64;
    for q in [0.05, 0.1, 0.25, 0.333, 0.5, 0.667, 0.75, 0.9, 0.95] {
        let set = QuantileSet::new(vec![q]).map_err(|e| e.to_string())?;
        let best = candidates
            .iter()
            .map(|&c| (c, pinball(&sample, &vec![c; 100], &set).unwrap()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        // Empirical q-quantile: every value between the ⌈nq⌉-th and the
        // (⌊nq⌋+1)-th order statistics minimizes the empirical risk.
        let nq = 100.0 * q;
        let (a, b) = (sorted[(nq.ceil() as usize).max(1) - 1], sorted[(nq.floor() as usize).min(99)]);
        let gap = if best < a {
            a - best
        } else if best > b {
            best - b
        } else {
            0.0
        };
        worst = worst.max(gap / step);
    }
    check(worst <= 1.0, format!("largest distance from the empirical quantile {worst:.3} grid steps over 9 levels"))
}

fn params_fixture(head: HeadKind) -> Result<ForecastOutput, String> {
    let mut spec = small_spec(head);
    spec.horizon = 6;
    let model = Model::new(spec.clone()).map_err(|e| e.to_string())?;
    model.predict(&random_samples(&spec, 20, 8)).map_err(|e| e.to_string())
}

fn loss_metric_consistency() -> Outcome {
    let q = QuantileSet::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0_f64;
    for head in [HeadKind::Gaussian, HeadKind::JohnsonSU, HeadKind::JohnsonSB, HeadKind::Weibull] {
        let out = params_fixture(head)?;
        let ForecastOutput::Params { values, .. } = &out else { return Err(format!("{head} did not emit parameters")) };
        let y: Vec<f64> = (0..values.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let extracted: Vec<f64> = values.iter().flat_map(|d| q.levels().iter().map(move |&p| d.quantile(p))).collect();
        let via_losses = pinball(&y, &extracted, &q).map_err(|e| e.to_string())?;
        let via_metrics = quantile_loss(&y, &out, &q).map_err(|e| e.to_string())?;
        let by_hand = y
            .iter()
            .enumerate()
            .flat_map(|(i, &yi)| q.levels().iter().enumerate().map(move |(k, &p)| (i, k, p, yi)))
            .map(|(i, k, p, yi)| pinball_term(p, yi - extracted[i * q.len() + k]))
            .sum::<f64>()
            / extracted.len() as f64;
        worst = worst.max((via_metrics - via_losses).abs()).max((via_losses - by_hand).abs());
    }
    check(worst <= 1e-10, format!("max difference {worst:.1e} across the four distribution heads"))
}

fn injection_contract() -> Outcome {
    let mut spec = ModelSpec::new(HeadKind::Deterministic, 5);
    spec.hidden = 8;
    spec.window = 12;
    spec.seed = 3;
    let mut model = Model::new(spec.clone()).map_err(|e| e.to_string())?;
    let data = random_samples(&spec, 8, 21);
    let point = |out: ForecastOutput| match out {
        ForecastOutput::Point { values, .. } => values,
        _ => unreachable!(),
    };
    model.set_alpha(0.0);
    let base = point(model.predict(&data).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut perturbed = data.clone();
    for s in &mut perturbed {
        s.future_clear_sky.iter_mut().for_each(|c| *c = rng.random_range(-1e3..1e3));
    }
    let invariant = point(model.predict(&perturbed).map_err(|e| e.to_string())?) == base;
    model.set_alpha(1.0);
    model.zero_head();
    let out = point(model.predict(&data).map_err(|e| e.to_string())?);
    let cs: Vec<f64> = data.iter().flat_map(|s| s.future_clear_sky.iter().copied()).collect();
    let exact = out == cs;
    check(
        invariant && exact,
        format!("α = 0 invariant to clear sky: {invariant}; α = 1 with zero head reproduces clear sky exactly: {exact}"),
    )
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = s(dir.path());
    let data = s(&dir.path().join("dataset.csv"));
    let ck = s(&dir.path().join("g.ckpt"));
    let pipeline = || -> Result<(Vec<u8>, Vec<u8>), String> {
        cli(&["--seed", "4", "--out", &out, "synth", "--years", "3"])?;
        cli(&[
            "--seed", "4", "--out", &out, "train", "--data", &data, "--head", "mle-g", "--layers", "1", "--hidden", "8",
            "--window", "24", "--lr", "3e-3", "--stride", "6", "--epochs", "4", "--name", "g",
        ])?;
        cli(&["--seed", "4", "--out", &out, "eval", "--data", &data, "--checkpoint", &ck, "--baseline", "smart-persistence"])?;
        let read = |f: &str| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string());
        let reports = (read("report.json")?, read("report.csv")?);
        for f in ["dataset.csv", "g.ckpt", "g_training_log.csv", "report.json", "report.csv"] {
            std::fs::remove_file(dir.path().join(f)).map_err(|e| e.to_string())?;
        }
        Ok(reports)
    };
    let first = pipeline()?;
    let second = pipeline()?;
    check(
        first == second,
        format!(
            "report.json ({} bytes) and report.csv ({} bytes) identical across runs: {}",
            first.0.len(),
            first.1.len(),
            first == second
        ),
    )
}
