//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p htfmlp-bench --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use htfmlp::error::Result as CoreResult;
use htfmlp::forecast::{evaluate_predictor, MlpOptions, Predictor, PredictorKind, PredictorSpec};
use htfmlp::metrics::variation_coefficient;
use htfmlp::network::{combined_response, forward, init_weights, jacobian_flat, ConnectionMask, NetworkConfig, Parameters};
use htfmlp::pacf::{pacf, select_lag_count};
use htfmlp::series::{restore, seasonal_profile, split_learn_test, stationarize, TimeSeries, HOURS_PER_YEAR};
use htfmlp::trainer::{lm_step, train, train_with_monitor, StopReason, SupervisedSet, TrainConfig, ValidationMonitor};
use htfmlp_bench::config::{ExperimentConfig, SeriesData, SeriesSource};
use htfmlp_bench::experiment::run_experiment;
use htfmlp_bench::report::Report;
use htfmlp_bench::synthetic::{generate_synthetic, Preset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut bench_report: Option<Report> = None;

    results.push(run(1, "gradient correctness", Some(10), gradient_correctness));
    results.push(run(2, "PACF oracle equivalence", Some(10), pacf_oracle));
    results.push(run(3, "lag selection recovers AR order", Some(10), lag_selection));
    results.push(run(4, "Levenberg-Marquardt sanity", Some(60), lm_sanity));
    results.push(run(5, "early stopping", None, early_stopping));
    results.push(run(6, "zero-mix reduction to all-tanh network", None, zero_mix_reduction));
    results.push(run(7, "combined-response analysis", None, combined_response_analysis));
    results.push(run(8, "seasonal round trip", None, seasonal_round_trip));
    results.push(run(9, "directional benchmark", Some(15 * 60), || directional_benchmark(&mut bench_report)));
    results.push(run(10, "variation coefficient calibration", None, vc_calibration));
    results.push(run(11, "determinism", None, determinism));
    results.push(run(12, "report fidelity", None, || report_fidelity(bench_report.as_ref())));

    let passed = results.iter().filter(|ok| **ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(id: usize, title: &str, limit_s: Option<u64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit_s) {
        (Ok(detail), Some(limit)) if elapsed > Duration::from_secs(limit) => {
            Err(format!("{detail}; took longer than {limit} s"))
        }
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{id:>2}] {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    outcome.is_ok()
}

// Criterion 1

fn finite_difference_jacobian(config: &NetworkConfig, params: &Parameters, inputs: &[Vec<f64>], h: f64) -> DMatrix<f64> {
    let base = params.to_flat();
    let mut fd = DMatrix::zeros(inputs.len(), base.len());
    for q in 0..base.len() {
        let (mut plus, mut minus) = (base.clone(), base.clone());
        plus[q] += h;
        minus[q] -= h;
        let pp = Parameters::from_flat(config, &plus).unwrap();
        let pm = Parameters::from_flat(config, &minus).unwrap();
        for (s, x) in inputs.iter().enumerate() {
            fd[(s, q)] = (forward(config, &pp, x).unwrap() - forward(config, &pm, x).unwrap()) / (2.0 * h);
        }
    }
    fd
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut columns = 0;
    for case in 0..20 {
        let mix = [0.0, 0.5, 1.0][case % 3];
        let n = rng.random_range(1..=4);
        let h = rng.random_range(1..=4);
        let mut config = NetworkConfig::new(n, h, mix).map_err(|e| e.to_string())?;
        if case % 2 == 1 {
            let mut bits: Vec<bool> = (0..n * h).map(|_| rng.random_bool(0.6)).collect();
            for j in 0..h {
                bits[j * n + rng.random_range(0..n)] = true;
            }
            config = config
                .with_mask(ConnectionMask::new(h, n, bits).unwrap())
                .map_err(|e| e.to_string())?;
        }
        let mut params = init_weights(&config, rng.random());
        for w in params.w_hidden.iter_mut().chain(params.w_out.iter_mut()) {
            *w *= 2.0;
        }
        let inputs: Vec<Vec<f64>> = (0..8).map(|_| (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
        let (analytic, _) = jacobian_flat(&config, &params, &inputs.concat()).map_err(|e| e.to_string())?;
        let fd = finite_difference_jacobian(&config, &params, &inputs, 1e-5);
        for q in 0..config.n_params() {
            let err = (analytic.column(q) - fd.column(q)).norm();
            let scale = analytic.column(q).norm().max(fd.column(q).norm());
            // Masked-off columns are zero in both.
            let rel = if scale < 1e-12 { err } else { err / scale };
            worst = worst.max(rel);
            columns += 1;
            ensure(rel <= 1e-6, || format!("case {case} column {q}: relative error {rel:.2e}"))?;
        }
    }
    Ok(format!("20 networks, {columns} columns, worst relative error {worst:.2e}"))
}

// Criterion 2

fn ar_process(coeffs: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 500;
    let mut x = vec![0.0; n + burn];
    for t in 0..x.len() {
        let e: f64 = StandardNormal.sample(&mut rng);
        x[t] = e + coeffs.iter().enumerate().filter(|(i, _)| t > *i).map(|(i, a)| a * x[t - 1 - i]).sum::<f64>();
    }
    x.split_off(burn)
}

/// Last coefficient of the order-`k` regression of the mean-removed series on
/// its own past, with the series zero-padded at both ends.
fn regression_coefficient(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let at = |i: isize| if i >= 0 && (i as usize) < n { x[i as usize] - mean } else { 0.0 };
    let rows = n + k;
    let design = DMatrix::from_fn(rows, k, |t, j| at(t as isize - 1 - j as isize));
    let target = DVector::from_fn(rows, |t, _| at(t as isize));
    design.svd(true, true).solve(&target, 1e-14).expect("svd solve")[k - 1]
}

fn pacf_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for s in 0..50u64 {
        let coeffs: Vec<f64> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(-0.4..0.4)).collect();
        let x = ar_process(&coeffs, 500, 100 + s);
        let phi = pacf(&x, 10).map_err(|e| e.to_string())?;
        for k in 1..=10 {
            let err = (phi.at(k) - regression_coefficient(&x, k)).abs();
            worst = worst.max(err);
            ensure(err <= 1e-8, || format!("series {s} lag {k}: |error| {err:.2e}"))?;
        }
    }
    Ok(format!("50 series x 10 lags, worst |error| {worst:.2e}"))
}

// Criterion 3

fn lag_selection() -> Outcome {
    let picks: Vec<usize> = (0..10)
        .map(|s| select_lag_count(&ar_process(&[0.5, -0.3, 0.2], 10_000, 300 + s), 12, 1, 12))
        .collect::<CoreResult<_>>()
        .map_err(|e| e.to_string())?;
    let hits = picks.iter().filter(|p| **p == 3).count();
    ensure(hits >= 9, || format!("p = 3 in only {hits} of 10 seeds: {picks:?}"))?;
    Ok(format!("p = 3 in {hits} of 10 seeds {picks:?}"))
}

// Criterion 4

fn lm_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
    let slope = 1.7;
    let jac = DMatrix::from_column_slice(x.len(), 1, &x);
    let residuals: Vec<f64> = x.iter().map(|v| slope * v).collect();
    let delta = lm_step(&jac, &residuals, 1e-12).map_err(|e| e.to_string())?;
    let err = (delta[0] - slope).abs();
    ensure(err <= 1e-8, || format!("one-step linear fit off by {err:.2e}"))?;

    let config = NetworkConfig::new(2, 2, 0.0).map_err(|e| e.to_string())?;
    let u: Vec<f64> = (0..=400).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for t in 1..=400 {
        inputs.extend([u[t], u[t - 1]]);
        targets.push(0.3 * u[t] + 0.1 * u[t - 1]);
    }
    let data = SupervisedSet::new(2, inputs, targets).map_err(|e| e.to_string())?;
    let (tr, val) = data.split_tail(0.15).map_err(|e| e.to_string())?;
    let tc = TrainConfig { max_epochs: 200, ..Default::default() };
    let sses: Vec<f64> = (0..6)
        .map(|seed| train(&config, &tr, &val, &tc, seed).map(|o| o.train_sse))
        .collect::<CoreResult<_>>()
        .map_err(|e| e.to_string())?;
    let good = sses.iter().filter(|s| **s < 1e-3).count();
    ensure(good >= 5, || format!("only {good} of 6 seeds reached SSE < 1e-3: {sses:?}"))?;
    Ok(format!("one-step error {err:.1e}; {good} of 6 seeds below SSE 1e-3"))
}

// Criterion 5

struct Scripted {
    scores: Vec<f64>,
    seen: Vec<Parameters>,
}

impl ValidationMonitor for Scripted {
    fn score(&mut self, _: &NetworkConfig, params: &Parameters) -> CoreResult<f64> {
        let k = self.seen.len();
        self.seen.push(params.clone());
        Ok(self.scores[k.min(self.scores.len() - 1)])
    }
}

fn early_stopping() -> Outcome {
    let mut scores = vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5];
    scores.extend((1..100).map(|k| 0.5 + 0.05 * k as f64));
    let mut monitor = Scripted { scores, seen: vec![] };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| (3.0 * v).sin() + 0.5 * v * v).collect();
    let data = SupervisedSet::new(1, x, y).map_err(|e| e.to_string())?;
    let config = NetworkConfig::new(1, 3, 0.5).map_err(|e| e.to_string())?;
    let tc = TrainConfig { max_epochs: 100, ..Default::default() };
    let out = train_with_monitor(&config, &data, &mut monitor, &tc, 1).map_err(|e| e.to_string())?;
    let fails: Vec<usize> = out.history.iter().map(|r| r.fails).collect();
    ensure(out.stop_reason == StopReason::EarlyStop, || format!("stopped with {:?}", out.stop_reason))?;
    ensure(fails.last() == Some(&3) && fails.iter().rev().take(3).eq([3, 2, 1].iter()), || {
        format!("fail counter history {fails:?}")
    })?;
    ensure(out.epochs_run == 8, || format!("ran {} epochs, expected 8", out.epochs_run))?;
    ensure(out.params == monitor.seen[5], || "returned parameters are not those of epoch 5".into())?;
    Ok(format!("stopped after epoch {} with fails {fails:?}; epoch-5 parameters returned", out.epochs_run))
}

// Criterion 6

fn zero_mix_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, h) = (5, 6);
    let config = NetworkConfig::new(n, h, 0.0).map_err(|e| e.to_string())?;
    let params = init_weights(&config, 9);
    let w1 = DMatrix::from_row_slice(h, n, &params.w_hidden);
    let b1 = DVector::from_column_slice(&params.b_hidden);
    let w2 = DVector::from_column_slice(&params.w_out);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let reference = w2.dot(&(&w1 * DVector::from_column_slice(&x) + &b1).map(f64::tanh)) + params.b_out;
        let got = forward(&config, &params, &x).map_err(|e| e.to_string())?;
        worst = worst.max((got - reference).abs());
    }
    ensure(worst <= 1e-12, || format!("worst |difference| {worst:.2e}"))?;
    Ok(format!("100 inputs, worst |difference| {worst:.2e}"))
}

// Criterion 7

fn combined_response_analysis() -> Outcome {
    for delta in [0.2, 0.5, 0.8, 1.2, 2.0, 5.0] {
        let v = combined_response(0.0, delta);
        ensure(v == 1.0, || format!("response at u = 0 for delta {delta} is {v}"))?;
    }
    let (peak, at) = (0..=200_000)
        .map(|k| -5.0 + k as f64 * 5e-5)
        .map(|u| (combined_response(u, 1.0), u))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let u_star = 0.5f64.atanh();
    ensure((peak - 1.25).abs() <= 1e-6, || format!("delta 1 peak {peak}"))?;
    ensure((at - u_star).abs() <= 1e-3, || format!("delta 1 peak at {at}, expected {u_star}"))?;
    ensure((combined_response(u_star, 1.0) - 1.25).abs() <= 1e-6, || "value at artanh(0.5) is not 1.25".into())?;
    // Largest drop below a running maximum on the delta = 2 grid.
    let mut running = f64::NEG_INFINITY;
    let mut drop: f64 = 0.0;
    for k in 0..=10_000 {
        let v = combined_response(-5.0 + k as f64 * 1e-3, 2.0);
        drop = drop.max(running - v);
        running = running.max(v);
    }
    ensure(drop > 1e-3, || "delta 2 response is monotonic on [-5, 5]".into())?;
    Ok(format!("delta 1 peak {peak:.9} at u = {at:.4}; delta 2 drops by {drop:.3} after rising"))
}

// Criterion 8

fn seasonal_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let len = rng.random_range(48..600);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(0.5..10.0)).collect();
        let series = TimeSeries::new(values, rng.random_range(1..=24)).map_err(|e| e.to_string())?;
        let profile = seasonal_profile(&series).map_err(|e| e.to_string())?;
        let back = restore(&stationarize(&series, &profile), &profile);
        for (a, b) in back.values().iter().zip(series.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("round trip error {worst:.2e}"))?;

    let values: Vec<f64> = (0..3 * HOURS_PER_YEAR)
        .map(|k| 10.0 + 5.0 * (2.0 * std::f64::consts::PI * ((k % 24) + 1) as f64 / 24.0).sin())
        .collect();
    let series = TimeSeries::new(values, 1).map_err(|e| e.to_string())?;
    let (learn, test) = split_learn_test(&series, 1).map_err(|e| e.to_string())?;
    let cp = Predictor::build(&learn, &PredictorSpec::corrected_persistence(), &TrainConfig::default(), &MlpOptions::default())
        .map_err(|e| e.to_string())?;
    let r = evaluate_predictor(&cp, &test, &learn, "periodic").map_err(|e| e.to_string())?;
    ensure(r.nrmse < 1e-6, || format!("corrected persistence nRMSE {:.2e}", r.nrmse))?;
    Ok(format!("20 series, worst round trip error {worst:.2e}; corrected persistence nRMSE {:.2e}", r.nrmse))
}

// Criterion 9

fn wind_experiment(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        test_years: 1,
        series: vec![SeriesSource {
            name: "wind".into(),
            data: SeriesData::Synthetic { config: Preset::Wind.config(4, 0), seed: None },
        }],
        predictors: PredictorSpec::standard_grid(),
        ..Default::default()
    }
}

fn directional_benchmark(keep: &mut Option<Report>) -> Outcome {
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let report = run_experiment(&wind_experiment(seed)).map_err(|e| e.to_string())?;
        let p = report.cell("wind", "P").and_then(|c| c.outcome.nrmse()).ok_or("persistence cell failed")?;
        let (best_name, best) = PredictorSpec::standard_grid()
            .iter()
            .filter(|s| s.kind == PredictorKind::Mlp)
            .filter_map(|s| report.cell("wind", &s.name()).and_then(|c| c.outcome.nrmse()).map(|v| (s.name(), v)))
            .fold((String::new(), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if best < p {
            wins += 1;
        }
        lines.push(format!("seed {seed}: P {p:.4} vs {best_name} {best:.4}"));
        if seed == 1 {
            *keep = Some(report);
        }
    }
    ensure(wins >= 4, || format!("best MLP beat persistence in only {wins} of 5 seeds; {}", lines.join("; ")))?;
    Ok(format!("best MLP below persistence in {wins} of 5 seeds; {}", lines.join("; ")))
}

// Criterion 10

fn vc_calibration() -> Outcome {
    let mut parts = Vec::new();
    for preset in Preset::ALL {
        let s = generate_synthetic(&preset.config(11, 10)).map_err(|e| e.to_string())?;
        let vc = variation_coefficient(s.values()).map_err(|e| e.to_string())?;
        let target = preset.target_vc();
        ensure((vc - target).abs() <= 0.25 * target, || format!("{preset} VC {vc:.3} vs target {target}"))?;
        parts.push(format!("{preset} {vc:.3} (target {target})"));
    }
    Ok(parts.join(", "))
}

// Criterion 11

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("exp.conf");
    std::fs::write(
        &config,
        "seed = 11\ntest_years = 1\nworkers = 2\n\
         [series]\nname = wind\npreset = wind\nyears = 2\n\
         [series]\nname = humidity\npreset = humidity\nyears = 2\n\
         [predictor]\nname = P\n[predictor]\nname = N-MLP-t\n[predictor]\nname = HTF-MLP-s-t\n",
    )
    .map_err(|e| e.to_string())?;
    let run_once = |out: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_htfmlp"))
            .args(["bench", "--format", "csv", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("bench exited with {status}"))?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let a = run_once("a.csv")?;
    let b = run_once("b.csv")?;
    ensure(a == b, || "reports differ between runs".into())?;
    let text = String::from_utf8_lossy(&a);
    ensure(text.starts_with("series,predictor,nrmse,n_forecasts,seed\n"), || "unexpected CSV header".into())?;
    let rows = text.lines().count() - 1;
    ensure(rows == 6 && !text.contains("error"), || format!("unexpected report:\n{text}"))?;
    Ok(format!("two runs, {} identical bytes, {rows} cells", a.len()))
}

// Criterion 12

fn report_fidelity(report: Option<&Report>) -> Outcome {
    let report = report.ok_or("no report from the directional benchmark")?;
    let text = report.to_text();
    let names: Vec<String> = PredictorSpec::standard_grid().iter().map(PredictorSpec::name).collect();
    let expected = ["P", "N-MLP", "HTF-MLP", "N-MLP-s", "HTF-MLP-s", "N-MLP-t", "HTF-MLP-t", "N-MLP-s-t", "HTF-MLP-s-t"];
    ensure(names == expected, || format!("grid names {names:?}"))?;
    let mut lines = text.lines().skip_while(|l| !l.starts_with("nRMSE"));
    lines.next();
    let header: Vec<&str> = lines.next().ok_or("missing grid header")?.split_whitespace().collect();
    ensure(header[1..] == expected, || format!("grid header {header:?}"))?;
    let row: Vec<&str> = lines.next().ok_or("missing grid row")?.split_whitespace().collect();
    ensure(row.len() == 10, || format!("grid row {row:?}"))?;
    let values: Vec<f64> = report.cells.iter().map(|c| c.outcome.nrmse().unwrap_or(f64::NAN)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    for (cell, v) in row[1..].iter().zip(&values) {
        let digits = cell.trim_end_matches('*');
        ensure(digits.len() == 5 && digits.as_bytes()[1] == b'.' && digits.parse::<f64>().is_ok(), || {
            format!("cell {cell:?} is not a 3-decimal value")
        })?;
        ensure(*digits == format!("{v:.3}"), || format!("cell {cell:?} does not render {v}"))?;
        ensure(cell.ends_with('*') == (*v == min), || format!("cell {cell:?} minimum marker is wrong"))?;
    }
    ensure(text.contains("Best configuration per series"), || "missing best-configuration table".into())?;
    Ok(format!("9 predictor columns, minimum {min:.3} marked"))
}
