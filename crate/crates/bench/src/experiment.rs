//! Runs the series × predictor grid.

use htfmlp::forecast::{evaluate_predictor, EvaluationResult, Predictor, PredictorSpec};
use htfmlp::metrics::variation_coefficient;
use htfmlp::series::{self, TimeSeries};
use htfmlp::trainer::TrainConfig;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, SeriesData};
use crate::data::load_csv;
use crate::error::{BenchError, Result};
use crate::report::{Cell, CellOutcome, Report, SeriesInfo};
use crate::synthetic::{generate_synthetic, SyntheticConfig};

/// Materializes the `index`-th series of the experiment.
pub fn load_series(cfg: &ExperimentConfig, index: usize) -> Result<TimeSeries> {
    match &cfg.series[index].data {
        SeriesData::Synthetic { config, .. } => {
            let seed = cfg.series_seed(index).expect("synthetic series have seeds");
            generate_synthetic(&SyntheticConfig { seed, ..config.clone() })
        }
        SeriesData::Csv(path) => load_csv(path),
    }
}

/// Training settings with the master seed as the restart base seed.
pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig { base_seed: cfg.seed, ..cfg.train.clone() }
}

/// Splits, builds and evaluates one cell.
pub fn run_cell(
    cfg: &ExperimentConfig,
    series: &TimeSeries,
    series_name: &str,
    spec: &PredictorSpec,
) -> Result<(Predictor, EvaluationResult)> {
    let (learn, test) = series::split_learn_test(series, cfg.test_years)?;
    let predictor = Predictor::build(&learn, spec, &train_config(cfg), &cfg.mlp)?;
    let result = evaluate_predictor(&predictor, &test, &learn, series_name)?;
    Ok((predictor, result))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::Invalid(format!("thread pool: {e}")))?;

    let loaded: Vec<std::result::Result<TimeSeries, String>> = (0..cfg.series.len())
        .map(|k| load_series(cfg, k).map_err(|e| e.to_string()))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.series.len())
        .flat_map(|s| (0..cfg.predictors.len()).map(move |p| (s, p)))
        .collect();

    // `collect` on an indexed parallel iterator keeps job order, so the
    // report does not depend on completion order.
    let cells: Vec<Cell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, p)| {
                let name = &cfg.series[s].name;
                let spec = &cfg.predictors[p];
                let outcome = match &loaded[s] {
                    Err(msg) => CellOutcome::Failed(msg.clone()),
                    Ok(series) => match run_cell(cfg, series, name, spec) {
                        Ok((_, r)) => CellOutcome::Ok {
                            nrmse: r.nrmse,
                            n_forecasts: r.n_forecasts,
                            seed: r.seed_info.map(|i| i.selected_seed),
                            validation_nrmse: r.seed_info.map(|i| i.validation_nrmse),
                        },
                        Err(e) => CellOutcome::Failed(e.to_string()),
                    },
                };
                Cell { series: name.clone(), predictor: spec.name(), outcome }
            })
            .collect()
    });

    let series = cfg
        .series
        .iter()
        .zip(&loaded)
        .map(|(src, data)| SeriesInfo {
            name: src.name.clone(),
            vc: data.as_ref().ok().and_then(|s| variation_coefficient(s.values()).ok()),
        })
        .collect();
    Ok(Report {
        series,
        predictors: cfg.predictors.iter().map(PredictorSpec::name).collect(),
        cells,
        metadata: metadata(cfg),
    })
}

fn metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let tc = &cfg.train;
    let lb = &cfg.mlp.lag_bounds;
    vec![
        ("seed".into(), cfg.seed.to_string()),
        ("test years".into(), cfg.test_years.to_string()),
        (
            "training".into(),
            format!(
                "Levenberg-Marquardt, max {} epochs, early stop after {} validation fails, {:.0}% validation tail",
                tc.max_epochs,
                tc.max_fail,
                tc.validation_fraction * 100.0
            ),
        ),
        (
            "restart selection".into(),
            format!(
                "best of {} restarts by validation nRMSE; test nRMSE is never used to pick a restart",
                tc.n_restarts
            ),
        ),
        ("lag bounds".into(), format!("p in [{}, {}], PACF up to lag {}", lb.min_p, lb.max_p, lb.max_lag)),
    ]
}
