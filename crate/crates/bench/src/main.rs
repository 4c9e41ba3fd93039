use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use htfmlp::forecast::{Predictor, PredictorSpec};
use htfmlp::pacf::{acf, pacf, select_lag_count};
use htfmlp::series::{seasonal_profile, stationarize};
use htfmlp_bench::config::ExperimentConfig;
use htfmlp_bench::data::{load_csv, save_csv, write_csv};
use htfmlp_bench::error::{BenchError, Result};
use htfmlp_bench::experiment::{run_cell, run_experiment};
use htfmlp_bench::report::Report;
use htfmlp_bench::synthetic::{generate_synthetic, Preset};

#[derive(Parser)]
#[command(name = "htfmlp", version, about = "One-hour-ahead forecasting benchmark for seasonal hourly series")]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Years held out for testing; overrides the config file.
    #[arg(long, global = true)]
    test_years: Option<usize>,
    /// Worker threads for grid cells; overrides the config file.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic preset series as CSV.
    Generate {
        #[arg(long, default_value = "wind")]
        preset: String,
        #[arg(long, default_value_t = 4)]
        years: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print ACF and PACF of a series and the selected lag count.
    Pacf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 24)]
        max_lag: usize,
        /// Divide out the seasonal profile first.
        #[arg(long)]
        stationarize: bool,
    },
    /// Train and evaluate one predictor on one series.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Predictor name such as `HTF-MLP-s-t` or `P`.
        #[arg(long, default_value = "HTF-MLP")]
        predictor: String,
        /// Save the trained predictor here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run the full grid from `--config`.
    Bench {
        /// Also write the report here, in `--format`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a saved CSV report.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { preset, years, out } => {
            let preset: Preset = preset.parse()?;
            let series = generate_synthetic(&preset.config(*years, cli.seed.unwrap_or(0)))?;
            match out {
                Some(path) => save_csv(&series, path),
                None => write_csv(&series, std::io::stdout().lock()),
            }
        }
        Command::Pacf { input, max_lag, stationarize: s } => {
            let cfg = experiment_config(cli, false)?;
            let mut series = load_csv(input)?;
            if *s {
                series = stationarize(&series, &seasonal_profile(&series)?);
            }
            let x = series.values();
            let r = acf(x, *max_lag)?;
            let phi = pacf(x, *max_lag)?;
            let lb = &cfg.mlp.lag_bounds;
            let p = select_lag_count(x, lb.max_lag, lb.min_p, lb.max_p)?;
            let mut out = std::io::stdout().lock();
            let w = |e| BenchError::io("stdout", e);
            if cli.format == Format::Csv {
                writeln!(out, "lag,acf,pacf").map_err(w)?;
                for k in 0..=*max_lag {
                    writeln!(out, "{k},{},{}", r.at(k), phi.at(k)).map_err(w)?;
                }
            } else {
                writeln!(out, "{:>4}  {:>8}  {:>8}", "lag", "acf", "pacf").map_err(w)?;
                for k in 0..=*max_lag {
                    writeln!(out, "{k:>4}  {:>8.4}  {:>8.4}", r.at(k), phi.at(k)).map_err(w)?;
                }
                writeln!(out, "significance band: ±{:.4}", phi.significance_band()).map_err(w)?;
                writeln!(out, "selected p = {p} (bounds [{}, {}])", lb.min_p, lb.max_p).map_err(w)?;
            }
            Ok(())
        }
        Command::Train { input, predictor, save } => {
            let cfg = experiment_config(cli, false)?;
            let spec = PredictorSpec::from_name(predictor)?;
            let series = load_csv(input)?;
            let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let (trained, result) = run_cell(&cfg, &series, &name, &spec)?;
            println!("series: {name}");
            println!("predictor: {}", result.predictor_name);
            if let Predictor::Mlp(m) = &trained {
                println!("lags: {}", m.lag_count);
                println!("hidden nodes: {} ({} tanh')", m.network.n_hidden(), m.network.n_non_bijective());
                println!("selected seed: {} (validation nRMSE {:.4})", m.seed_info.selected_seed, m.seed_info.validation_nrmse);
                if let Some(reason) = m.stop_reason {
                    println!("epochs: {} (stopped: {reason:?})", m.epochs_run);
                }
            }
            println!("test nRMSE: {:.4} over {} forecasts", result.nrmse, result.n_forecasts);
            if let Some(path) = save {
                std::fs::write(path, trained.to_bytes()).map_err(|e| BenchError::io(path, e))?;
            }
            Ok(())
        }
        Command::Bench { out } => {
            let cfg = experiment_config(cli, true)?;
            let report = run_experiment(&cfg)?;
            if let Some(path) = &cfg.output_csv {
                write_file(path, report.to_csv_string())?;
            }
            if let Some(path) = &cfg.output_text {
                write_file(path, report.to_text())?;
            }
            emit(&report, cli.format, out.as_deref())
        }
        Command::Report { input } => emit(&Report::load_csv(input)?, cli.format, None),
    }
}

/// Loads `--config` (required for a full grid) and applies flag overrides.
fn experiment_config(cli: &Cli, full_grid: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None if full_grid => return Err(BenchError::Invalid("bench needs --config".into())),
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(y) = cli.test_years {
        cfg.test_years = y;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if full_grid {
        cfg.validate()?;
    } else {
        cfg.validate_settings()?;
    }
    Ok(cfg)
}

fn emit(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    let body = match format {
        Format::Csv => report.to_csv_string(),
        Format::Text => report.to_text(),
    };
    match path {
        Some(p) => write_file(p, body),
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| BenchError::io("stdout", e)),
    }
}

fn write_file(path: &Path, body: String) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| BenchError::io(path, e))
}
