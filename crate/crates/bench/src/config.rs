//! Experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys before the
//! first block header are global. Each `[series]` or `[predictor]` header
//! opens a new block whose keys follow it. See the README for the full key
//! list.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use htfmlp::forecast::{MlpOptions, PredictorKind, PredictorSpec};
use htfmlp::trainer::TrainConfig;

use crate::error::{BenchError, Result};
use crate::synthetic::{Preset, SyntheticConfig};

pub const DEFAULT_TEST_YEARS: usize = 2;
pub const DEFAULT_SERIES_YEARS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesData {
    /// Synthetic data; `seed: None` derives the seed from the master seed.
    Synthetic { config: SyntheticConfig, seed: Option<u64> },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSource {
    pub name: String,
    pub data: SeriesData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub series: Vec<SeriesSource>,
    pub predictors: Vec<PredictorSpec>,
    pub train: TrainConfig,
    pub mlp: MlpOptions,
    pub test_years: usize,
    pub workers: usize,
    pub output_csv: Option<PathBuf>,
    pub output_text: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            series: Vec::new(),
            predictors: Vec::new(),
            train: TrainConfig::default(),
            mlp: MlpOptions::default(),
            test_years: DEFAULT_TEST_YEARS,
            workers: 1,
            output_csv: None,
            output_text: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut block = Block::Global;
        let mut block_line = 0;
        let mut blocks: Vec<(usize, Block)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                let next = match line {
                    "[series]" => Block::Series(SeriesDraft::default()),
                    "[predictor]" => Block::Predictor(PredictorDraft::default()),
                    _ => return Err(config_err(line_no, format!("unknown block {line}"))),
                };
                blocks.push((block_line, std::mem::replace(&mut block, next)));
                block_line = line_no;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_err(line_no, "expected `key = value`"))?;
            if value.is_empty() {
                return Err(config_err(line_no, format!("missing value for {key}")));
            }
            let set = match &mut block {
                Block::Global => cfg.set_global(key, value, base_dir),
                Block::Series(d) => d.set(key, value, base_dir),
                Block::Predictor(d) => d.set(key, value),
            };
            set.map_err(|msg| config_err(line_no, msg))?;
        }
        blocks.push((block_line, block));

        for (line_no, b) in blocks {
            match b {
                Block::Global => {}
                Block::Series(d) => cfg.series.push(d.finish().map_err(|m| config_err(line_no, m))?),
                Block::Predictor(d) => cfg.predictors.push(d.finish().map_err(|m| config_err(line_no, m))?),
            }
        }
        if cfg.predictors.is_empty() {
            cfg.predictors = PredictorSpec::standard_grid();
        }
        // Grid presets may overlap; keep the first occurrence.
        let mut seen = Vec::new();
        cfg.predictors.retain(|p| {
            let fresh = !seen.contains(p);
            if fresh {
                seen.push(p.clone());
            }
            fresh
        });
        cfg.validate_settings()?;
        Ok(cfg)
    }

    fn set_global(&mut self, key: &str, value: &str, base_dir: &Path) -> std::result::Result<(), String> {
        let tc = &mut self.train;
        let lb = &mut self.mlp.lag_bounds;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "test_years" => self.test_years = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "max_epochs" => tc.max_epochs = parse(key, value)?,
            "mu_init" => tc.mu_init = parse(key, value)?,
            "mu_increase" => tc.mu_increase = parse(key, value)?,
            "mu_decrease" => tc.mu_decrease = parse(key, value)?,
            "mu_max" => tc.mu_max = parse(key, value)?,
            "max_fail" => tc.max_fail = parse(key, value)?,
            "restarts" => tc.n_restarts = parse(key, value)?,
            "validation_fraction" => tc.validation_fraction = parse(key, value)?,
            "min_p" => lb.min_p = parse(key, value)?,
            "max_p" => lb.max_p = parse(key, value)?,
            "max_lag" => lb.max_lag = parse(key, value)?,
            "hidden_includes_time_index" => self.mlp.hidden_includes_time_index = parse_bool(key, value)?,
            "scaled_non_bijective" => self.mlp.scaled_non_bijective = parse_bool(key, value)?,
            "output_csv" => self.output_csv = Some(base_dir.join(value)),
            "output_text" => self.output_text = Some(base_dir.join(value)),
            "grid" => match value {
                "standard" => self.predictors.extend(PredictorSpec::standard_grid()),
                "baselines" => self
                    .predictors
                    .extend([PredictorSpec::persistence(), PredictorSpec::corrected_persistence()]),
                _ => return Err(format!("unknown grid {value:?}; expected standard or baselines")),
            },
            _ => return Err(format!("unknown global key {key:?}")),
        }
        Ok(())
    }

    /// Full check before running a grid.
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(BenchError::Invalid("experiment needs at least one [series] block".into()));
        }
        if self.predictors.is_empty() {
            return Err(BenchError::Invalid("experiment needs at least one predictor".into()));
        }
        self.validate_settings()
    }

    /// Checks everything except the presence of series and predictors, so a
    /// settings-only file can drive single-cell commands.
    pub fn validate_settings(&self) -> Result<()> {
        if self.test_years == 0 {
            return Err(BenchError::Invalid("test_years must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(BenchError::Invalid("workers must be at least 1".into()));
        }
        let lb = &self.mlp.lag_bounds;
        if lb.min_p == 0 || lb.min_p > lb.max_p || lb.max_p > lb.max_lag {
            return Err(BenchError::Invalid("lag bounds need 1 <= min_p <= max_p <= max_lag".into()));
        }
        for (k, s) in self.series.iter().enumerate() {
            if self.series[..k].iter().any(|o| o.name == s.name) {
                return Err(BenchError::Invalid(format!("duplicate series name {:?}", s.name)));
            }
        }
        for (k, spec) in self.predictors.iter().enumerate() {
            spec.validate()?;
            if self.predictors[..k].contains(spec) {
                return Err(BenchError::Invalid(format!("duplicate predictor {}", spec.name())));
            }
        }
        self.train.validate()?;
        Ok(())
    }

    /// Seed of the `index`-th series, following the master seed unless pinned.
    pub fn series_seed(&self, index: usize) -> Option<u64> {
        match &self.series[index].data {
            SeriesData::Synthetic { seed, .. } => Some(seed.unwrap_or(self.seed.wrapping_add(index as u64))),
            SeriesData::Csv(_) => None,
        }
    }
}

fn config_err(line: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Config { line, msg: msg.into() }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("invalid boolean {value:?} for {key}")),
    }
}

enum Block {
    Global,
    Series(SeriesDraft),
    Predictor(PredictorDraft),
}

#[derive(Default)]
struct SeriesDraft {
    name: Option<String>,
    preset: Option<Preset>,
    csv: Option<PathBuf>,
    years: Option<usize>,
    seed: Option<u64>,
    overrides: Vec<(String, String)>,
}

impl SeriesDraft {
    fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> std::result::Result<(), String> {
        match key {
            "name" => self.name = Some(value.to_string()),
            "preset" => self.preset = Some(value.parse().map_err(|e: BenchError| e.to_string())?),
            "csv" => self.csv = Some(base_dir.join(value)),
            "years" => self.years = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "base_level" | "daily_amplitude" | "annual_amplitude" | "ar_coefficient" | "noise_sigma"
            | "clip_nonnegative" | "start_phase" => self.overrides.push((key.to_string(), value.to_string())),
            _ => return Err(format!("unknown series key {key:?}")),
        }
        Ok(())
    }

    fn finish(self) -> std::result::Result<SeriesSource, String> {
        let name = self.name.ok_or("series block needs a name")?;
        if name.contains(',') || name.contains('"') {
            return Err(format!("series name {name:?} may not contain commas or quotes"));
        }
        if let Some(path) = self.csv {
            if self.preset.is_some() || self.years.is_some() || self.seed.is_some() || !self.overrides.is_empty() {
                return Err("csv series take no generator keys".into());
            }
            return Ok(SeriesSource { name, data: SeriesData::Csv(path) });
        }
        let years = self.years.unwrap_or(DEFAULT_SERIES_YEARS);
        let mut config = match self.preset {
            Some(p) => p.config(years, 0),
            None => SyntheticConfig { n_years: years, ..Default::default() },
        };
        for (key, value) in &self.overrides {
            let key = key.as_str();
            match key {
                "base_level" => config.base_level = parse(key, value)?,
                "daily_amplitude" => config.daily_amplitude = parse(key, value)?,
                "annual_amplitude" => config.annual_amplitude = parse(key, value)?,
                "ar_coefficient" => config.ar_coefficient = parse(key, value)?,
                "noise_sigma" => config.noise_sigma = parse(key, value)?,
                "clip_nonnegative" => config.clip_nonnegative = parse_bool(key, value)?,
                "start_phase" => config.start_phase = parse(key, value)?,
                _ => unreachable!(),
            }
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(SeriesSource { name, data: SeriesData::Synthetic { config, seed: self.seed } })
    }
}

#[derive(Default)]
struct PredictorDraft {
    name: Option<String>,
    kind: Option<PredictorKind>,
    stationarized: bool,
    time_index: bool,
    mix: Option<f64>,
    time_index_only: bool,
    fields: bool,
}

impl PredictorDraft {
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        if key != "name" {
            self.fields = true;
        }
        match key {
            "name" => self.name = Some(value.to_string()),
            "kind" => {
                self.kind = Some(match value {
                    "persistence" => PredictorKind::Persistence,
                    "corrected_persistence" => PredictorKind::CorrectedPersistence,
                    "mlp" => PredictorKind::Mlp,
                    _ => return Err(format!("unknown predictor kind {value:?}")),
                })
            }
            "stationarized" => self.stationarized = parse_bool(key, value)?,
            "time_index" => self.time_index = parse_bool(key, value)?,
            "mix" => self.mix = Some(parse(key, value)?),
            "time_index_only" => self.time_index_only = parse_bool(key, value)?,
            _ => return Err(format!("unknown predictor key {key:?}")),
        }
        Ok(())
    }

    fn finish(self) -> std::result::Result<PredictorSpec, String> {
        let spec = match (self.name, self.fields) {
            (Some(_), true) => return Err("give either a predictor name or its fields, not both".into()),
            (Some(name), false) => PredictorSpec::from_name(&name).map_err(|e| e.to_string())?,
            (None, _) => match self.kind.ok_or("predictor block needs a name or a kind")? {
                PredictorKind::Persistence => PredictorSpec::persistence(),
                PredictorKind::CorrectedPersistence => PredictorSpec::corrected_persistence(),
                PredictorKind::Mlp => {
                    let spec = PredictorSpec::mlp(self.mix.unwrap_or(0.0), self.stationarized, self.time_index);
                    if self.time_index_only {
                        spec.with_time_index_only_mask()
                    } else {
                        spec
                    }
                }
            },
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}
