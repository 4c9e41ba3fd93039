//! Persistence baselines, the MLP predictor pipeline and one-step-ahead
//! evaluation.
//!
//! Predictor names follow the usual table labels: `P` (persistence), `CP`
//! (scale-corrected persistence), `N-MLP` (all-`tanh` hidden layer) and
//! `HTF-MLP` (half of the hidden nodes use `1 - tanh²`), with `-s` for
//! seasonally adjusted inputs and `-t` for the hour-of-prediction input.
//! Other mixes append `[mix=r]`; a trailing `*` marks networks whose
//! non-bijective nodes only see the time index.

use std::fmt;

use crate::error::{Error, Result};
use crate::metrics;
use crate::network::{self, ByteReader, ConnectionMask, NetworkConfig, Parameters};
use crate::pacf::{self, DEFAULT_MAX_P, DEFAULT_MIN_P};
use crate::series::{self, SeasonalProfile, TimeSeries};
use crate::trainer::{self, StopReason, SupervisedSet, TrainConfig};

/// Mix ratio of the plain `HTF-MLP` label.
pub const DEFAULT_HTF_MIX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Persistence,
    CorrectedPersistence,
    Mlp,
}

/// A predictor variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub stationarized: bool,
    pub time_index: bool,
    /// Fraction of hidden nodes using `1 - tanh²`.
    pub mix_ratio: f64,
    /// Non-bijective nodes connect to the time-index input only.
    pub mask_tanh_prime_to_time_index_only: bool,
}

impl PredictorSpec {
    pub fn persistence() -> Self {
        Self {
            kind: PredictorKind::Persistence,
            stationarized: false,
            time_index: false,
            mix_ratio: 0.0,
            mask_tanh_prime_to_time_index_only: false,
        }
    }

    pub fn corrected_persistence() -> Self {
        Self {
            kind: PredictorKind::CorrectedPersistence,
            ..Self::persistence()
        }
    }

    pub fn mlp(mix_ratio: f64, stationarized: bool, time_index: bool) -> Self {
        Self {
            kind: PredictorKind::Mlp,
            stationarized,
            time_index,
            mix_ratio,
            mask_tanh_prime_to_time_index_only: false,
        }
    }

    /// Wires the non-bijective nodes to the time-index input only.
    pub fn with_time_index_only_mask(mut self) -> Self {
        self.mask_tanh_prime_to_time_index_only = true;
        self
    }

    /// The nine variants of the standard comparison grid, `P` first.
    pub fn standard_grid() -> Vec<Self> {
        let mut grid = vec![Self::persistence()];
        for (s, t) in [(false, false), (true, false), (false, true), (true, true)] {
            grid.push(Self::mlp(0.0, s, t));
            grid.push(Self::mlp(DEFAULT_HTF_MIX, s, t));
        }
        grid
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return bad("mix ratio must lie in [0, 1]");
        }
        match self.kind {
            PredictorKind::Mlp => {
                if self.mask_tanh_prime_to_time_index_only && !(self.time_index && self.mix_ratio > 0.0) {
                    return bad("time-index-only wiring needs a time index input and a nonzero mix");
                }
                Ok(())
            }
            _ => {
                if self.stationarized
                    || self.time_index
                    || self.mix_ratio != 0.0
                    || self.mask_tanh_prime_to_time_index_only
                {
                    return bad("persistence predictors take no network options");
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            PredictorKind::Persistence => "P".into(),
            PredictorKind::CorrectedPersistence => "CP".into(),
            PredictorKind::Mlp => {
                let mut name = String::from(if self.mix_ratio == 0.0 { "N-MLP" } else { "HTF-MLP" });
                if self.stationarized {
                    name.push_str("-s");
                }
                if self.time_index {
                    name.push_str("-t");
                }
                if self.mask_tanh_prime_to_time_index_only {
                    name.push('*');
                }
                if self.mix_ratio != 0.0 && self.mix_ratio != DEFAULT_HTF_MIX {
                    name.push_str(&format!("[mix={}]", self.mix_ratio));
                }
                name
            }
        }
    }

    /// Inverse of [`PredictorSpec::name`].
    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognised predictor name {name:?}"));
        match name {
            "P" => return Ok(Self::persistence()),
            "CP" => return Ok(Self::corrected_persistence()),
            _ => {}
        }
        let (rest, mix) = match name.strip_suffix(']') {
            Some(r) => {
                let (head, m) = r.split_once("[mix=").ok_or_else(bad)?;
                let mix: f64 = m.parse().map_err(|_| bad())?;
                if mix == 0.0 || mix == DEFAULT_HTF_MIX || !(0.0..=1.0).contains(&mix) {
                    return Err(bad());
                }
                (head, Some(mix))
            }
            None => (name, None),
        };
        let (rest, masked) = match rest.strip_suffix('*') {
            Some(r) => (r, true),
            None => (rest, false),
        };
        let (rest, time_index) = match rest.strip_suffix("-t") {
            Some(r) => (r, true),
            None => (rest, false),
        };
        let (base, stationarized) = match rest.strip_suffix("-s") {
            Some(r) => (r, true),
            None => (rest, false),
        };
        let mix_ratio = match (base, mix) {
            ("N-MLP", None) => 0.0,
            ("HTF-MLP", None) => DEFAULT_HTF_MIX,
            ("HTF-MLP", Some(m)) => m,
            _ => return Err(bad()),
        };
        let spec = Self {
            kind: PredictorKind::Mlp,
            stationarized,
            time_index,
            mix_ratio,
            mask_tanh_prime_to_time_index_only: masked,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Hidden-layer composition, e.g. `80% tanh 20% (tanh)*'`.
    pub fn transfer_functions_label(&self) -> String {
        if self.kind != PredictorKind::Mlp {
            return "-".into();
        }
        let prime = if self.mask_tanh_prime_to_time_index_only { "(tanh)*'" } else { "(tanh)'" };
        let pct = (self.mix_ratio * 100.0).round() as u32;
        match pct {
            0 => "100% tanh".into(),
            100 => format!("100% {prime}"),
            p => format!("{}% tanh {p}% {prime}", 100 - p),
        }
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Bounds for PACF-based lag selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagBounds {
    pub min_p: usize,
    pub max_p: usize,
    /// Largest lag inspected by the PACF.
    pub max_lag: usize,
}

impl Default for LagBounds {
    fn default() -> Self {
        Self {
            min_p: DEFAULT_MIN_P,
            max_p: DEFAULT_MAX_P,
            max_lag: DEFAULT_MAX_P,
        }
    }
}

/// Pipeline options beyond the predictor variant itself.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpOptions {
    pub lag_bounds: LagBounds,
    /// Count the time-index input when sizing the hidden layer.
    pub hidden_includes_time_index: bool,
    /// Use the rescaled `2(1 - tanh²) - 1` non-bijective function.
    pub scaled_non_bijective: bool,
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            lag_bounds: LagBounds::default(),
            hidden_includes_time_index: true,
            scaled_non_bijective: false,
        }
    }
}

/// Min-max map of the learning-span range onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min || max.is_nan() || min.is_nan() {
            return Err(Error::ConstantSeries);
        }
        Ok(Self { min, max })
    }

    pub fn scale(&self, v: f64) -> f64 {
        2.0 * (v - self.min) / (self.max - self.min) - 1.0
    }

    pub fn unscale(&self, v: f64) -> f64 {
        self.min + (v + 1.0) * (self.max - self.min) / 2.0
    }
}

/// Restart that produced a trained network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedInfo {
    pub base_seed: u64,
    pub selected_seed: u64,
    /// Validation nRMSE of the selected restart, in training units.
    pub validation_nrmse: f64,
}

/// A trained MLP together with the transforms around it.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPredictor {
    pub spec: PredictorSpec,
    pub lag_count: usize,
    pub profile: Option<SeasonalProfile>,
    pub scaler: MinMaxScaler,
    pub network: NetworkConfig,
    pub params: Parameters,
    pub seed_info: SeedInfo,
    pub epochs_run: usize,
    pub stop_reason: Option<StopReason>,
}

impl MlpPredictor {
    /// Network input for forecasting `x(t + 1)` from `history`.
    fn input(&self, history: &TimeSeries, t: usize) -> Result<Vec<f64>> {
        let tdl = series::make_tdl(history, self.lag_count, t)?;
        let mut x: Vec<f64> = tdl
            .lags
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let v = match &self.profile {
                    Some(p) => v / p.coefficient(history.phase(t - k)),
                    None => *v,
                };
                self.scaler.scale(v)
            })
            .collect();
        if self.spec.time_index {
            x.push(series::time_index(history.phase(t + 1))?);
        }
        Ok(x)
    }
}

/// A ready-to-use one-step-ahead predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Persistence,
    CorrectedPersistence(SeasonalProfile),
    Mlp(Box<MlpPredictor>),
}

/// Anything that forecasts `x(t + 1)` from samples `1..=t` of a history.
pub trait Forecaster {
    fn name(&self) -> String;

    /// Samples of history needed before the first forecast.
    fn required_context(&self) -> usize;

    /// Forecast of `x(t + 1)`; may read only samples `<= t` of `history`.
    fn forecast(&self, history: &TimeSeries, t: usize) -> Result<f64>;

    fn seed_info(&self) -> Option<SeedInfo> {
        None
    }
}

fn check_origin(history: &TimeSeries, t: usize, needed: usize) -> Result<()> {
    if t < needed.max(1) || t > history.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: needed.max(1),
            max: history.len(),
        });
    }
    Ok(())
}

impl Forecaster for Predictor {
    fn name(&self) -> String {
        self.spec().name()
    }

    fn required_context(&self) -> usize {
        match self {
            Predictor::Mlp(m) => m.lag_count,
            _ => 1,
        }
    }

    fn forecast(&self, history: &TimeSeries, t: usize) -> Result<f64> {
        check_origin(history, t, self.required_context())?;
        let x = history.values()[t - 1];
        Ok(match self {
            Predictor::Persistence => x,
            Predictor::CorrectedPersistence(profile) => {
                x * profile.coefficient(history.phase(t + 1)) / profile.coefficient(history.phase(t))
            }
            Predictor::Mlp(m) => {
                let out = network::forward(&m.network, &m.params, &m.input(history, t)?)?;
                let v = m.scaler.unscale(out);
                match &m.profile {
                    Some(p) => v * p.coefficient(history.phase(t + 1)),
                    None => v,
                }
            }
        })
    }

    fn seed_info(&self) -> Option<SeedInfo> {
        match self {
            Predictor::Mlp(m) => Some(m.seed_info),
            _ => None,
        }
    }
}

impl Predictor {
    pub fn spec(&self) -> PredictorSpec {
        match self {
            Predictor::Persistence => PredictorSpec::persistence(),
            Predictor::CorrectedPersistence(_) => PredictorSpec::corrected_persistence(),
            Predictor::Mlp(m) => m.spec.clone(),
        }
    }

    /// Builds any predictor variant from the learning span.
    pub fn build(learn: &TimeSeries, spec: &PredictorSpec, tc: &TrainConfig, options: &MlpOptions) -> Result<Self> {
        spec.validate()?;
        match spec.kind {
            PredictorKind::Persistence => Ok(Predictor::Persistence),
            PredictorKind::CorrectedPersistence => {
                Ok(Predictor::CorrectedPersistence(series::seasonal_profile(learn)?))
            }
            PredictorKind::Mlp => build_mlp_predictor(learn, spec, tc, options),
        }
    }
}

/// Persistence: forecasts `x(t + 1)` as `x(t)`, for `1 <= t < len`.
pub fn persistence_forecast(series: &TimeSeries, t: usize) -> Result<f64> {
    if t == 0 || t >= series.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: 1,
            max: series.len().saturating_sub(1),
        });
    }
    Predictor::Persistence.forecast(series, t)
}

/// Persistence rescaled by the ratio of the target and source hour
/// coefficients, for `1 <= t < len`.
pub fn corrected_persistence_forecast(series: &TimeSeries, profile: &SeasonalProfile, t: usize) -> Result<f64> {
    if t == 0 || t >= series.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: 1,
            max: series.len().saturating_sub(1),
        });
    }
    Predictor::CorrectedPersistence(profile.clone()).forecast(series, t)
}

/// Supervised pairs `TDL(t) -> x(t + 1)` in scaled units, optionally with
/// the time index of hour `t + 1` appended.
fn supervised_pairs(work: &TimeSeries, p: usize, time_index: bool, scaler: &MinMaxScaler) -> Result<SupervisedSet> {
    let n_inputs = p + usize::from(time_index);
    let n = work.len();
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot supply {p} lags and a target"
        )));
    }
    let mut inputs = Vec::with_capacity((n - p) * n_inputs);
    let mut targets = Vec::with_capacity(n - p);
    for t in p..n {
        let tdl = series::make_tdl(work, p, t)?;
        inputs.extend(tdl.lags.iter().map(|v| scaler.scale(*v)));
        if time_index {
            inputs.push(series::time_index(work.phase(t + 1))?);
        }
        targets.push(scaler.scale(work.values()[t]));
    }
    let half_range = (scaler.max - scaler.min) / 2.0;
    Ok(SupervisedSet::new(n_inputs, inputs, targets)?.with_target_map(half_range, scaler.min + half_range))
}

/// Trains an MLP predictor on the learning span.
///
/// Pipeline: optional seasonal adjustment with a learning-span profile, PACF
/// lag selection on the series the network sees, supervised pairs with an
/// optional hour-of-prediction input, min-max scaling to `[-1, 1]`, then
/// best-of-`n_restarts` Levenberg-Marquardt training.
pub fn build_mlp_predictor(
    learn: &TimeSeries,
    spec: &PredictorSpec,
    tc: &TrainConfig,
    options: &MlpOptions,
) -> Result<Predictor> {
    spec.validate()?;
    if spec.kind != PredictorKind::Mlp {
        return Err(Error::InvalidArgument(format!("{} is not an MLP predictor", spec.name())));
    }
    let profile = if spec.stationarized {
        Some(series::seasonal_profile(learn)?)
    } else {
        None
    };
    let work = match &profile {
        Some(p) => series::stationarize(learn, p),
        None => learn.clone(),
    };
    let bounds = options.lag_bounds;
    if work.len() <= bounds.max_lag {
        return Err(Error::InsufficientData(format!(
            "learning span of {} samples is too short for lag selection up to {}",
            work.len(),
            bounds.max_lag
        )));
    }
    let p = pacf::select_lag_count(work.values(), bounds.max_lag, bounds.min_p, bounds.max_p)?;
    let scaler = MinMaxScaler::fit(work.values())?;
    let data = supervised_pairs(&work, p, spec.time_index, &scaler)?;
    let (train_set, val_set) = data.split_tail(tc.validation_fraction)?;

    let n_inputs = data.n_inputs();
    let n_hidden = if options.hidden_includes_time_index { n_inputs } else { p };
    let mut config = NetworkConfig::new(n_inputs, n_hidden, spec.mix_ratio)?
        .with_time_index(spec.time_index)
        .with_scaled_non_bijective(options.scaled_non_bijective);
    if spec.mask_tanh_prime_to_time_index_only {
        let first_non_bijective = n_hidden - config.n_non_bijective();
        let bits = (0..n_hidden)
            .flat_map(|j| (0..n_inputs).map(move |i| j < first_non_bijective || i == n_inputs - 1))
            .collect();
        config = config.with_mask(ConnectionMask::new(n_hidden, n_inputs, bits)?)?;
    }

    let outcome = trainer::multi_restart_train(&config, &train_set, &val_set, tc)?;
    Ok(Predictor::Mlp(Box::new(MlpPredictor {
        spec: spec.clone(),
        lag_count: p,
        profile,
        scaler,
        network: config,
        params: outcome.params,
        seed_info: SeedInfo {
            base_seed: tc.base_seed,
            selected_seed: outcome.seed,
            validation_nrmse: outcome.validation_nrmse,
        },
        epochs_run: outcome.epochs_run,
        stop_reason: Some(outcome.stop_reason),
    })))
}

/// nRMSE of one predictor on one test span.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub predictor_name: String,
    pub series_name: String,
    pub nrmse: f64,
    pub n_forecasts: usize,
    pub seed_info: Option<SeedInfo>,
}

/// One-step-ahead forecasts of every test sample from observed history.
/// `warmup_context` must immediately precede `test`.
pub fn evaluate_predictor<F: Forecaster + ?Sized>(
    predictor: &F,
    test: &TimeSeries,
    warmup_context: &TimeSeries,
    series_name: &str,
) -> Result<EvaluationResult> {
    let needed = predictor.required_context();
    if warmup_context.len() < needed {
        return Err(Error::InsufficientContext {
            needed,
            available: warmup_context.len(),
        });
    }
    let history = warmup_context.concat(test)?;
    let offset = warmup_context.len();
    let predicted = (0..test.len())
        .map(|j| predictor.forecast(&history, offset + j))
        .collect::<Result<Vec<f64>>>()?;
    let nrmse = metrics::nrmse(&predicted, test.values())?;
    Ok(EvaluationResult {
        predictor_name: predictor.name(),
        series_name: series_name.to_string(),
        nrmse,
        n_forecasts: predicted.len(),
        seed_info: predictor.seed_info(),
    })
}

const PREDICTOR_MAGIC: &[u8; 4] = b"HTFP";
const PREDICTOR_VERSION: u16 = 1;

impl Predictor {
    /// Binary form: `b"HTFP"`, version `u16`, kind `u8`, flags `u8`
    /// (stationarized, time index, time-index-only wiring), mix ratio `f64`,
    /// profile flag `u8` plus 24 `f64` coefficients, and for MLPs: lag count
    /// `u32`, scaler min/max `f64`, base seed, selected seed `u64`, validation
    /// nRMSE `f64`, epochs run `u32`, then the network encoding. All little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.spec();
        let mut out = Vec::new();
        out.extend_from_slice(PREDICTOR_MAGIC);
        out.extend_from_slice(&PREDICTOR_VERSION.to_le_bytes());
        out.push(match spec.kind {
            PredictorKind::Persistence => 0,
            PredictorKind::CorrectedPersistence => 1,
            PredictorKind::Mlp => 2,
        });
        out.push(
            u8::from(spec.stationarized)
                | (u8::from(spec.time_index) << 1)
                | (u8::from(spec.mask_tanh_prime_to_time_index_only) << 2),
        );
        out.extend_from_slice(&spec.mix_ratio.to_le_bytes());
        let profile = match self {
            Predictor::CorrectedPersistence(p) => Some(p),
            Predictor::Mlp(m) => m.profile.as_ref(),
            Predictor::Persistence => None,
        };
        out.push(u8::from(profile.is_some()));
        for c in profile.into_iter().flat_map(|p| p.coefficients()) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        if let Predictor::Mlp(m) = self {
            out.extend_from_slice(&(m.lag_count as u32).to_le_bytes());
            out.extend_from_slice(&m.scaler.min.to_le_bytes());
            out.extend_from_slice(&m.scaler.max.to_le_bytes());
            out.extend_from_slice(&m.seed_info.base_seed.to_le_bytes());
            out.extend_from_slice(&m.seed_info.selected_seed.to_le_bytes());
            out.extend_from_slice(&m.seed_info.validation_nrmse.to_le_bytes());
            out.extend_from_slice(&(m.epochs_run as u32).to_le_bytes());
            out.extend(network::encode(&m.network, &m.params));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != PREDICTOR_MAGIC {
            return Err(Error::Decode("bad predictor magic".into()));
        }
        let version = r.u16()?;
        if version != PREDICTOR_VERSION {
            return Err(Error::Decode(format!("unsupported predictor version {version}")));
        }
        let kind = match r.take(1)?[0] {
            0 => PredictorKind::Persistence,
            1 => PredictorKind::CorrectedPersistence,
            2 => PredictorKind::Mlp,
            k => return Err(Error::Decode(format!("unknown predictor kind {k}"))),
        };
        let flags = r.take(1)?[0];
        let spec = PredictorSpec {
            kind,
            stationarized: flags & 1 != 0,
            time_index: flags & 2 != 0,
            mix_ratio: r.f64()?,
            mask_tanh_prime_to_time_index_only: flags & 4 != 0,
        };
        spec.validate()?;
        let profile = if r.take(1)?[0] != 0 {
            let coeffs = (0..series::PERIOD).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            Some(SeasonalProfile::new(coeffs)?)
        } else {
            None
        };
        let predictor = match kind {
            PredictorKind::Persistence => Predictor::Persistence,
            PredictorKind::CorrectedPersistence => Predictor::CorrectedPersistence(
                profile.ok_or_else(|| Error::Decode("corrected persistence without profile".into()))?,
            ),
            PredictorKind::Mlp => {
                let lag_count = r.u32()? as usize;
                let scaler = MinMaxScaler {
                    min: r.f64()?,
                    max: r.f64()?,
                };
                let base_seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
                let selected_seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
                let validation_nrmse = r.f64()?;
                let epochs_run = r.u32()? as usize;
                let (network, params) = network::decode_from(&mut r)?;
                if network.n_inputs() != lag_count + usize::from(spec.time_index) {
                    return Err(Error::Decode("network width does not match lag count".into()));
                }
                Predictor::Mlp(Box::new(MlpPredictor {
                    spec,
                    lag_count,
                    profile,
                    scaler,
                    network,
                    params,
                    seed_info: SeedInfo {
                        base_seed,
                        selected_seed,
                        validation_nrmse,
                    },
                    epochs_run,
                    stop_reason: None,
                }))
            }
        };
        if !r.is_done() {
            return Err(Error::Decode("trailing bytes after predictor".into()));
        }
        Ok(predictor)
    }
}
