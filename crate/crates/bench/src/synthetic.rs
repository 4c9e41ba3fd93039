//! Seeded synthetic hourly series: daily and annual sinusoids plus AR(1)
//! noise, optionally clipped at zero.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use htfmlp::series::{TimeSeries, HOURS_PER_YEAR, PERIOD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_years: usize,
    pub base_level: f64,
    pub daily_amplitude: f64,
    pub annual_amplitude: f64,
    pub ar_coefficient: f64,
    /// Standard deviation of the AR(1) innovations.
    pub noise_sigma: f64,
    pub clip_nonnegative: bool,
    pub seed: u64,
    /// Phase offsets; the defaults put the daily peak at hour 12 and the
    /// annual peak mid-year.
    pub daily_phase: f64,
    pub annual_phase: f64,
    pub start_phase: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_years: 1,
            base_level: 1.0,
            daily_amplitude: 0.0,
            annual_amplitude: 0.0,
            ar_coefficient: 0.0,
            noise_sigma: 0.0,
            clip_nonnegative: false,
            seed: 0,
            daily_phase: -PI / 2.0,
            annual_phase: -PI / 2.0,
            start_phase: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Invalid(m.to_string()));
        if self.n_years < 1 {
            return bad("synthetic series need at least one year");
        }
        if self.daily_amplitude < 0.0 || self.annual_amplitude < 0.0 {
            return bad("amplitudes must be nonnegative");
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return bad("AR coefficient must lie in (-1, 1)");
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return bad("noise sigma must be nonnegative");
        }
        if !(1..=PERIOD).contains(&self.start_phase) {
            return bad("start phase must lie in 1..=24");
        }
        Ok(())
    }
}

/// Stand-ins for the four meteorological series, tuned to their variation
/// coefficients (irradiation 1.5, humidity 0.2, temperature 0.4, wind 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Irradiation,
    Humidity,
    Temperature,
    Wind,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Irradiation, Preset::Humidity, Preset::Temperature, Preset::Wind];

    pub fn target_vc(self) -> f64 {
        match self {
            Preset::Irradiation => 1.5,
            Preset::Humidity => 0.2,
            Preset::Temperature => 0.4,
            Preset::Wind => 0.5,
        }
    }

    pub fn config(self, n_years: usize, seed: u64) -> SyntheticConfig {
        let (base_level, daily_amplitude, annual_amplitude, ar_coefficient, noise_sigma, clip) = match self {
            // Negative base shortens the clipped "day" to about ten hours.
            Preset::Irradiation => (-180.0, 600.0, 150.0, 0.7, 40.0, true),
            Preset::Humidity => (70.0, 10.0, 6.0, 0.95, 3.5, false),
            Preset::Temperature => (15.0, 5.0, 5.5, 0.95, 0.9, false),
            Preset::Wind => (5.0, 1.0, 0.6, 0.92, 0.95, true),
        };
        SyntheticConfig {
            n_years,
            base_level,
            daily_amplitude,
            annual_amplitude,
            ar_coefficient,
            noise_sigma,
            clip_nonnegative: clip,
            seed,
            ..Default::default()
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Irradiation => "irradiation",
            Preset::Humidity => "humidity",
            Preset::Temperature => "temperature",
            Preset::Wind => "wind",
        })
    }
}

impl FromStr for Preset {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irradiation" | "solar" => Ok(Preset::Irradiation),
            "humidity" => Ok(Preset::Humidity),
            "temperature" => Ok(Preset::Temperature),
            "wind" => Ok(Preset::Wind),
            _ => Err(BenchError::Invalid(format!("unknown preset {s:?}"))),
        }
    }
}

/// `x(k) = base + A_d sin(2π·phase/24 + φ_d) + A_a sin(2π·k/8760 + φ_a) + e(k)`
/// with `e` a stationary AR(1) process, `k` counted from 0.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let n = cfg.n_years * HOURS_PER_YEAR;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let a = cfg.ar_coefficient;
    let mut e = draw() * cfg.noise_sigma / (1.0 - a * a).sqrt();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            e = a * e + cfg.noise_sigma * draw();
        }
        let phase = (cfg.start_phase - 1 + k) % PERIOD + 1;
        let daily = cfg.daily_amplitude * (2.0 * PI * phase as f64 / PERIOD as f64 + cfg.daily_phase).sin();
        let annual = cfg.annual_amplitude * (2.0 * PI * k as f64 / HOURS_PER_YEAR as f64 + cfg.annual_phase).sin();
        let mut x = cfg.base_level + daily + annual + e;
        if cfg.clip_nonnegative {
            x = x.max(0.0);
        }
        values.push(x);
    }
    Ok(TimeSeries::new(values, cfg.start_phase)?)
}
