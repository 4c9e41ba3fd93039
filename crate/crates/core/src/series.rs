//! Hourly time-series container and the transforms applied before modelling.
//!
//! Samples are addressed with 1-based indices `t = 1..=len`. Every sample
//! carries an hour-of-day phase in `1..=24`, derived from the phase of the
//! first sample.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Samples per seasonal cycle (one day of hourly data).
pub const PERIOD: usize = 24;

/// Samples per (non-leap) year of hourly data.
pub const HOURS_PER_YEAR: usize = 8760;

/// Lower clamp applied to seasonal coefficients before renormalization.
pub const EPSILON_COEFF: f64 = 1e-6;

/// Uniformly hourly-sampled scalar series with hour-of-day alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_phase: usize,
}

impl TimeSeries {
    /// Builds a series whose first sample falls on hour `start_phase`.
    pub fn new(values: Vec<f64>, start_phase: usize) -> Result<Self> {
        check_phase(start_phase)?;
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i + 1));
        }
        Ok(Self {
            values,
            start_phase,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start_phase(&self) -> usize {
        self.start_phase
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of sample `t` (1-based).
    pub fn value(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.len() {
            return Err(Error::IndexOutOfRange {
                index: t,
                min: 1,
                max: self.len(),
            });
        }
        Ok(self.values[t - 1])
    }

    /// Hour-of-day of sample `t` (1-based). Defined for any `t >= 1`,
    /// including positions past the end, so the phase of a forecast target
    /// is always available.
    pub fn phase(&self, t: usize) -> usize {
        debug_assert!(t >= 1);
        (self.start_phase - 1 + t - 1) % PERIOD + 1
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Samples `range` (1-based, inclusive) as a new series with phases kept.
    pub fn slice(&self, range: RangeInclusive<usize>) -> Result<Self> {
        let (start, end) = (*range.start(), *range.end());
        if start == 0 || end > self.len() || start > end {
            return Err(Error::IndexOutOfRange {
                index: if start == 0 { start } else { end },
                min: 1,
                max: self.len(),
            });
        }
        Ok(Self {
            values: self.values[start - 1..end].to_vec(),
            start_phase: self.phase(start),
        })
    }

    /// The last `n` samples.
    pub fn tail(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "tail of {n} samples from a series of length {}",
                self.len()
            )));
        }
        self.slice(self.len() - n + 1..=self.len())
    }

    /// Appends `next`, which must continue this series' hour-of-day sequence.
    pub fn concat(&self, next: &TimeSeries) -> Result<Self> {
        let expected = self.phase(self.len() + 1);
        if next.start_phase != expected {
            return Err(Error::InvalidArgument(format!(
                "series continues at hour {expected} but the appended span starts at hour {}",
                next.start_phase
            )));
        }
        let mut values = Vec::with_capacity(self.len() + next.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&next.values);
        Ok(Self {
            values,
            start_phase: self.start_phase,
        })
    }

    fn map_by_phase(&self, f: impl Fn(f64, usize) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(v, self.phase(k + 1)))
            .collect();
        Self {
            values,
            start_phase: self.start_phase,
        }
    }
}

/// Network input built from a tapped delay line: `[x(t), x(t-1), ..., x(t-p+1)]`
/// plus an optional hour-of-prediction index.
#[derive(Debug, Clone, PartialEq)]
pub struct LagVector {
    pub lags: Vec<f64>,
    pub time_index: Option<f64>,
}

impl LagVector {
    /// Number of network inputs this vector occupies.
    pub fn len(&self) -> usize {
        self.lags.len() + usize::from(self.time_index.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattens to the network input order: lags first, time index last.
    pub fn to_input(&self) -> Vec<f64> {
        let mut v = self.lags.clone();
        v.extend(self.time_index);
        v
    }

    pub fn with_time_index(mut self, index: f64) -> Self {
        self.time_index = Some(index);
        self
    }
}

/// Tapped delay line of `p` samples ending at sample `t` (1-based). The
/// supervised target paired with it is `x(t + 1)`.
pub fn make_tdl(series: &TimeSeries, p: usize, t: usize) -> Result<LagVector> {
    if p < 1 {
        return Err(Error::InvalidLagCount(p));
    }
    if t < p || t > series.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: p,
            max: series.len(),
        });
    }
    let lags = series.values[t - p..t].iter().rev().copied().collect();
    Ok(LagVector {
        lags,
        time_index: None,
    })
}

fn check_phase(phase: usize) -> Result<()> {
    if (1..=PERIOD).contains(&phase) {
        Ok(())
    } else {
        Err(Error::InvalidPhase(phase))
    }
}

/// Time-index input for an hour of the day: `phase / 24`.
pub fn time_index(phase: usize) -> Result<f64> {
    check_phase(phase)?;
    Ok(phase as f64 / PERIOD as f64)
}

/// Multiplicative hour-of-day coefficients with unit mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalProfile {
    coefficients: [f64; PERIOD],
}

impl SeasonalProfile {
    /// Validates coefficients indexed by phase (`coefficients[0]` is hour 1).
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let coefficients: [f64; PERIOD] = coefficients.try_into().map_err(|v: Vec<f64>| {
            Error::InvalidProfile(format!("expected {PERIOD} coefficients, got {}", v.len()))
        })?;
        if let Some(c) = coefficients.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "coefficient {c} is not strictly positive"
            )));
        }
        let mean = coefficients.iter().sum::<f64>() / PERIOD as f64;
        if (mean - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProfile(format!(
                "coefficient mean {mean} differs from 1"
            )));
        }
        Ok(Self { coefficients })
    }

    /// The all-ones profile.
    pub fn unit() -> Self {
        Self {
            coefficients: [1.0; PERIOD],
        }
    }

    pub fn period(&self) -> usize {
        PERIOD
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient for hour `phase` in `1..=24`.
    pub fn coefficient(&self, phase: usize) -> f64 {
        self.coefficients[phase - 1]
    }
}

/// Seasonal profile estimated over the whole series.
pub fn seasonal_profile(series: &TimeSeries) -> Result<SeasonalProfile> {
    seasonal_profile_window(series, 1..=series.len())
}

/// Seasonal profile estimated over samples `window` (1-based, inclusive).
///
/// Each coefficient is the hour's mean divided by the window mean. Values
/// below [`EPSILON_COEFF`] are clamped, then the set is rescaled to unit mean.
pub fn seasonal_profile_window(
    series: &TimeSeries,
    window: RangeInclusive<usize>,
) -> Result<SeasonalProfile> {
    let (start, end) = (*window.start(), *window.end());
    if start == 0 || end > series.len() || start > end {
        return Err(Error::IndexOutOfRange {
            index: end,
            min: 1,
            max: series.len(),
        });
    }
    let n = end - start + 1;
    if n < 2 * PERIOD {
        return Err(Error::InsufficientData(format!(
            "seasonal profile needs at least {} samples, window has {n}",
            2 * PERIOD
        )));
    }

    let mut sums = [0.0; PERIOD];
    let mut counts = [0usize; PERIOD];
    let mut total = 0.0;
    for t in start..=end {
        let v = series.values[t - 1];
        let ph = series.phase(t) - 1;
        sums[ph] += v;
        counts[ph] += 1;
        total += v;
    }
    let overall = total / n as f64;
    if overall.abs() < 1e-9 {
        return Err(Error::DegenerateMean(overall));
    }

    let mut coefficients: Vec<f64> = sums
        .iter()
        .zip(counts)
        .map(|(s, c)| (s / c as f64 / overall).max(EPSILON_COEFF))
        .collect();
    let mean = coefficients.iter().sum::<f64>() / PERIOD as f64;
    coefficients.iter_mut().for_each(|c| *c /= mean);
    SeasonalProfile::new(coefficients)
}

/// Divides every sample by the coefficient of its hour.
pub fn stationarize(series: &TimeSeries, profile: &SeasonalProfile) -> TimeSeries {
    series.map_by_phase(|v, ph| v / profile.coefficient(ph))
}

/// Inverse of [`stationarize`].
pub fn restore(series: &TimeSeries, profile: &SeasonalProfile) -> TimeSeries {
    series.map_by_phase(|v, ph| v * profile.coefficient(ph))
}

/// Splits off the final `test_years` years as the test span.
pub fn split_learn_test(series: &TimeSeries, test_years: usize) -> Result<(TimeSeries, TimeSeries)> {
    if test_years == 0 {
        return Err(Error::InvalidArgument(
            "test span must cover at least one year".into(),
        ));
    }
    let n_test = test_years * HOURS_PER_YEAR;
    if series.len() <= n_test {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot hold a {test_years}-year test span plus a learning span",
            series.len()
        )));
    }
    split_at(series, series.len() - n_test)
}

/// Splits after sample `n_learn`; both halves must be nonempty.
pub fn split_at(series: &TimeSeries, n_learn: usize) -> Result<(TimeSeries, TimeSeries)> {
    if n_learn == 0 || n_learn >= series.len() {
        return Err(Error::InsufficientData(format!(
            "cannot split {} samples after sample {n_learn}",
            series.len()
        )));
    }
    Ok((
        series.slice(1..=n_learn)?,
        series.slice(n_learn + 1..=series.len())?,
    ))
}
