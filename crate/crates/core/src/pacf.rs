//! Sample autocorrelation, partial autocorrelation and input-lag selection.

use crate::error::{Error, Result};

/// Default lower bound on the number of input lags.
pub const DEFAULT_MIN_P: usize = 4;
/// Default upper bound on the number of input lags.
pub const DEFAULT_MAX_P: usize = 9;

const BREAKDOWN_FLOOR: f64 = 1e-14;

/// Correlations indexed by lag `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    pub values: Vec<f64>,
    /// Number of samples the estimate was computed from.
    pub n: usize,
}

impl CorrelationSequence {
    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag]
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// Half-width of the 95% band under the white-noise null, `1.96 / sqrt(n)`.
    pub fn significance_band(&self) -> f64 {
        1.96 / (self.n as f64).sqrt()
    }
}

/// Biased autocovariances `c(0..=max_lag)` about the sample mean.
fn autocovariance(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let cov: Vec<f64> = (0..=max_lag)
        .map(|k| {
            centered[k..]
                .iter()
                .zip(&centered)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if cov[0] <= (f64::EPSILON * scale).powi(2) {
        return Err(Error::ConstantSeries);
    }
    Ok(cov)
}

/// Sample autocorrelation `r(k) = c(k) / c(0)`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<CorrelationSequence> {
    let cov = autocovariance(x, max_lag)?;
    let c0 = cov[0];
    Ok(CorrelationSequence {
        values: cov.into_iter().map(|c| c / c0).collect(),
        n: x.len(),
    })
}

/// Result of the Durbin-Levinson recursion on an autocorrelation sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LevinsonSolution {
    /// Reflection coefficients `phi(k, k)` for `k = 1..=order`.
    pub reflection: Vec<f64>,
    /// Coefficients of the final-order autoregression, `phi(order, 1..=order)`.
    pub ar: Vec<f64>,
    /// Normalized one-step prediction error variance.
    pub error_variance: f64,
}

/// Durbin-Levinson recursion over `r(0..=order)` with `r(0) = 1`.
pub fn durbin_levinson(r: &[f64]) -> Result<LevinsonSolution> {
    let order = r.len().saturating_sub(1);
    let mut ar: Vec<f64> = Vec::with_capacity(order);
    let mut reflection = Vec::with_capacity(order);
    let mut v = r[0];
    for k in 1..=order {
        if v < BREAKDOWN_FLOOR {
            return Err(Error::NumericalBreakdown(k));
        }
        let num = r[k] - ar.iter().enumerate().map(|(j, a)| a * r[k - 1 - j]).sum::<f64>();
        let kappa = num / v;
        let prev = ar.clone();
        for (j, a) in ar.iter_mut().enumerate() {
            *a = prev[j] - kappa * prev[k - 2 - j];
        }
        ar.push(kappa);
        reflection.push(kappa);
        v *= 1.0 - kappa * kappa;
    }
    Ok(LevinsonSolution {
        reflection,
        ar,
        error_variance: v,
    })
}

/// Partial autocorrelation for lags `0..=max_lag`; lag 0 is defined as 1.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<CorrelationSequence> {
    if max_lag < 1 {
        return Err(Error::InvalidArgument("pacf needs max_lag >= 1".into()));
    }
    let r = acf(x, max_lag)?;
    let sol = durbin_levinson(&r.values)?;
    let mut values = Vec::with_capacity(max_lag + 1);
    values.push(1.0);
    values.extend(sol.reflection);
    Ok(CorrelationSequence { values, n: r.n })
}

/// Number of network input lags for `x`.
///
/// Counts the leading run of lags whose partial autocorrelation lies outside
/// the 95% band `1.96 / sqrt(N)`, i.e. the largest `k` such that every lag
/// `1..=k` is significant, then clamps the count into `[min_p, max_p]`.
pub fn select_lag_count(x: &[f64], max_lag: usize, min_p: usize, max_p: usize) -> Result<usize> {
    if min_p < 1 || min_p > max_p || max_p > max_lag {
        return Err(Error::InvalidArgument(format!(
            "lag bounds must satisfy 1 <= min_p <= max_p <= max_lag, got {min_p}, {max_p}, {max_lag}"
        )));
    }
    let p = pacf(x, max_lag)?;
    let band = p.significance_band();
    let run = (1..=max_lag)
        .take_while(|&k| p.at(k).abs() > band)
        .count();
    Ok(run.clamp(min_p, max_p))
}
