//! Error and variability metrics.

use crate::error::{Error, Result};

const MIN_MEAN: f64 = 1e-9;

fn check_pair(predicted: &[f64], observed: &[f64]) -> Result<()> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch(predicted.len(), observed.len()));
    }
    if observed.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Root-mean-square error.
pub fn rmse(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    check_pair(predicted, observed)?;
    let sse: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| (p - o) * (p - o))
        .sum();
    Ok((sse / observed.len() as f64).sqrt())
}

/// RMSE divided by the mean of the observations.
pub fn nrmse(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    check_pair(predicted, observed)?;
    let m = mean(observed);
    if m.abs() < MIN_MEAN {
        return Err(Error::DegenerateMean(m));
    }
    Ok(rmse(predicted, observed)? / m)
}

/// Population standard deviation over the mean.
pub fn variation_coefficient(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::TooShort(series.len()));
    }
    let m = mean(series);
    if m.abs() < MIN_MEAN {
        return Err(Error::DegenerateMean(m));
    }
    let var = series.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / series.len() as f64;
    Ok(var.sqrt() / m)
}
