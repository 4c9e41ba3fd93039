//! Levenberg-Marquardt training with max-fail early stopping and
//! best-of-N random restarts.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics;
use crate::network::{self, NetworkConfig, Parameters};

/// Smallest damping the schedule will decay to.
const MU_MIN: f64 = 1e-20;
/// Training stops once an accepted step improves SSE by less than this.
const MIN_IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub mu_init: f64,
    pub mu_increase: f64,
    pub mu_decrease: f64,
    pub mu_max: f64,
    /// Consecutive validation failures tolerated before stopping.
    pub max_fail: usize,
    pub n_restarts: usize,
    /// Chronologically last fraction of the learning pairs held out for
    /// early stopping.
    pub validation_fraction: f64,
    pub base_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            mu_init: 1e-3,
            mu_increase: 10.0,
            mu_decrease: 0.1,
            mu_max: 1e10,
            max_fail: 3,
            n_restarts: 6,
            validation_fraction: 0.15,
            base_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.max_fail < 1 {
            return bad("max_fail must be at least 1");
        }
        if self.n_restarts < 1 {
            return bad("n_restarts must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must lie in (0, 0.5)");
        }
        if !(self.mu_init > 0.0 && self.mu_increase > 0.0 && self.mu_decrease > 0.0) {
            return bad("damping factors must be positive");
        }
        if self.mu_max.is_nan() || self.mu_max < self.mu_init {
            return bad("mu_max must be at least mu_init");
        }
        Ok(())
    }
}

/// Input/target pairs in network units, with an affine map back to the
/// units validation errors are reported in.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    n_inputs: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    target_scale: f64,
    target_offset: f64,
}

impl SupervisedSet {
    /// `inputs` is row-major with `n_inputs` columns, one row per target.
    pub fn new(n_inputs: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if n_inputs == 0 || inputs.len() != n_inputs * targets.len() {
            return Err(Error::DimensionMismatch {
                expected: n_inputs * targets.len(),
                got: inputs.len(),
            });
        }
        Ok(Self {
            n_inputs,
            inputs,
            targets,
            target_scale: 1.0,
            target_offset: 0.0,
        })
    }

    /// Reported value of a network-unit value `v` is `scale * v + offset`.
    pub fn with_target_map(mut self, scale: f64, offset: f64) -> Self {
        self.target_scale = scale;
        self.target_offset = offset;
        self
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn input(&self, row: usize) -> &[f64] {
        &self.inputs[row * self.n_inputs..(row + 1) * self.n_inputs]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn to_reported(&self, v: f64) -> f64 {
        self.target_scale * v + self.target_offset
    }

    /// Splits off the chronologically last `fraction` of pairs.
    pub fn split_tail(&self, fraction: f64) -> Result<(Self, Self)> {
        let n_val = (self.len() as f64 * fraction).round() as usize;
        if n_val == 0 || n_val >= self.len() {
            return Err(Error::InsufficientData(format!(
                "cannot hold out {fraction} of {} pairs",
                self.len()
            )));
        }
        let cut = self.len() - n_val;
        let part = |range: std::ops::Range<usize>| Self {
            n_inputs: self.n_inputs,
            inputs: self.inputs[range.start * self.n_inputs..range.end * self.n_inputs].to_vec(),
            targets: self.targets[range].to_vec(),
            target_scale: self.target_scale,
            target_offset: self.target_offset,
        };
        Ok((part(0..cut), part(cut..self.len())))
    }

    fn check(&self, config: &NetworkConfig) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.n_inputs != config.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: config.n_inputs(),
                got: self.n_inputs,
            });
        }
        Ok(())
    }

    /// nRMSE of the network on this set, in reported units.
    pub fn nrmse(&self, config: &NetworkConfig, params: &Parameters) -> Result<f64> {
        let predicted: Vec<f64> = network::predict_batch(config, params, &self.inputs)?
            .into_iter()
            .map(|v| self.to_reported(v))
            .collect();
        let observed: Vec<f64> = self.targets.iter().map(|v| self.to_reported(*v)).collect();
        metrics::nrmse(&predicted, &observed)
    }
}

/// Why a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    MuCeiling,
    Converged,
}

/// One row of the training history; epoch 0 describes the initial weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub sse: f64,
    pub mu: f64,
    pub validation_nrmse: f64,
    pub fails: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the best validation nRMSE seen.
    pub params: Parameters,
    /// Training SSE of `params`.
    pub train_sse: f64,
    pub validation_nrmse: f64,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub seed: u64,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    /// Writes the history as tab-separated `epoch, sse, mu, validation_nrmse, fails`.
    pub fn write_history<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch\tsse\tmu\tvalidation_nrmse\tfails")?;
        for r in &self.history {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.epoch, r.sse, r.mu, r.validation_nrmse, r.fails
            )?;
        }
        Ok(())
    }
}

/// Scores parameters after each accepted epoch; lower is better.
pub trait ValidationMonitor {
    fn score(&mut self, config: &NetworkConfig, params: &Parameters) -> Result<f64>;
}

impl<M: ValidationMonitor + ?Sized> ValidationMonitor for &mut M {
    fn score(&mut self, config: &NetworkConfig, params: &Parameters) -> Result<f64> {
        (**self).score(config, params)
    }
}

impl ValidationMonitor for &SupervisedSet {
    fn score(&mut self, config: &NetworkConfig, params: &Parameters) -> Result<f64> {
        self.nrmse(config, params)
    }
}

fn solve_damped(jtj: &DMatrix<f64>, jtr: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    let mut a = jtj.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += mu;
    }
    let chol = a.cholesky().ok_or(Error::SingularSystem)?;
    let delta = chol.solve(jtr);
    if delta.iter().all(|v| v.is_finite()) {
        Ok(delta)
    } else {
        Err(Error::SingularSystem)
    }
}

/// Solves `(JᵀJ + μI) δ = Jᵀr` by Cholesky factorization, where `r` is
/// targets minus outputs. `δ` is added to the flat parameter vector.
pub fn lm_step(jacobian: &DMatrix<f64>, residuals: &[f64], mu: f64) -> Result<DVector<f64>> {
    if jacobian.nrows() != residuals.len() {
        return Err(Error::DimensionMismatch {
            expected: jacobian.nrows(),
            got: residuals.len(),
        });
    }
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!("damping must be positive, got {mu}")));
    }
    let r = DVector::from_column_slice(residuals);
    let jt = jacobian.transpose();
    solve_damped(&(&jt * jacobian), &(&jt * r), mu)
}

fn sse_of(outputs: &[f64], targets: &[f64]) -> f64 {
    outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (t - o) * (t - o))
        .sum()
}

/// Trains one network from `init_weights(config, seed)`, early-stopping on
/// `val_data`.
pub fn train(
    config: &NetworkConfig,
    train_data: &SupervisedSet,
    val_data: &SupervisedSet,
    tc: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    val_data.check(config)?;
    train_with_monitor(config, train_data, val_data, tc, seed)
}

/// [`train`] with an arbitrary validation monitor.
///
/// Each epoch retries damped steps, raising `μ` after every rejection, until
/// training SSE strictly decreases. A validation score strictly above the
/// best so far counts as a fail; `max_fail` consecutive fails stop training.
pub fn train_with_monitor<M: ValidationMonitor>(
    config: &NetworkConfig,
    train_data: &SupervisedSet,
    mut monitor: M,
    tc: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    tc.validate()?;
    train_data.check(config)?;
    let targets = train_data.targets();

    let mut params = network::init_weights(config, seed);
    let mut flat = DVector::from_vec(params.to_flat());
    let (mut jac, outputs) = network::jacobian_flat(config, &params, train_data.inputs())?;
    let mut sse = sse_of(&outputs, targets);
    let mut residuals = DVector::from_iterator(
        targets.len(),
        targets.iter().zip(&outputs).map(|(t, o)| t - o),
    );

    let mut mu = tc.mu_init;
    let mut best_val = monitor.score(config, &params)?;
    let mut best_params = params.clone();
    let mut best_sse = sse;
    let mut fails = 0;
    let mut history = vec![EpochRecord {
        epoch: 0,
        sse,
        mu,
        validation_nrmse: best_val,
        fails,
    }];
    let mut epochs_run = 0;
    let mut stop_reason = StopReason::MaxEpochs;

    'epochs: for epoch in 1..=tc.max_epochs {
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let jtr = &jt * &residuals;

        let (candidate, candidate_sse) = loop {
            if let Ok(delta) = solve_damped(&jtj, &jtr, mu) {
                let trial = &flat + delta;
                let trial_params = Parameters::from_flat(config, trial.as_slice());
                if let Ok(trial_params) = trial_params {
                    let out = network::predict_batch(config, &trial_params, train_data.inputs())?;
                    let trial_sse = sse_of(&out, targets);
                    if trial_sse < sse {
                        mu = (mu * tc.mu_decrease).max(MU_MIN);
                        break (trial, trial_sse);
                    }
                }
            }
            if mu * tc.mu_increase > tc.mu_max {
                stop_reason = StopReason::MuCeiling;
                break 'epochs;
            }
            mu *= tc.mu_increase;
        };

        let improvement = sse - candidate_sse;
        flat = candidate;
        params = Parameters::from_flat(config, flat.as_slice())?;
        sse = candidate_sse;
        let (next_jac, outputs) = network::jacobian_flat(config, &params, train_data.inputs())?;
        jac = next_jac;
        residuals = DVector::from_iterator(
            targets.len(),
            targets.iter().zip(&outputs).map(|(t, o)| t - o),
        );
        epochs_run = epoch;

        let val = monitor.score(config, &params)?;
        if val < best_val {
            best_val = val;
            best_params = params.clone();
            best_sse = sse;
            fails = 0;
        } else if val > best_val {
            fails += 1;
        }
        history.push(EpochRecord {
            epoch,
            sse,
            mu,
            validation_nrmse: val,
            fails,
        });

        if fails >= tc.max_fail {
            stop_reason = StopReason::EarlyStop;
            break;
        }
        if improvement < MIN_IMPROVEMENT {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        train_sse: best_sse,
        validation_nrmse: best_val,
        epochs_run,
        stop_reason,
        seed,
        history,
    })
}

/// Trains `tc.n_restarts` networks with seeds `base_seed + 0..n_restarts` and
/// keeps the one with the lowest validation nRMSE (ties go to the lower seed).
pub fn multi_restart_train(
    config: &NetworkConfig,
    train_data: &SupervisedSet,
    val_data: &SupervisedSet,
    tc: &TrainConfig,
) -> Result<TrainOutcome> {
    tc.validate()?;
    let outcomes: Vec<Result<TrainOutcome>> = (0..tc.n_restarts as u64)
        .into_par_iter()
        .map(|k| train(config, train_data, val_data, tc, tc.base_seed.wrapping_add(k)))
        .collect();
    select_best(outcomes)
}

/// Deterministic reduction over restart outcomes listed in seed order.
pub fn select_best(outcomes: Vec<Result<TrainOutcome>>) -> Result<TrainOutcome> {
    let mut best: Option<TrainOutcome> = None;
    let mut first_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                if best
                    .as_ref()
                    .is_none_or(|b| o.validation_nrmse < b.validation_nrmse)
                {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::EmptyDataset))
}
