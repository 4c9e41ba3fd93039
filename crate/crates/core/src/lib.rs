//! One-hour-ahead forecasting of seasonal hourly series with multilayer
//! perceptrons whose hidden layer mixes `tanh` nodes with `1 - tanh²` nodes.
//!
//! The crate covers the whole modelling pipeline:
//!
//! - [`series`]: hourly series container, tapped delay lines, hour-of-day
//!   time index and multiplicative seasonal adjustment.
//! - [`pacf`]: autocorrelation, partial autocorrelation (Durbin-Levinson)
//!   and input lag selection.
//! - [`network`]: the heterogeneous one-hidden-layer network, its analytic
//!   Jacobian and a compact binary parameter format.
//! - [`trainer`]: Levenberg-Marquardt training with max-fail early stopping
//!   and best-of-N restarts.
//! - [`forecast`]: persistence baselines and the MLP predictor variants.
//! - [`metrics`]: RMSE, nRMSE and the variation coefficient.
//!
//! Sample indices in the public contracts are 1-based: `t = 1` is the first
//! sample of a series, matching the hour-of-day convention `1..=24`.

pub mod error;
pub mod forecast;
pub mod metrics;
pub mod network;
pub mod pacf;
pub mod series;
pub mod trainer;

pub use error::{Error, Result};
pub use forecast::{EvaluationResult, Predictor, PredictorKind, PredictorSpec};
pub use network::{Activation, ConnectionMask, NetworkConfig, Parameters};
pub use series::{LagVector, SeasonalProfile, TimeSeries};
pub use trainer::{StopReason, SupervisedSet, TrainConfig, TrainOutcome};
