//! Classical one-step forecasters used for comparison: simple moving
//! average, double exponential (Holt) smoothing, and ARIMA.

mod arima;

pub use arima::{arima_aic_search, arima_fit, arima_forecast, ArimaModel, ArimaOrder};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("history of {len} values is too short, need at least {needed}")]
    HistoryTooShort { len: usize, needed: usize },
    #[error("{name} = {value} outside [0, 1]")]
    WeightOutOfRange { name: &'static str, value: f64 },
    #[error("regression system is singular")]
    SingularRegression,
}

/// Arithmetic mean of the last `window` values.
pub fn sma_forecast(history: &[f64], window: usize) -> Result<f64, BaselineError> {
    assert!(window >= 1, "window must be positive");
    if history.len() < window {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed: window,
        });
    }
    let tail = &history[history.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Level and trend of a double exponential smoother after consuming a
/// history, along with its weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoltState {
    pub level: f64,
    pub trend: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl HoltState {
    /// One-step-ahead forecast from the current state.
    pub fn forecast(&self) -> f64 {
        self.level + self.trend
    }
}

/// Runs double exponential smoothing over the history. The level starts at
/// the second observation and the trend at the first difference, so an
/// exactly linear series is a fixed point of the recurrence.
pub fn holt_fit(history: &[f64], alpha: f64, beta: f64) -> Result<HoltState, BaselineError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(BaselineError::WeightOutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(BaselineError::WeightOutOfRange {
            name: "beta",
            value: beta,
        });
    }
    if history.len() < 2 {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed: 2,
        });
    }
    let mut level = history[1];
    let mut trend = history[1] - history[0];
    for &x in &history[2..] {
        let prev_level = level;
        level = alpha * x + (1.0 - alpha) * (level + trend);
        trend = beta * (level - prev_level) + (1.0 - beta) * trend;
    }
    Ok(HoltState {
        level,
        trend,
        alpha,
        beta,
    })
}

/// Next-day forecast after smoothing the full history.
pub fn holt_forecast(history: &[f64], alpha: f64, beta: f64) -> Result<f64, BaselineError> {
    Ok(holt_fit(history, alpha, beta)?.forecast())
}

/// A classical method with its parameters, as used by the rolling harness.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineMethod {
    Sma { window: usize },
    Holt { alpha: f64, beta: f64 },
    Arima { order: ArimaOrder, refit_each_day: bool },
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Sma { .. } => "sma",
            BaselineMethod::Holt { .. } => "holt",
            BaselineMethod::Arima { .. } => "arima",
        }
    }
}

/// One-step-ahead forecasts for every index in `[split_index, len)`, each
/// computed from the actual values before it. ARIMA coefficients are fit
/// once on the training range unless `refit_each_day` is set.
pub fn rolling_baseline(
    values: &[f64],
    split_index: usize,
    method: &BaselineMethod,
) -> Result<Vec<f64>, BaselineError> {
    assert!(split_index < values.len(), "split index out of range");
    let mut forecasts = Vec::with_capacity(values.len() - split_index);
    let mut fitted_arima = None;
    if let BaselineMethod::Arima {
        order,
        refit_each_day: false,
    } = method
    {
        fitted_arima = Some(arima_fit(&values[..split_index], *order)?);
    }
    for t in split_index..values.len() {
        let history = &values[..t];
        let forecast = match method {
            BaselineMethod::Sma { window } => sma_forecast(history, *window)?,
            BaselineMethod::Holt { alpha, beta } => holt_forecast(history, *alpha, *beta)?,
            BaselineMethod::Arima {
                order,
                refit_each_day,
            } => {
                let model = if *refit_each_day {
                    arima_fit(history, *order)?
                } else {
                    fitted_arima.clone().unwrap()
                };
                arima_forecast(&model, history)?
            }
        };
        forecasts.push(forecast);
    }
    Ok(forecasts)
}
