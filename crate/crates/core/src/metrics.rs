//! Evaluation measures, computed exactly as the result tables print them.
//!
//! Two absolute-error flavors are reported side by side: `mae_relative` is
//! the tables' printed formula (mean of |xᵢ−yᵢ|/|xᵢ|, a percentage-style
//! error) and `mae_abs` is the conventional mean absolute error. `crm`
//! divides by the predicted mass Σy, and `r2` is the squared Pearson
//! correlation, so it lands in \[0, 1\] whenever it is defined.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} actual vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("actual value at index {0} is zero")]
    ZeroActual(usize),
    #[error("predicted values sum to zero")]
    ZeroPredictedSum,
    #[error("{0} sequence has zero variance")]
    ZeroVariance(&'static str),
}

/// All measures for one model on one hold-out window.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub model_name: String,
    pub rmse: f64,
    pub mae_relative: f64,
    pub mae_abs: f64,
    pub r2: f64,
    pub crm: f64,
    pub n: usize,
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<(), MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Root mean square error: √(mean of (xᵢ−yᵢ)²).
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual, predicted)?;
    let mean_sq = actual
        .iter()
        .zip(predicted)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mean_sq.sqrt())
}

/// Mean absolute relative error: mean of |xᵢ−yᵢ| / |xᵢ|. Every actual
/// value must be nonzero.
pub fn mae_relative(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual, predicted)?;
    if let Some(idx) = actual.iter().position(|&x| x == 0.0) {
        return Err(MetricError::ZeroActual(idx));
    }
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(x, y)| ((x - y) / x).abs())
        .sum();
    Ok(total / actual.len() as f64)
}

/// Conventional mean absolute error: mean of |xᵢ−yᵢ|.
pub fn mae_abs(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual, predicted)?;
    let total: f64 = actual.iter().zip(predicted).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / actual.len() as f64)
}

/// Coefficient of residual mass: (Σy − Σx) / Σy. Negative values mean the
/// predictions under-estimate the total mass.
pub fn crm(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual, predicted)?;
    let sum_actual: f64 = actual.iter().sum();
    let sum_predicted: f64 = predicted.iter().sum();
    if sum_predicted == 0.0 {
        return Err(MetricError::ZeroPredictedSum);
    }
    Ok((sum_predicted - sum_actual) / sum_predicted)
}

/// Determination coefficient as the squared Pearson correlation:
/// (Σ(xᵢ−x̄)(yᵢ−ȳ))² / (Σ(xᵢ−x̄)² · Σ(yᵢ−ȳ)²).
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual, predicted)?;
    if actual.len() < 2 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    let n = actual.len() as f64;
    let mean_x = actual.iter().sum::<f64>() / n;
    let mean_y = predicted.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in actual.iter().zip(predicted) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    if var_y == 0.0 {
        return Err(MetricError::ZeroVariance("predicted"));
    }
    Ok(((cov * cov) / (var_x * var_y)).min(1.0))
}

/// Computes all five measures on the same input pair.
pub fn evaluate(
    actual: &[f64],
    predicted: &[f64],
    model_name: &str,
) -> Result<EvaluationReport, MetricError> {
    Ok(EvaluationReport {
        model_name: model_name.to_string(),
        rmse: rmse(actual, predicted)?,
        mae_relative: mae_relative(actual, predicted)?,
        mae_abs: mae_abs(actual, predicted)?,
        r2: r2(actual, predicted)?,
        crm: crm(actual, predicted)?,
        n: actual.len(),
    })
}
