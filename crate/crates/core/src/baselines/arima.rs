//! ARIMA(p, d, q) fit and one-step forecasting.
//!
//! Fitting differences the series d times, then estimates AR terms by
//! conditional least squares. When q > 0 the AR and MA terms are estimated
//! jointly by two-stage regression: residuals from a long-AR pre-fit stand
//! in for the unobserved innovations (the Hannan–Rissanen scheme).

use super::BaselineError;
use crate::linalg::{solve_linear, Mat};

/// Non-negative (p, d, q) orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> ArimaOrder {
        ArimaOrder { p, d, q }
    }
}

/// A fitted model: AR and MA coefficients with an intercept, on the
/// d-times-differenced scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
    pub residual_variance: f64,
}

fn difference_once(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

fn difference(values: &[f64], d: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..d {
        out = difference_once(&out);
    }
    out
}

/// Ordinary least squares of `y` on columns `x` (with intercept prepended).
/// Returns `[intercept, coeffs...]`.
fn ols(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, BaselineError> {
    let n = rows.len();
    let k = rows[0].len() + 1; // + intercept
    let mut xtx = Mat::zeros(k, k);
    let mut xty = vec![0.0; k];
    for (row, &target) in rows.iter().zip(y) {
        let mut full = Vec::with_capacity(k);
        full.push(1.0);
        full.extend_from_slice(row);
        for i in 0..k {
            xty[i] += full[i] * target;
            for j in 0..k {
                xtx.set(i, j, xtx.get(i, j) + full[i] * full[j]);
            }
        }
    }
    debug_assert!(n >= k);
    solve_linear(&xtx, &xty).ok_or(BaselineError::SingularRegression)
}

/// AR(p) residuals under conditional least squares: zero for the first
/// `p` positions, one-step errors afterwards.
fn ar_residuals(w: &[f64], intercept: f64, ar: &[f64]) -> Vec<f64> {
    let p = ar.len();
    let mut residuals = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = intercept;
        for (lag, &phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - lag];
        }
        residuals[t] = w[t] - pred;
    }
    residuals
}

/// In-sample one-step residuals of a full ARMA model on the differenced
/// scale, with pre-sample innovations taken as zero.
fn arma_residuals(w: &[f64], model: &ArimaModel) -> Vec<f64> {
    let p = model.order.p;
    let q = model.order.q;
    let mut residuals = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = model.intercept;
        for (lag, &phi) in model.ar.iter().enumerate() {
            pred += phi * w[t - 1 - lag];
        }
        for (lag, &theta) in model.ma.iter().enumerate() {
            if t >= lag + 1 {
                pred += theta * residuals[t - 1 - lag];
            }
        }
        residuals[t] = w[t] - pred;
    }
    if q > 0 {
        // Redo a second pass so early residuals feed the MA terms they
        // were computed without; one refinement pass is enough for the
        // short lags used here.
        let snapshot = residuals.clone();
        for t in p..w.len() {
            let mut pred = model.intercept;
            for (lag, &phi) in model.ar.iter().enumerate() {
                pred += phi * w[t - 1 - lag];
            }
            for (lag, &theta) in model.ma.iter().enumerate() {
                if t >= lag + 1 {
                    pred += theta * snapshot[t - 1 - lag];
                }
            }
            residuals[t] = w[t] - pred;
        }
    }
    residuals
}

fn mean_square_tail(values: &[f64], skip: usize) -> f64 {
    let tail = &values[skip.min(values.len())..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().map(|r| r * r).sum::<f64>() / tail.len() as f64
    }
}

/// Fits ARIMA(p, d, q) on the history by conditional least squares.
pub fn arima_fit(history: &[f64], order: ArimaOrder) -> Result<ArimaModel, BaselineError> {
    let ArimaOrder { p, d, q } = order;
    let needed = d + p + q + 2;
    if history.len() < needed {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed,
        });
    }
    let w = difference(history, d);
    if w.len() <= p + q + 1 {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed: p + q + 2 + d,
        });
    }

    if p == 0 && q == 0 {
        // No parameters: a pure random walk after differencing.
        let residual_variance = mean_square_tail(&w, 0);
        return Ok(ArimaModel {
            order,
            ar: vec![],
            ma: vec![],
            intercept: 0.0,
            residual_variance,
        });
    }

    let (intercept, ar, ma) = if q == 0 {
        let rows: Vec<Vec<f64>> = (p..w.len())
            .map(|t| (0..p).map(|lag| w[t - 1 - lag]).collect())
            .collect();
        let y: Vec<f64> = w[p..].to_vec();
        let coeffs = ols(&rows, &y)?;
        (coeffs[0], coeffs[1..].to_vec(), vec![])
    } else {
        // Stage one: long-AR pre-fit whose residuals proxy the innovations.
        let long_p = (p + q + 3).min((w.len() - 1) / 2).max(1);
        let rows: Vec<Vec<f64>> = (long_p..w.len())
            .map(|t| (0..long_p).map(|lag| w[t - 1 - lag]).collect())
            .collect();
        let y: Vec<f64> = w[long_p..].to_vec();
        let long_coeffs = ols(&rows, &y)?;
        let innovations = ar_residuals(&w, long_coeffs[0], &long_coeffs[1..]);

        // Stage two: joint regression on lagged values and lagged
        // innovations, over the range where both are defined.
        let start = long_p + q;
        if w.len() <= start + p + q + 1 {
            return Err(BaselineError::HistoryTooShort {
                len: history.len(),
                needed: start + p + q + 2 + d,
            });
        }
        let rows: Vec<Vec<f64>> = (start..w.len())
            .map(|t| {
                let mut row: Vec<f64> = (0..p).map(|lag| w[t - 1 - lag]).collect();
                row.extend((0..q).map(|lag| innovations[t - 1 - lag]));
                row
            })
            .collect();
        let y: Vec<f64> = w[start..].to_vec();
        let coeffs = ols(&rows, &y)?;
        (
            coeffs[0],
            coeffs[1..=p].to_vec(),
            coeffs[p + 1..].to_vec(),
        )
    };

    let mut model = ArimaModel {
        order,
        ar,
        ma,
        intercept,
        residual_variance: 0.0,
    };
    if !model.ar.iter().chain(&model.ma).all(|c| c.is_finite()) || !intercept.is_finite() {
        return Err(BaselineError::SingularRegression);
    }
    let residuals = arma_residuals(&w, &model);
    model.residual_variance = mean_square_tail(&residuals, p);
    Ok(model)
}

/// One-step forecast: predicts the next value on the differenced scale,
/// then re-integrates d times.
pub fn arima_forecast(model: &ArimaModel, history: &[f64]) -> Result<f64, BaselineError> {
    let ArimaOrder { p, d, q: _ } = model.order;
    if history.len() < d + p.max(1) {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed: d + p.max(1),
        });
    }

    // Keep every differencing level; their last values re-integrate the
    // forecast back to the original scale.
    let mut levels = vec![history.to_vec()];
    for _ in 0..d {
        let next = difference_once(levels.last().unwrap());
        levels.push(next);
    }
    let w = levels.last().unwrap();
    if w.len() < p {
        return Err(BaselineError::HistoryTooShort {
            len: history.len(),
            needed: d + p,
        });
    }

    let residuals = arma_residuals(w, model);
    let t = w.len();
    let mut forecast = model.intercept;
    for (lag, &phi) in model.ar.iter().enumerate() {
        forecast += phi * w[t - 1 - lag];
    }
    for (lag, &theta) in model.ma.iter().enumerate() {
        if t >= lag + 1 {
            forecast += theta * residuals[t - 1 - lag];
        }
    }
    for level in levels[..d].iter().rev() {
        forecast += level.last().unwrap();
    }
    Ok(forecast)
}

/// Grid search over p ≤ max_p, d ≤ max_d, q ≤ max_q, ranked by the
/// conditional-least-squares AIC. Orders that fail to fit are skipped.
pub fn arima_aic_search(
    history: &[f64],
    max_p: usize,
    max_d: usize,
    max_q: usize,
) -> Result<(ArimaOrder, ArimaModel), BaselineError> {
    let mut best: Option<(f64, ArimaOrder, ArimaModel)> = None;
    for d in 0..=max_d {
        for p in 0..=max_p {
            for q in 0..=max_q {
                let order = ArimaOrder::new(p, d, q);
                let Ok(model) = arima_fit(history, order) else {
                    continue;
                };
                let n = (history.len() - d - p) as f64;
                if n <= 0.0 {
                    continue;
                }
                let aic = if model.residual_variance > 0.0 {
                    n * model.residual_variance.ln() + 2.0 * (p + q + 1) as f64
                } else {
                    f64::NEG_INFINITY
                };
                if best.as_ref().is_none_or(|(b, _, _)| aic < *b) {
                    best = Some((aic, order, model));
                }
            }
        }
    }
    best.map(|(_, order, model)| (order, model))
        .ok_or(BaselineError::SingularRegression)
}
