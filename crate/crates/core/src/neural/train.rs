//! Mini-batch training with adaptive moment estimation, and rolling
//! one-step-ahead prediction over a hold-out span.

use super::network::BiLstmNetwork;
use super::NeuralError;
use crate::date::Day;
use crate::features::{channel_count, window_at, ChannelScaler, SplitDataset, WindowedSample};
use crate::series::MultivariateSeries;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Optimizer settings. Defaults: 200 epochs, batches of 32, rate 1e-3,
/// moment decays 0.9/0.999, epsilon 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 42,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Mean of squared differences.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64, NeuralError> {
    if predictions.len() != targets.len() {
        return Err(NeuralError::LengthMismatch(
            predictions.len(),
            targets.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / predictions.len() as f64)
}

/// First/second moment state for adaptive moment estimation over the
/// flattened parameter vector.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    fn new(n: usize) -> AdamState {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.step += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Mean batch gradient of the MSE loss: forward every sample, then one
/// backward pass per sample accumulated in a fixed order.
fn batch_gradient(
    net: &BiLstmNetwork,
    samples: &[&WindowedSample],
) -> Result<(f64, Vec<f64>), NeuralError> {
    let n = samples.len() as f64;
    let mut flat_grads = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    for sample in samples {
        let (prediction, cache) = net.forward(&sample.inputs)?;
        let error = prediction - sample.target;
        loss += error * error;
        let grads = net.backward(&cache, 2.0 * error / n)?;
        for (acc, g) in flat_grads.iter_mut().zip(grads.flatten()) {
            *acc += g;
        }
    }
    Ok((loss / n, flat_grads))
}

/// Trains in place for `cfg.epochs` over seeded per-epoch shuffles of the
/// training set, returning the per-epoch training loss. A non-finite loss
/// or parameter aborts with [`NeuralError::DivergenceDetected`].
pub fn train(
    net: &mut BiLstmNetwork,
    data: &SplitDataset,
    cfg: &TrainConfig,
) -> Result<Vec<f64>, NeuralError> {
    assert!(cfg.batch_size >= 1, "batch size must be positive");
    assert!(cfg.learning_rate > 0.0, "learning rate must be positive");
    assert!(
        cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0,
        "moment decays must lie in (0, 1)"
    );
    if data.train.is_empty() {
        return Err(NeuralError::EmptyTrainingSet);
    }
    let expected_channels = channel_count(data.use_lockdown);
    if net.config.channels != expected_channels {
        return Err(NeuralError::DimensionMismatch {
            what: "network channels",
            expected: expected_channels,
            got: net.config.channels,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net.param_count());
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut indices: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let batch: Vec<&WindowedSample> = chunk.iter().map(|&i| &data.train[i]).collect();
            let (batch_loss, grads) = batch_gradient(net, &batch)?;
            epoch_loss += batch_loss * batch.len() as f64;
            let mut params = net.flatten();
            adam.update(&mut params, &grads, cfg);
            net.assign_flat(&params)?;
        }
        epoch_loss /= data.train.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(NeuralError::DivergenceDetected { epoch });
        }
        trace.push(epoch_loss);
    }
    if net.flatten().iter().any(|p| !p.is_finite()) {
        return Err(NeuralError::DivergenceDetected { epoch: cfg.epochs });
    }
    Ok(trace)
}

/// One-step-ahead predictions for every day after `split_date`, each
/// window filled with the actual observed history, inverse-scaled back to
/// case counts.
pub fn predict_rolling(
    net: &BiLstmNetwork,
    series: &MultivariateSeries,
    scaler: &ChannelScaler,
    split_date: Day,
) -> Result<Vec<(Day, f64)>, NeuralError> {
    let lookback = net.config.lookback;
    let use_lockdown = match net.config.channels {
        1 => false,
        c if c == channel_count(true) => true,
        c => {
            return Err(NeuralError::DimensionMismatch {
                what: "network channels",
                expected: channel_count(true),
                got: c,
            })
        }
    };
    let split_index = series
        .index_of(split_date)
        .ok_or(NeuralError::InsufficientHistory {
            needed: lookback,
            available: 0,
        })?;
    // The first test window reads the `lookback` days ending at the split.
    if split_index + 1 < lookback {
        return Err(NeuralError::InsufficientHistory {
            needed: lookback,
            available: split_index + 1,
        });
    }
    let mut predictions = Vec::new();
    for t in split_index + 1..series.len() {
        let inputs = window_at(series, t, lookback, scaler, use_lockdown);
        let scaled = net.predict(&inputs)?;
        predictions.push((series.date_at(t), scaler.inverse(scaled)));
    }
    Ok(predictions)
}
