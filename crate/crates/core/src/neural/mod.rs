//! From-scratch LSTM cell, stacked bidirectional network, mean-squared-error
//! training via backpropagation through time, and rolling one-step
//! prediction. All arithmetic is 64-bit.

mod cell;
mod network;
mod train;

pub use cell::{lstm_cell_step, sigmoid, GateRecord, LstmCellParams, LstmState};
pub use network::{
    BiLstmNetwork, CellGrads, DirectionCache, ForwardCache, Gradients, LayerCache, LayerGrads,
    LayerParams, NetworkConfig,
};
pub use train::{mse_loss, predict_rolling, train, TrainConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dimension mismatch on {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("activation cache does not match this network")]
    StaleCache,
    #[error("length mismatch: {0} predictions vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergenceDetected { epoch: usize },
    #[error("insufficient history: need {needed} days, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PartialEq for NeuralError {
    fn eq(&self, other: &Self) -> bool {
        use NeuralError::*;
        match (self, other) {
            (
                DimensionMismatch {
                    what: a,
                    expected: b,
                    got: c,
                },
                DimensionMismatch {
                    what: x,
                    expected: y,
                    got: z,
                },
            ) => a == x && b == y && c == z,
            (StaleCache, StaleCache) => true,
            (LengthMismatch(a, b), LengthMismatch(x, y)) => a == x && b == y,
            (EmptyBatch, EmptyBatch) => true,
            (EmptyTrainingSet, EmptyTrainingSet) => true,
            (DivergenceDetected { epoch: a }, DivergenceDetected { epoch: b }) => a == b,
            (
                InsufficientHistory {
                    needed: a,
                    available: b,
                },
                InsufficientHistory {
                    needed: x,
                    available: y,
                },
            ) => a == x && b == y,
            (ModelFormat(a), ModelFormat(b)) => a == b,
            _ => false,
        }
    }
}
