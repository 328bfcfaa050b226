//! The LSTM cell: four gate transformations applied to the concatenation
//! of the previous hidden state and the current input.
//!
//! For input x_t and previous state (h_{t−1}, C_{t−1}), with
//! z = [h_{t−1}, x_t]:
//!
//! ```text
//! f_t = σ(W_f z + b_f)          forget gate
//! i_t = σ(W_i z + b_i)          input gate
//! Ĉ_t = tanh(W_C z + b_c)       candidate state
//! C_t = f_t ⊙ C_{t−1} + i_t ⊙ Ĉ_t
//! o_t = σ(W_o z + b_o)          output gate
//! h_t = o_t ⊙ tanh(C_t)
//! ```

use super::NeuralError;
use crate::linalg::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights and biases of one LSTM cell. Each weight matrix has shape
/// hidden × (hidden + input) and acts on \[h_{t−1}, x_t\].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub input: usize,
    pub hidden: usize,
    pub w_f: Mat,
    pub w_i: Mat,
    pub w_c: Mat,
    pub w_o: Mat,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> LstmCellParams {
        let cols = hidden + input;
        LstmCellParams {
            input,
            hidden,
            w_f: Mat::zeros(hidden, cols),
            w_i: Mat::zeros(hidden, cols),
            w_c: Mat::zeros(hidden, cols),
            w_o: Mat::zeros(hidden, cols),
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
        }
    }

    /// Weights drawn uniformly from ±1/√fan_in; biases zero except the
    /// forget gate, which starts at 1 so early training does not forget
    /// everything it sees.
    pub fn seeded(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> LstmCellParams {
        let cols = hidden + input;
        let bound = 1.0 / (cols as f64).sqrt();
        let mut draw = |_: usize, _: usize| rng.random_range(-bound..bound);
        let w_f = Mat::from_fn(hidden, cols, &mut draw);
        let w_i = Mat::from_fn(hidden, cols, &mut draw);
        let w_c = Mat::from_fn(hidden, cols, &mut draw);
        let w_o = Mat::from_fn(hidden, cols, &mut draw);
        LstmCellParams {
            input,
            hidden,
            w_f,
            w_i,
            w_c,
            w_o,
            b_f: vec![1.0; hidden],
            b_i: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
        }
    }

    pub fn param_count(&self) -> usize {
        4 * self.hidden * (self.hidden + self.input) + 4 * self.hidden
    }
}

/// Hidden and cell state of one cell after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> LstmState {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Gate activations captured during one step, as needed for
/// backpropagation through time.
#[derive(Debug, Clone)]
pub struct GateRecord {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub o: Vec<f64>,
}

/// Everything one step produces: the new state, the gate record, the
/// concatenated input z, and tanh(C_t).
#[derive(Debug, Clone)]
pub(crate) struct StepTrace {
    pub state: LstmState,
    pub gates: GateRecord,
    pub z: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub(crate) fn step_traced(
    params: &LstmCellParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<StepTrace, NeuralError> {
    if x.len() != params.input {
        return Err(NeuralError::DimensionMismatch {
            what: "cell input",
            expected: params.input,
            got: x.len(),
        });
    }
    if prev.h.len() != params.hidden || prev.c.len() != params.hidden {
        return Err(NeuralError::DimensionMismatch {
            what: "cell state",
            expected: params.hidden,
            got: prev.h.len(),
        });
    }
    let mut z = Vec::with_capacity(params.hidden + params.input);
    z.extend_from_slice(&prev.h);
    z.extend_from_slice(x);

    let mut f = params.w_f.matvec(&z);
    let mut i = params.w_i.matvec(&z);
    let mut c_hat = params.w_c.matvec(&z);
    let mut o = params.w_o.matvec(&z);
    for idx in 0..params.hidden {
        f[idx] = sigmoid(f[idx] + params.b_f[idx]);
        i[idx] = sigmoid(i[idx] + params.b_i[idx]);
        c_hat[idx] = (c_hat[idx] + params.b_c[idx]).tanh();
        o[idx] = sigmoid(o[idx] + params.b_o[idx]);
    }
    let mut c = vec![0.0; params.hidden];
    let mut tanh_c = vec![0.0; params.hidden];
    let mut h = vec![0.0; params.hidden];
    for idx in 0..params.hidden {
        c[idx] = f[idx] * prev.c[idx] + i[idx] * c_hat[idx];
        tanh_c[idx] = c[idx].tanh();
        h[idx] = o[idx] * tanh_c[idx];
    }
    Ok(StepTrace {
        state: LstmState { h, c },
        gates: GateRecord { f, i, c_hat, o },
        z,
        tanh_c,
    })
}

/// Applies the cell equations for one timestep.
pub fn lstm_cell_step(
    params: &LstmCellParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, GateRecord), NeuralError> {
    let trace = step_traced(params, x, prev)?;
    Ok((trace.state, trace.gates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_half_open_gates_and_zero_state() {
        let params = LstmCellParams::zeros(3, 4);
        let prev = LstmState::zeros(4);
        let (state, gates) = lstm_cell_step(&params, &[0.7, -2.0, 5.0], &prev).unwrap();
        assert!(state.h.iter().all(|&v| v == 0.0));
        assert!(state.c.iter().all(|&v| v == 0.0));
        assert!(gates.f.iter().all(|&v| v == 0.5));
        assert!(gates.i.iter().all(|&v| v == 0.5));
        assert!(gates.o.iter().all(|&v| v == 0.5));
        assert!(gates.c_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_carries_the_cell_state() {
        // b_f = 100 saturates f to 1; with zero weights the candidate is 0,
        // so C_t = C_{t−1} exactly (up to the 1e-10 the sigmoid leaves).
        let mut params = LstmCellParams::zeros(2, 3);
        params.b_f = vec![100.0; 3];
        let prev = LstmState {
            h: vec![0.0; 3],
            c: vec![2.0; 3],
        };
        let (state, gates) = lstm_cell_step(&params, &[1.0, 1.0], &prev).unwrap();
        for idx in 0..3 {
            assert!((gates.f[idx] - 1.0).abs() < 1e-10);
            assert!((state.c[idx] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let params = LstmCellParams::zeros(3, 4);
        let prev = LstmState::zeros(4);
        assert!(matches!(
            lstm_cell_step(&params, &[1.0, 2.0], &prev),
            Err(NeuralError::DimensionMismatch {
                expected: 3,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn gates_stay_inside_their_open_intervals() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let params = LstmCellParams::seeded(6, 8, &mut rng);
        let mut state = LstmState::zeros(8);
        for step in 0..50 {
            let x: Vec<f64> = (0..6).map(|i| ((step * 7 + i) as f64 * 0.37).sin()).collect();
            let (next, gates) = lstm_cell_step(&params, &x, &state).unwrap();
            for idx in 0..8 {
                assert!(gates.f[idx] > 0.0 && gates.f[idx] < 1.0);
                assert!(gates.i[idx] > 0.0 && gates.i[idx] < 1.0);
                assert!(gates.o[idx] > 0.0 && gates.o[idx] < 1.0);
                assert!(next.h[idx] > -1.0 && next.h[idx] < 1.0);
            }
            state = next;
        }
    }
}
