// Scratch: scan AR(1) recovery across seeds and watch single-sample Adam dynamics.
use epicast_core::baselines::{arima_fit, ArimaOrder};
use epicast_core::date::Day;
use epicast_core::features::assemble_cluster_dataset;
use epicast_core::neural::{train, BiLstmNetwork, NetworkConfig, TrainConfig};
use epicast_core::series::{LockdownLevels, MultivariateSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn ar1(phi: f64, sigma: f64, n: usize, burn: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut x = 0.0;
    let mut values = Vec::with_capacity(n);
    for i in 0..n + burn {
        x = phi * x + normal.sample(&mut rng);
        if i >= burn {
            values.push(x);
        }
    }
    values
}

fn main() {
    for burn in [0usize, 100] {
        let mut fails = vec![];
        for seed in 0..30u64 {
            let values = ar1(0.8, 0.01, 500, burn, seed);
            let model = arima_fit(&values, ArimaOrder::new(1, 0, 0)).unwrap();
            let err = (model.ar[0] - 0.8).abs();
            if err > 0.05 {
                fails.push((seed, model.ar[0]));
            }
        }
        println!("burn {burn}: fails {fails:?}");
    }

    // Single-sample Adam dynamics.
    let n = 48;
    let series = MultivariateSeries::new(
        "QAT",
        Day::from_iso("2020-03-01").unwrap(),
        (0..n).map(|i| (i as f64).powf(1.3) + 5.0).collect(),
        vec![LockdownLevels::NONE; n],
    )
    .unwrap();
    let mut data = assemble_cluster_dataset(
        std::slice::from_ref(&series),
        "QAT",
        Day::from_iso("2020-03-01").unwrap() + 37,
        6,
        true,
    )
    .unwrap();
    data.train.truncate(1);
    for (lr, epochs) in [(1e-3, 500usize), (1e-2, 500), (3e-3, 500)] {
        let mut net = BiLstmNetwork::seeded(NetworkConfig {
            channels: 6,
            lookback: 6,
            hidden_sizes: vec![8, 8],
            bidirectional: true,
            seed: 4,
        });
        let trace = train(
            &mut net,
            &data,
            &TrainConfig {
                epochs,
                batch_size: 1,
                learning_rate: lr,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let first_rise = trace
            .windows(2)
            .position(|p| p[1] > p[0] + 1e-15)
            .map(|i| (i, trace[i]));
        println!(
            "lr {lr}: final {:.3e}, min {:.3e}, first rise at {:?}, loss[80] {:.3e}",
            trace.last().unwrap(),
            trace.iter().cloned().fold(f64::INFINITY, f64::min),
            first_rise,
            trace[80.min(epochs - 1)]
        );
    }
}
