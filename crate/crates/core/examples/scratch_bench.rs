// Scratch: run the synthetic benchmark orderings across seeds and time it.
use epicast_core::baselines::{rolling_baseline, ArimaOrder, BaselineMethod};
use epicast_core::features::assemble_cluster_dataset;
use epicast_core::ingest::align_series;
use epicast_core::metrics::rmse;
use epicast_core::neural::{predict_rolling, train, BiLstmNetwork, NetworkConfig, TrainConfig};
use epicast_core::synth::{sample_world, SAMPLE_SEED};
use std::time::Instant;

fn main() {
    let world = sample_world(SAMPLE_SEED);
    let cluster: Vec<_> = world
        .target_cluster
        .iter()
        .map(|id| {
            align_series(
                id,
                &world.cases[id],
                &world.lockdown[id],
                world.start,
                world.end,
            )
            .unwrap()
        })
        .collect();
    let n = 168;
    let n_train = (0.8 * n as f64).floor() as usize;
    let split = world.start + (n_train as i64 - 1);
    println!("split at {} ({} train days)", split, n_train);

    let target_series = cluster
        .iter()
        .find(|s| s.country_id() == "QAT")
        .unwrap()
        .clone();
    let actual: Vec<f64> = target_series.cases()[n_train..].to_vec();

    // Baselines.
    let sma = rolling_baseline(
        target_series.cases(),
        n_train,
        &BaselineMethod::Sma { window: 6 },
    )
    .unwrap();
    let arima = rolling_baseline(
        target_series.cases(),
        n_train,
        &BaselineMethod::Arima {
            order: ArimaOrder::new(1, 1, 1),
            refit_each_day: false,
        },
    )
    .unwrap();
    let holt = rolling_baseline(
        target_series.cases(),
        n_train,
        &BaselineMethod::Holt {
            alpha: 0.5,
            beta: 0.5,
        },
    )
    .unwrap();
    println!(
        "sma rmse {:.1}  arima rmse {:.1}  holt rmse {:.1}",
        rmse(&actual, &sma).unwrap(),
        rmse(&actual, &arima).unwrap(),
        rmse(&actual, &holt).unwrap()
    );

    for (hidden, epochs) in [(vec![32usize, 32], 200usize), (vec![16, 16], 80)] {
        println!("--- hidden {hidden:?} epochs {epochs}");
        let mut with_rmse = vec![];
        let mut without_rmse = vec![];
        let t0 = Instant::now();
        for seed in [42u64, 43, 44, 45, 46] {
            for use_lockdown in [true, false] {
                let data =
                    assemble_cluster_dataset(&cluster, "QAT", split, 6, use_lockdown).unwrap();
                let mut net = BiLstmNetwork::seeded(NetworkConfig {
                    channels: if use_lockdown { 6 } else { 1 },
                    lookback: 6,
                    hidden_sizes: hidden.clone(),
                    bidirectional: true,
                    seed,
                });
                let cfg = TrainConfig {
                    epochs,
                    seed,
                    ..TrainConfig::default()
                };
                let trace = train(&mut net, &data, &cfg).unwrap();
                let preds = predict_rolling(&net, &target_series, &data.scalers["QAT"], split)
                    .unwrap();
                let values: Vec<f64> = preds.iter().map(|(_, v)| *v).collect();
                let r = rmse(&actual, &values).unwrap();
                if use_lockdown {
                    with_rmse.push(r);
                } else {
                    without_rmse.push(r);
                }
                println!(
                    "seed {seed} lockdown {use_lockdown}: rmse {r:.1} (final loss {:.2e})",
                    trace.last().unwrap()
                );
            }
        }
        let mut w = with_rmse.clone();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut wo = without_rmse.clone();
        wo.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "median with {:.1}, median without {:.1}, elapsed {:.1?}",
            w[2],
            wo[2],
            t0.elapsed()
        );
    }
}
