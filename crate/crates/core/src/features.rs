//! Channel normalization, fixed-lookback supervised windows, and the
//! cluster-pooled train/test split.
//!
//! Cases are min-max scaled per country on that country's training range
//! only; lockdown ordinals are divided by their fixed channel maxima
//! (3, 3, 4, 2, 4). Input windows therefore stay comparable across
//! countries of very different size, which pooling requires.

use crate::date::Day;
use crate::linalg::Mat;
use crate::series::{LockdownLevels, MultivariateSeries};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("series of {len} days is too short for lookback {lookback} + horizon {horizon}")]
    SeriesTooShort {
        len: usize,
        lookback: usize,
        horizon: usize,
    },
    #[error("target country {0} is not in the cluster")]
    TargetNotInCluster(String),
    #[error("{country}: needs ≥ {needed} days {side} the split date, has {available}")]
    InsufficientHistory {
        country: String,
        side: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("country {0} appears twice in the cluster")]
    DuplicateCountry(String),
}

/// Min-max scaler for one channel, fit on the training range only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScaler {
    min: f64,
    max: f64,
}

impl ChannelScaler {
    /// Fits min and max over the sequence. A degenerate scaler
    /// (max == min) maps everything to 0.
    pub fn fit(values: &[f64]) -> Result<ChannelScaler, FeatureError> {
        if values.is_empty() {
            return Err(FeatureError::EmptySequence);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ChannelScaler { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn transform(&self, value: f64) -> f64 {
        if self.max > self.min {
            (value - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    pub fn inverse(&self, scaled: f64) -> f64 {
        if self.max > self.min {
            self.min + scaled * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// Number of input channels: normalized cases, optionally followed by the
/// five normalized lockdown ordinals.
pub fn channel_count(use_lockdown: bool) -> usize {
    if use_lockdown {
        1 + LockdownLevels::CHANNELS
    } else {
        1
    }
}

/// One supervised sample: a lookback × channels input window and the
/// normalized cases value at the following day.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub inputs: Mat,
    pub target: f64,
    pub country_id: String,
    pub target_date: Day,
}

/// Cluster-pooled training samples plus the target country's hold-out
/// windows, with the per-country case scalers that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
    pub scalers: BTreeMap<String, ChannelScaler>,
    pub lookback: usize,
    pub use_lockdown: bool,
}

/// Builds the scaled input window covering series indices
/// `[end_exclusive − lookback, end_exclusive)`.
pub fn window_at(
    series: &MultivariateSeries,
    end_exclusive: usize,
    lookback: usize,
    scaler: &ChannelScaler,
    use_lockdown: bool,
) -> Mat {
    assert!(end_exclusive >= lookback && end_exclusive <= series.len());
    let channels = channel_count(use_lockdown);
    let cases = series.cases();
    let lockdown = series.lockdown();
    Mat::from_fn(lookback, channels, |row, col| {
        let idx = end_exclusive - lookback + row;
        if col == 0 {
            scaler.transform(cases[idx])
        } else {
            let levels = lockdown[idx].as_array();
            levels[col - 1] as f64 / LockdownLevels::MAXIMA[col - 1] as f64
        }
    })
}

/// Slides a lookback window over the series, producing one sample per
/// admissible position: sample `j` reads days `[j, j+lookback)` and targets
/// day `j + lookback + horizon − 1`.
pub fn make_windows(
    series: &MultivariateSeries,
    lookback: usize,
    horizon: usize,
    scaler: &ChannelScaler,
    use_lockdown: bool,
) -> Result<Vec<WindowedSample>, FeatureError> {
    assert!(lookback >= 1, "lookback must be positive");
    assert!(horizon >= 1, "horizon must be positive");
    let n = series.len();
    if n < lookback + horizon {
        return Err(FeatureError::SeriesTooShort {
            len: n,
            lookback,
            horizon,
        });
    }
    let count = n - lookback - horizon + 1;
    let mut samples = Vec::with_capacity(count);
    for j in 0..count {
        let target_index = j + lookback + horizon - 1;
        samples.push(WindowedSample {
            inputs: window_at(series, j + lookback, lookback, scaler, use_lockdown),
            target: scaler.transform(series.cases()[target_index]),
            country_id: series.country_id().to_string(),
            target_date: series.date_at(target_index),
        });
    }
    Ok(samples)
}

/// Truncates a series to its first `days` days.
fn head(series: &MultivariateSeries, days: usize) -> MultivariateSeries {
    MultivariateSeries::new(
        series.country_id(),
        series.start(),
        series.cases()[..days].to_vec(),
        series.lockdown()[..days].to_vec(),
    )
    .expect("a prefix of a valid series is valid")
}

/// Assembles the pooled dataset: training windows from every cluster
/// country with targets on or before `split_date`, hold-out windows from
/// the target country with targets after it. Case scalers are fit on each
/// country's training range only, so nothing on the test side can leak
/// into a scaler or a training sample.
pub fn assemble_cluster_dataset(
    cluster_series: &[MultivariateSeries],
    target_country: &str,
    split_date: Day,
    lookback: usize,
    use_lockdown: bool,
) -> Result<SplitDataset, FeatureError> {
    let target = cluster_series
        .iter()
        .find(|s| s.country_id() == target_country)
        .ok_or_else(|| FeatureError::TargetNotInCluster(target_country.to_string()))?;

    let mut ordered: Vec<&MultivariateSeries> = cluster_series.iter().collect();
    ordered.sort_by(|a, b| a.country_id().cmp(b.country_id()));
    for pair in ordered.windows(2) {
        if pair[0].country_id() == pair[1].country_id() {
            return Err(FeatureError::DuplicateCountry(
                pair[0].country_id().to_string(),
            ));
        }
    }

    let mut scalers = BTreeMap::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for series in ordered {
        let country = series.country_id().to_string();
        let split_index = series.index_of(split_date).ok_or_else(|| {
            FeatureError::InsufficientHistory {
                country: country.clone(),
                side: "around",
                needed: lookback + 1,
                available: 0,
            }
        })?;
        let train_days = split_index + 1;
        if train_days < lookback + 1 {
            return Err(FeatureError::InsufficientHistory {
                country,
                side: "before",
                needed: lookback + 1,
                available: train_days,
            });
        }
        let test_days = series.len() - train_days;
        if test_days < lookback + 1 {
            return Err(FeatureError::InsufficientHistory {
                country,
                side: "after",
                needed: lookback + 1,
                available: test_days,
            });
        }

        let scaler = ChannelScaler::fit(&series.cases()[..train_days])?;
        scalers.insert(country.clone(), scaler);

        // Training windows come from the truncated series, so no window can
        // reach past the split.
        train.extend(make_windows(
            &head(series, train_days),
            lookback,
            1,
            &scaler,
            use_lockdown,
        )?);

        if series.country_id() == target.country_id() {
            test.extend(
                make_windows(series, lookback, 1, &scaler, use_lockdown)?
                    .into_iter()
                    .filter(|sample| sample.target_date > split_date),
            );
        }
    }

    Ok(SplitDataset {
        train,
        test,
        scalers,
        lookback,
        use_lockdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LockdownLevels;

    fn day(s: &str) -> Day {
        Day::from_iso(s).unwrap()
    }

    fn linear_series(id: &str, start: Day, n: usize) -> MultivariateSeries {
        MultivariateSeries::new(
            id,
            start,
            (0..n).map(|i| 10.0 * i as f64).collect(),
            vec![LockdownLevels::new([1, 0, 2, 0, 3]).unwrap(); n],
        )
        .unwrap()
    }

    #[test]
    fn scaler_maps_endpoints_to_unit_interval() {
        let scaler = ChannelScaler::fit(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(scaler.transform(2.0), 0.0);
        assert_eq!(scaler.transform(4.0), 0.5);
        assert_eq!(scaler.transform(6.0), 1.0);
    }

    #[test]
    fn degenerate_scaler_maps_to_zero() {
        let scaler = ChannelScaler::fit(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(scaler.transform(7.0), 0.0);
        assert_eq!(scaler.inverse(scaler.transform(7.0)), 7.0);
    }

    #[test]
    fn empty_sequence_is_rejected() {
        assert_eq!(ChannelScaler::fit(&[]), Err(FeatureError::EmptySequence));
    }

    #[test]
    fn scaler_round_trips() {
        let scaler = ChannelScaler::fit(&[5.0, 25.0]).unwrap();
        for v in [5.0, 9.5, 17.25, 25.0, 40.0] {
            assert!((scaler.inverse(scaler.transform(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn window_count_and_target_indexing() {
        let series = linear_series("QAT", day("2020-03-01"), 10);
        let scaler = ChannelScaler::fit(series.cases()).unwrap();
        let samples = make_windows(&series, 6, 1, &scaler, true).unwrap();
        assert_eq!(samples.len(), 4); // 10 − 6 − 1 + 1
        assert_eq!(samples[0].target_date, series.date_at(6));
        assert_eq!(samples[0].inputs.rows(), 6);
        assert_eq!(samples[0].inputs.cols(), 6);
        assert_eq!(samples[0].target, scaler.transform(60.0));
    }

    #[test]
    fn boundary_window_counts() {
        let seven = linear_series("QAT", day("2020-03-01"), 7);
        let scaler = ChannelScaler::fit(seven.cases()).unwrap();
        assert_eq!(make_windows(&seven, 6, 1, &scaler, true).unwrap().len(), 1);

        let six = linear_series("QAT", day("2020-03-01"), 6);
        assert_eq!(
            make_windows(&six, 6, 1, &scaler, true),
            Err(FeatureError::SeriesTooShort {
                len: 6,
                lookback: 6,
                horizon: 1
            })
        );
    }

    #[test]
    fn lockdown_channels_divide_by_their_maxima() {
        let series = linear_series("QAT", day("2020-03-01"), 8);
        let scaler = ChannelScaler::fit(series.cases()).unwrap();
        let samples = make_windows(&series, 6, 1, &scaler, true).unwrap();
        let row = samples[0].inputs.row(0);
        assert!((row[1] - 1.0 / 3.0).abs() < 1e-12); // school 1 of 3
        assert_eq!(row[2], 0.0);
        assert_eq!(row[3], 0.5); // gatherings 2 of 4
        assert_eq!(row[4], 0.0);
        assert_eq!(row[5], 0.75); // travel 3 of 4
    }

    #[test]
    fn without_lockdown_only_the_case_channel_remains() {
        let series = linear_series("QAT", day("2020-03-01"), 8);
        let scaler = ChannelScaler::fit(series.cases()).unwrap();
        let samples = make_windows(&series, 6, 1, &scaler, false).unwrap();
        assert_eq!(samples[0].inputs.cols(), 1);
    }

    fn four_country_cluster(n: usize) -> Vec<MultivariateSeries> {
        ["QAT", "OMN", "BHR", "ARE"]
            .iter()
            .map(|id| linear_series(id, day("2020-02-15"), n))
            .collect()
    }

    #[test]
    fn pooled_sample_counts_follow_the_window_formula() {
        // 168 days, first 138 on the training side, lookback 6:
        // train = 4 × (138 − 6), test = 30.
        let cluster = four_country_cluster(168);
        let split = day("2020-02-15") + 137;
        let data = assemble_cluster_dataset(&cluster, "QAT", split, 6, true).unwrap();
        assert_eq!(data.train.len(), 4 * 132);
        assert_eq!(data.test.len(), 30);
        assert!(data.train.iter().all(|s| s.target_date <= split));
        assert!(data.test.iter().all(|s| s.target_date > split));
        assert!(data.test.iter().all(|s| s.country_id == "QAT"));
        // Deterministic ordering: country id, then date.
        let ids: Vec<&str> = data.train.iter().map(|s| s.country_id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn single_country_cluster_behaves_as_country_only_training() {
        let series = linear_series("QAT", day("2020-02-15"), 40);
        let split = day("2020-02-15") + 29;
        let data =
            assemble_cluster_dataset(std::slice::from_ref(&series), "QAT", split, 6, true).unwrap();
        assert_eq!(data.train.len(), 30 - 6);
        assert_eq!(data.test.len(), 10);
    }

    #[test]
    fn missing_target_is_rejected() {
        let cluster = four_country_cluster(40);
        let split = day("2020-02-15") + 29;
        assert_eq!(
            assemble_cluster_dataset(&cluster, "BEL", split, 6, true),
            Err(FeatureError::TargetNotInCluster("BEL".to_string()))
        );
    }

    #[test]
    fn short_test_side_is_rejected() {
        let cluster = four_country_cluster(40);
        let split = day("2020-02-15") + 36; // 3 test days < lookback + 1
        assert!(matches!(
            assemble_cluster_dataset(&cluster, "QAT", split, 6, true),
            Err(FeatureError::InsufficientHistory { side: "after", .. })
        ));
    }

    #[test]
    fn scalers_ignore_the_test_range() {
        let start = day("2020-02-15");
        let mut cases: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let baseline = MultivariateSeries::new(
            "QAT",
            start,
            cases.clone(),
            vec![LockdownLevels::NONE; 40],
        )
        .unwrap();
        let split = start + 29;
        let a = assemble_cluster_dataset(std::slice::from_ref(&baseline), "QAT", split, 6, true)
            .unwrap();

        // Perturb a value strictly after the split.
        cases[35] = 1e6;
        let perturbed =
            MultivariateSeries::new("QAT", start, cases, vec![LockdownLevels::NONE; 40]).unwrap();
        let b = assemble_cluster_dataset(std::slice::from_ref(&perturbed), "QAT", split, 6, true)
            .unwrap();

        assert_eq!(a.scalers["QAT"], b.scalers["QAT"]);
        assert_eq!(a.train, b.train);
    }

    #[test]
    fn training_inputs_stay_in_unit_interval() {
        let cluster = four_country_cluster(60);
        let split = day("2020-02-15") + 44;
        let data = assemble_cluster_dataset(&cluster, "QAT", split, 6, true).unwrap();
        for sample in &data.train {
            for v in sample.inputs.data() {
                assert!((0.0..=1.0).contains(v), "channel value {v} out of range");
            }
        }
    }
}
