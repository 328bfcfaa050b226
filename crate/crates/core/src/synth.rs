//! Deterministic synthetic dataset: a 12-country world in three indicator
//! blobs, with lockdown-modulated epidemic case curves.
//!
//! The bundled sample files under `data/sample/` are a dump of
//! [`sample_world`] at its default seed, so every command is runnable
//! offline and tests can regenerate the exact same data in memory.
//!
//! Case dynamics: daily new cases follow a bell-shaped wave scaled by the
//! current lockdown stringency and a weekly reporting pattern, plus a
//! small random shock. Tightening measures cuts the daily counts;
//! easing them lifts the counts back up the same day. Three of the
//! target's cluster peers ease while still inside a typical training
//! range, and the target eases late, inside a typical evaluation range —
//! so the lockdown channels carry signal that the case history alone
//! reveals only with a lag.

use crate::date::Day;
use crate::ingest::{CasesTable, LockdownTable};
use crate::series::{CountryProfile, LockdownLevels, LockdownRecord};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;

/// Seed behind the committed sample files.
pub const SAMPLE_SEED: u64 = 7;

/// The full synthetic dataset.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub indicator_schema: Vec<String>,
    pub profiles: Vec<CountryProfile>,
    pub cases: CasesTable,
    pub lockdown: LockdownTable,
    pub start: Day,
    pub end: Day,
    pub target: String,
    /// The blob the target belongs to.
    pub target_cluster: Vec<String>,
    /// Country ids grouped by blob, in generation order.
    pub blobs: Vec<Vec<String>>,
}

struct CountrySpec {
    id: &'static str,
    blob: usize,
    /// Peak daily new cases before damping.
    amplitude: f64,
    /// Day offset of the wave's peak.
    peak: f64,
    /// Wave width (standard deviation, in days).
    width: f64,
    initial_cases: f64,
    /// Day offset when measures are imposed (staged over a few days).
    lockdown_day: i64,
    /// Day offset when measures are partially eased; 0 disables easing.
    easing_day: i64,
}

const COUNTRIES: [CountrySpec; 12] = [
    // Blob 0: the target's cluster. OMN/BHR/ARE ease while the default
    // 80/20 split still has them in training; QAT eases late.
    CountrySpec { id: "QAT", blob: 0, amplitude: 2600.0, peak: 92.0, width: 34.0, initial_cases: 30.0, lockdown_day: 24, easing_day: 140 },
    CountrySpec { id: "OMN", blob: 0, amplitude: 1800.0, peak: 85.0, width: 30.0, initial_cases: 20.0, lockdown_day: 27, easing_day: 100 },
    CountrySpec { id: "BHR", blob: 0, amplitude: 1100.0, peak: 75.0, width: 28.0, initial_cases: 35.0, lockdown_day: 21, easing_day: 108 },
    CountrySpec { id: "ARE", blob: 0, amplitude: 1500.0, peak: 80.0, width: 32.0, initial_cases: 25.0, lockdown_day: 23, easing_day: 118 },
    // Blob 1.
    CountrySpec { id: "BEL", blob: 1, amplitude: 1400.0, peak: 70.0, width: 26.0, initial_cases: 40.0, lockdown_day: 30, easing_day: 118 },
    CountrySpec { id: "CAN", blob: 1, amplitude: 2200.0, peak: 88.0, width: 36.0, initial_cases: 35.0, lockdown_day: 33, easing_day: 0 },
    CountrySpec { id: "FIN", blob: 1, amplitude: 260.0, peak: 66.0, width: 24.0, initial_cases: 12.0, lockdown_day: 28, easing_day: 110 },
    CountrySpec { id: "SWE", blob: 1, amplitude: 1600.0, peak: 96.0, width: 40.0, initial_cases: 30.0, lockdown_day: 40, easing_day: 0 },
    // Blob 2.
    CountrySpec { id: "BRA", blob: 2, amplitude: 9000.0, peak: 110.0, width: 42.0, initial_cases: 60.0, lockdown_day: 35, easing_day: 120 },
    CountrySpec { id: "IND", blob: 2, amplitude: 7000.0, peak: 118.0, width: 44.0, initial_cases: 45.0, lockdown_day: 31, easing_day: 130 },
    CountrySpec { id: "MEX", blob: 2, amplitude: 3200.0, peak: 100.0, width: 38.0, initial_cases: 25.0, lockdown_day: 37, easing_day: 0 },
    CountrySpec { id: "ZAF", blob: 2, amplitude: 3600.0, peak: 105.0, width: 40.0, initial_cases: 20.0, lockdown_day: 29, easing_day: 126 },
];

/// Indicator archetypes per blob, jittered per country. Order matches the
/// schema built in [`sample_world`].
const BLOB_INDICATORS: [[f64; 11]; 3] = [
    // median_age, age_0_14, age_15_39, age_40_64, age_65_plus, population,
    // density, urban_share, gdp_per_capita, beds, lung deaths f/m
    [31.0, 0.14, 0.55, 0.28, 0.03, 4.0e6, 240.0, 0.93, 58_000.0, 1.4, 8.0],
    [42.0, 0.16, 0.31, 0.33, 0.20, 1.6e7, 110.0, 0.82, 46_000.0, 3.1, 22.0],
    [28.0, 0.26, 0.41, 0.26, 0.07, 4.0e8, 95.0, 0.64, 9_000.0, 1.1, 14.0],
];

/// Weekly reporting pattern (index: day number mod 7); averages to ~1.
const WEEKDAY_FACTOR: [f64; 7] = [0.70, 1.12, 1.18, 1.10, 1.04, 0.98, 0.88];

fn full_lockdown() -> LockdownLevels {
    LockdownLevels::new([3, 3, 4, 2, 4]).unwrap()
}

fn eased_lockdown() -> LockdownLevels {
    LockdownLevels::new([2, 2, 3, 1, 3]).unwrap()
}

fn partial_lockdown() -> LockdownLevels {
    LockdownLevels::new([3, 1, 2, 1, 3]).unwrap()
}

/// Mean of the per-channel levels relative to their maxima, in [0, 1].
fn stringency(levels: LockdownLevels) -> f64 {
    let total: f64 = levels
        .as_array()
        .iter()
        .zip(LockdownLevels::MAXIMA)
        .map(|(&v, max)| v as f64 / max as f64)
        .sum();
    total / LockdownLevels::CHANNELS as f64
}

/// Lockdown records for one country: staged imposition, then optional
/// partial easing.
fn lockdown_schedule(spec: &CountrySpec, start: Day) -> Vec<LockdownRecord> {
    let mut records = vec![
        LockdownRecord {
            date: start + spec.lockdown_day,
            levels: partial_lockdown(),
        },
        LockdownRecord {
            date: start + spec.lockdown_day + 4,
            levels: full_lockdown(),
        },
    ];
    if spec.easing_day > 0 {
        records.push(LockdownRecord {
            date: start + spec.easing_day,
            levels: eased_lockdown(),
        });
    }
    records
}

/// Per-day levels over the whole window, forward-filled from the schedule.
fn levels_by_day(records: &[LockdownRecord], start: Day, days: i64) -> Vec<LockdownLevels> {
    let mut out = Vec::with_capacity(days as usize);
    let mut current = LockdownLevels::NONE;
    let mut cursor = 0usize;
    for offset in 0..days {
        let day = start + offset;
        while cursor < records.len() && records[cursor].date <= day {
            current = records[cursor].levels;
            cursor += 1;
        }
        out.push(current);
    }
    out
}

/// Builds the full synthetic world. Deterministic in `seed`.
pub fn sample_world(seed: u64) -> SyntheticWorld {
    let start = Day::from_iso("2020-02-15").unwrap();
    let end = Day::from_iso("2020-07-31").unwrap();
    let days = end - start + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut schema: Vec<String> = vec!["median_age".to_string()];
    for band in ["age_0_14", "age_15_39", "age_40_64", "age_65_plus"] {
        schema.push(band.to_string());
    }
    for name in [
        "population",
        "density",
        "urban_share",
        "gdp_per_capita",
        "hospital_beds_per_1000",
        "lung_deaths_female",
        "lung_deaths_male",
    ] {
        schema.push(name.to_string());
    }

    // lung_deaths_male is derived from the female column below, keeping the
    // vector length aligned with the schema.
    let mut profiles = Vec::new();
    let mut blobs: Vec<Vec<String>> = vec![Vec::new(); 3];
    for spec in &COUNTRIES {
        let archetype = &BLOB_INDICATORS[spec.blob];
        let mut indicators = Vec::with_capacity(schema.len());
        for (idx, &center) in archetype.iter().enumerate() {
            let jitter = 1.0 + 0.04 * (rng.random::<f64>() - 0.5);
            let mut value = center * jitter;
            // Fractions stay inside [0, 1].
            if (1..=4).contains(&idx) || idx == 7 {
                value = value.clamp(0.01, 0.99);
            }
            indicators.push(value);
        }
        // Age-band shares renormalized to sum to 1.
        let band_sum: f64 = indicators[1..=4].iter().sum();
        for band in &mut indicators[1..=4] {
            *band /= band_sum;
        }
        let male_rate = indicators[10] * 1.6;
        indicators.push(male_rate);
        profiles.push(CountryProfile {
            country_id: spec.id.to_string(),
            indicators,
        });
        blobs[spec.blob].push(spec.id.to_string());
    }

    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut cases = CasesTable::new();
    let mut lockdown = LockdownTable::new();
    for spec in &COUNTRIES {
        let records = lockdown_schedule(spec, start);
        let levels = levels_by_day(&records, start, days);
        let mut values = Vec::with_capacity(days as usize);
        let mut level = spec.initial_cases;
        values.push((start, level.round()));
        for offset in 1..days {
            let day = start + offset;
            let bell =
                (-((offset as f64 - spec.peak) * (offset as f64 - spec.peak))
                    / (2.0 * spec.width * spec.width))
                    .exp();
            let damping = 1.0 - 0.8 * stringency(levels[offset as usize]);
            let weekday = WEEKDAY_FACTOR[(day.0.rem_euclid(7)) as usize];
            let shock = 1.0 + 0.05 * noise.sample(&mut rng);
            let increment = (spec.amplitude * bell * damping * weekday * shock).max(0.0);
            level += increment;
            values.push((day, level.round()));
        }
        cases.insert(spec.id.to_string(), values);
        lockdown.insert(spec.id.to_string(), records);
    }

    SyntheticWorld {
        indicator_schema: schema,
        profiles,
        cases,
        lockdown,
        start,
        end,
        target: "QAT".to_string(),
        target_cluster: blobs[0].clone(),
        blobs,
    }
}

/// CSV dumps of the world, keyed by file stem (`cases`, `lockdown`,
/// `indicators`).
pub fn world_to_csv(world: &SyntheticWorld) -> BTreeMap<&'static str, String> {
    let mut out = BTreeMap::new();
    out.insert("cases", crate::ingest::cases_to_csv(&world.cases));
    out.insert("lockdown", crate::ingest::lockdown_to_csv(&world.lockdown));
    out.insert(
        "indicators",
        crate::ingest::indicators_to_csv(&world.indicator_schema, &world.profiles),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{cluster_of, elbow_select, standardize, ClusterModel, InitMethod};
    use crate::ingest::align_series;

    #[test]
    fn world_is_deterministic() {
        let a = sample_world(SAMPLE_SEED);
        let b = sample_world(SAMPLE_SEED);
        assert_eq!(a.cases, b.cases);
        assert_eq!(a.profiles, b.profiles);
    }

    #[test]
    fn window_spans_168_days_per_country() {
        let world = sample_world(SAMPLE_SEED);
        assert_eq!(world.end - world.start + 1, 168);
        for rows in world.cases.values() {
            assert_eq!(rows.len(), 168);
        }
    }

    #[test]
    fn curves_are_monotone() {
        let world = sample_world(SAMPLE_SEED);
        for (id, rows) in &world.cases {
            for pair in rows.windows(2) {
                assert!(pair[1].1 >= pair[0].1, "{id} dips at {}", pair[1].0);
            }
        }
    }

    #[test]
    fn test_range_stays_near_the_training_scale() {
        // The default 80/20 split must leave the hold-out values close
        // enough to the training maximum for min-max scaled inputs to stay
        // meaningful.
        let world = sample_world(SAMPLE_SEED);
        let rows = &world.cases["QAT"];
        let split = (0.8 * rows.len() as f64).floor() as usize - 1;
        let train_max = rows[split].1;
        let test_max = rows.last().unwrap().1;
        let ratio = test_max / train_max;
        assert!(
            (1.02..=1.35).contains(&ratio),
            "test/train level ratio {ratio}"
        );
    }

    #[test]
    fn easing_lifts_daily_increments() {
        let world = sample_world(SAMPLE_SEED);
        let rows = &world.cases["QAT"];
        let inc = |day: usize| rows[day].1 - rows[day - 1].1;
        // Compare week-long windows just before and just after the easing
        // day (140), which cancels the weekly pattern.
        let before: f64 = (133..140).map(inc).sum();
        let after: f64 = (140..147).map(inc).sum();
        assert!(
            after > 1.5 * before,
            "easing bump too weak: {after} vs {before}"
        );
    }

    #[test]
    fn aligned_series_covers_the_window() {
        let world = sample_world(SAMPLE_SEED);
        let series = align_series(
            "QAT",
            &world.cases["QAT"],
            &world.lockdown["QAT"],
            world.start,
            world.end,
        )
        .unwrap();
        assert_eq!(series.len(), 168);
        // Pre-lockdown days carry no measures; post-lockdown days do.
        assert_eq!(series.lockdown()[0], LockdownLevels::NONE);
        assert_eq!(series.lockdown()[60], full_lockdown());
    }

    #[test]
    fn indicator_blobs_cluster_cleanly_at_k_3() {
        let world = sample_world(SAMPLE_SEED);
        let points = standardize(&world.profiles).unwrap();
        let outcome = elbow_select(&points, 1, 8, 11, 5, 200, InitMethod::KmeansPlusPlus).unwrap();
        assert_eq!(outcome.scan.selected_k, 3);
        let ids: Vec<String> = world.profiles.iter().map(|p| p.country_id.clone()).collect();
        let model = ClusterModel::from_fit(&ids, &points, outcome.selected_fit().clone());
        let cluster = cluster_of(&model, "QAT").unwrap();
        let expected: std::collections::BTreeSet<String> =
            world.target_cluster.iter().cloned().collect();
        assert_eq!(cluster, expected);
    }
}
