//! Domain types shared across the pipeline: country indicator profiles,
//! lockdown measure levels, and the date-aligned multivariate series that
//! feeds windowing and prediction.

use crate::date::Day;
use thiserror::Error;

/// Violations of the domain type invariants.
#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("{channel} level {value} outside 0..={max}")]
    OrdinalOutOfRange {
        channel: &'static str,
        value: i64,
        max: u8,
    },
    #[error("cases channel has {cases} values but lockdown channel has {lockdown}")]
    ChannelLengthMismatch { cases: usize, lockdown: usize },
    #[error("series needs at least 2 days, got {0}")]
    SeriesTooShort(usize),
    #[error("cumulative cases at day offset {index} is {value}; must be finite and non-negative")]
    InvalidCases { index: usize, value: f64 },
}

/// One country's indicator vector. `indicators` follows the column order of
/// the dataset it was parsed from; every profile in one dataset shares that
/// schema and therefore the same vector length.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryProfile {
    pub country_id: String,
    pub indicators: Vec<f64>,
}

/// The five ordinal lockdown measures for one day.
///
/// Level ranges: school and workplace closing 0..=3, gathering restrictions
/// 0..=4, transport closing 0..=2, international travel controls 0..=4.
/// 0 always means no measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockdownLevels {
    pub school_closing: u8,
    pub workplace_closing: u8,
    pub gathering_restrictions: u8,
    pub transport_closing: u8,
    pub travel_controls: u8,
}

impl LockdownLevels {
    pub const CHANNELS: usize = 5;
    pub const NAMES: [&'static str; 5] = ["school", "workplace", "gatherings", "transport", "travel"];
    pub const MAXIMA: [u8; 5] = [3, 3, 4, 2, 4];

    /// All-zero levels: no measures in force.
    pub const NONE: LockdownLevels = LockdownLevels {
        school_closing: 0,
        workplace_closing: 0,
        gathering_restrictions: 0,
        transport_closing: 0,
        travel_controls: 0,
    };

    /// Validates each level against its channel range.
    pub fn new(levels: [i64; 5]) -> Result<LockdownLevels, SeriesError> {
        for (idx, &value) in levels.iter().enumerate() {
            let max = Self::MAXIMA[idx];
            if value < 0 || value > max as i64 {
                return Err(SeriesError::OrdinalOutOfRange {
                    channel: Self::NAMES[idx],
                    value,
                    max,
                });
            }
        }
        Ok(LockdownLevels {
            school_closing: levels[0] as u8,
            workplace_closing: levels[1] as u8,
            gathering_restrictions: levels[2] as u8,
            transport_closing: levels[3] as u8,
            travel_controls: levels[4] as u8,
        })
    }

    pub fn as_array(&self) -> [u8; 5] {
        [
            self.school_closing,
            self.workplace_closing,
            self.gathering_restrictions,
            self.transport_closing,
            self.travel_controls,
        ]
    }
}

/// Lockdown levels reported for one country on one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockdownRecord {
    pub date: Day,
    pub levels: LockdownLevels,
}

/// Date-aligned channels for one country: cumulative cases plus the five
/// lockdown ordinals, one record per consecutive calendar day.
///
/// Storing the start day plus per-day vectors makes the "strictly
/// increasing, gap-free" date invariant structural: day `i` is `start + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    country_id: String,
    start: Day,
    cumulative_cases: Vec<f64>,
    lockdown: Vec<LockdownLevels>,
}

impl MultivariateSeries {
    /// Checked constructor: channels share one length ≥ 2 and every case
    /// value is finite and non-negative.
    pub fn new(
        country_id: impl Into<String>,
        start: Day,
        cumulative_cases: Vec<f64>,
        lockdown: Vec<LockdownLevels>,
    ) -> Result<MultivariateSeries, SeriesError> {
        if cumulative_cases.len() != lockdown.len() {
            return Err(SeriesError::ChannelLengthMismatch {
                cases: cumulative_cases.len(),
                lockdown: lockdown.len(),
            });
        }
        if cumulative_cases.len() < 2 {
            return Err(SeriesError::SeriesTooShort(cumulative_cases.len()));
        }
        for (index, &value) in cumulative_cases.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(SeriesError::InvalidCases { index, value });
            }
        }
        Ok(MultivariateSeries {
            country_id: country_id.into(),
            start,
            cumulative_cases,
            lockdown,
        })
    }

    pub fn country_id(&self) -> &str {
        &self.country_id
    }

    pub fn start(&self) -> Day {
        self.start
    }

    pub fn end(&self) -> Day {
        self.start + (self.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.cumulative_cases.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor requires at least 2 days
    }

    pub fn date_at(&self, index: usize) -> Day {
        debug_assert!(index < self.len());
        self.start + index as i64
    }

    /// Index of `day` within the series, if covered.
    pub fn index_of(&self, day: Day) -> Option<usize> {
        let offset = day - self.start;
        if offset < 0 || offset >= self.len() as i64 {
            None
        } else {
            Some(offset as usize)
        }
    }

    pub fn dates(&self) -> impl Iterator<Item = Day> + '_ {
        (0..self.len() as i64).map(move |i| self.start + i)
    }

    pub fn cases(&self) -> &[f64] {
        &self.cumulative_cases
    }

    pub fn lockdown(&self) -> &[LockdownLevels] {
        &self.lockdown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> Day {
        Day::from_iso(s).unwrap()
    }

    #[test]
    fn levels_accept_channel_maxima() {
        let levels = LockdownLevels::new([3, 3, 4, 2, 4]).unwrap();
        assert_eq!(levels.as_array(), [3, 3, 4, 2, 4]);
    }

    #[test]
    fn levels_reject_out_of_range() {
        let err = LockdownLevels::new([0, 0, 0, 3, 0]).unwrap_err();
        assert_eq!(
            err,
            SeriesError::OrdinalOutOfRange {
                channel: "transport",
                value: 3,
                max: 2,
            }
        );
        assert!(LockdownLevels::new([-1, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn series_dates_are_consecutive() {
        let s = MultivariateSeries::new(
            "QAT",
            day("2020-03-10"),
            vec![24.0, 262.0, 262.0],
            vec![LockdownLevels::NONE; 3],
        )
        .unwrap();
        let dates: Vec<Day> = s.dates().collect();
        assert_eq!(dates.len(), 3);
        assert_eq!(dates[2] - dates[0], 2);
        assert_eq!(s.end().to_iso(), "2020-03-12");
        assert_eq!(s.index_of(day("2020-03-11")), Some(1));
        assert_eq!(s.index_of(day("2020-03-13")), None);
    }

    #[test]
    fn series_rejects_short_or_ragged_input() {
        let start = day("2020-03-10");
        assert_eq!(
            MultivariateSeries::new("QAT", start, vec![1.0], vec![LockdownLevels::NONE]),
            Err(SeriesError::SeriesTooShort(1))
        );
        assert!(matches!(
            MultivariateSeries::new("QAT", start, vec![1.0, 2.0], vec![LockdownLevels::NONE]),
            Err(SeriesError::ChannelLengthMismatch { .. })
        ));
        assert!(matches!(
            MultivariateSeries::new(
                "QAT",
                start,
                vec![1.0, -2.0],
                vec![LockdownLevels::NONE; 2]
            ),
            Err(SeriesError::InvalidCases { index: 1, .. })
        ));
    }
}
