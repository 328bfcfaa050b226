//! Calendar days as integer offsets.
//!
//! Input files carry ISO-8601 dates; everything past the parsers works on
//! [`Day`], the signed number of days since 1970-01-01. Consecutive calendar
//! days are consecutive integers, which makes gap detection and window
//! arithmetic plain integer math.

use chrono::NaiveDate;
use std::fmt;
use std::ops::{Add, Sub};

/// A calendar day, stored as days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Day(pub i64);

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

impl Day {
    /// Parses a `YYYY-MM-DD` date string.
    pub fn from_iso(s: &str) -> Option<Day> {
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
        Some(Day(date.signed_duration_since(epoch()).num_days()))
    }

    /// Formats as `YYYY-MM-DD`.
    pub fn to_iso(self) -> String {
        let date = epoch() + chrono::Duration::days(self.0);
        date.format("%Y-%m-%d").to_string()
    }
}

impl Add<i64> for Day {
    type Output = Day;

    fn add(self, days: i64) -> Day {
        Day(self.0 + days)
    }
}

impl Sub<i64> for Day {
    type Output = Day;

    fn sub(self, days: i64) -> Day {
        Day(self.0 - days)
    }
}

impl Sub for Day {
    type Output = i64;

    fn sub(self, other: Day) -> i64 {
        self.0 - other.0
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_round_trip() {
        for s in ["2020-02-15", "2020-07-31", "1969-12-31", "2020-02-29"] {
            let day = Day::from_iso(s).unwrap();
            assert_eq!(day.to_iso(), s);
        }
    }

    #[test]
    fn epoch_is_zero() {
        assert_eq!(Day::from_iso("1970-01-01"), Some(Day(0)));
        assert_eq!(Day::from_iso("1970-01-02"), Some(Day(1)));
    }

    #[test]
    fn rejects_malformed() {
        assert!(Day::from_iso("2020-13-01").is_none());
        assert!(Day::from_iso("15/02/2020").is_none());
        assert!(Day::from_iso("").is_none());
    }

    #[test]
    fn difference_counts_days() {
        let a = Day::from_iso("2020-02-15").unwrap();
        let b = Day::from_iso("2020-07-31").unwrap();
        assert_eq!(b - a, 167);
    }
}
