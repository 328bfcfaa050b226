//! Parsing, validation, and date alignment for the three input datasets:
//! cumulative cases, lockdown measure levels, and country indicators.
//!
//! All three formats are UTF-8, comma-delimited CSV with a mandatory header
//! row, ISO-8601 dates, and `.` as the decimal separator.

use crate::date::Day;
use crate::series::{
    CountryProfile, LockdownLevels, LockdownRecord, MultivariateSeries, SeriesError,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Per-country case observations, sorted by date.
pub type CasesTable = BTreeMap<String, Vec<(Day, f64)>>;

/// Per-country lockdown records, sorted by date.
pub type LockdownTable = BTreeMap<String, Vec<LockdownRecord>>;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("line {line}: non-numeric cell `{value}` in column `{column}`")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: duplicate date {date} for country {country}")]
    DuplicateDate {
        line: u64,
        country: String,
        date: Day,
    },
    #[error("line {line}: negative cases {value} for country {country}")]
    NegativeCases {
        line: u64,
        country: String,
        value: f64,
    },
    #[error("case data for {country} is missing {date}")]
    MissingCaseDay { country: String, date: Day },
    #[error("window start {start} is after end {end}")]
    InvalidWindow { start: Day, end: Day },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

const CASES_HEADER: [&str; 3] = ["country", "date", "cumulative_cases"];
const LOCKDOWN_HEADER: [&str; 7] = [
    "country",
    "date",
    "school",
    "workplace",
    "gatherings",
    "transport",
    "travel",
];

/// Scalar indicator columns that must be present, in the order they occupy
/// inside the profile vector (age-band shares are spliced in after
/// `median_age`, in header order).
const REQUIRED_INDICATORS: [&str; 8] = [
    "median_age",
    "population",
    "density",
    "urban_share",
    "gdp_per_capita",
    "hospital_beds_per_1000",
    "lung_deaths_female",
    "lung_deaths_male",
];

/// Columns holding fractions, which must lie in \[0, 1\].
fn is_fraction_column(name: &str) -> bool {
    name.starts_with("age_") || name == "urban_share"
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn check_header(record: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    for name in expected {
        if !record.iter().any(|h| h.trim() == *name) {
            return Err(IngestError::MissingColumn((*name).to_string()));
        }
    }
    if record.len() != expected.len() {
        return Err(IngestError::MalformedRow {
            line: 1,
            reason: format!(
                "expected header {:?}, got {} columns",
                expected.join(","),
                record.len()
            ),
        });
    }
    // Column order is fixed for the two time-series formats.
    for (got, want) in record.iter().zip(expected) {
        if got.trim() != *want {
            return Err(IngestError::MalformedRow {
                line: 1,
                reason: format!("expected column `{want}`, got `{got}`"),
            });
        }
    }
    Ok(())
}

fn parse_day(field: &str, line: u64) -> Result<Day, IngestError> {
    Day::from_iso(field.trim()).ok_or_else(|| IngestError::MalformedRow {
        line,
        reason: format!("invalid ISO-8601 date `{field}`"),
    })
}

fn parse_f64(field: &str, column: &str, line: u64) -> Result<f64, IngestError> {
    let trimmed = field.trim();
    let value: f64 = trimmed.parse().map_err(|_| IngestError::NonNumericCell {
        line,
        column: column.to_string(),
        value: trimmed.to_string(),
    })?;
    if !value.is_finite() {
        return Err(IngestError::NonNumericCell {
            line,
            column: column.to_string(),
            value: trimmed.to_string(),
        });
    }
    Ok(value)
}

fn parse_i64(field: &str, column: &str, line: u64) -> Result<i64, IngestError> {
    field
        .trim()
        .parse()
        .map_err(|_| IngestError::NonNumericCell {
            line,
            column: column.to_string(),
            value: field.trim().to_string(),
        })
}

/// Parses the cases CSV (`country,date,cumulative_cases`) into per-country
/// sequences sorted by date. Duplicate (country, date) rows and negative
/// case counts are rejected.
pub fn parse_cases_csv(path: impl AsRef<Path>) -> Result<CasesTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(reader.headers()?, &CASES_HEADER)?;

    let mut table: CasesTable = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 3 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let country = record[0].to_string();
        if country.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty country id".to_string(),
            });
        }
        let date = parse_day(&record[1], line)?;
        let cases = parse_f64(&record[2], "cumulative_cases", line)?;
        if cases < 0.0 {
            return Err(IngestError::NegativeCases {
                line,
                country,
                value: cases,
            });
        }
        let rows = table.entry(country.clone()).or_default();
        if rows.iter().any(|(d, _)| *d == date) {
            return Err(IngestError::DuplicateDate {
                line,
                country,
                date,
            });
        }
        rows.push((date, cases));
    }
    for rows in table.values_mut() {
        rows.sort_by_key(|(d, _)| *d);
    }
    Ok(table)
}

/// Parses the lockdown CSV
/// (`country,date,school,workplace,gatherings,transport,travel`) into
/// per-country record sequences sorted by date. Each ordinal is validated
/// against its channel range.
pub fn parse_lockdown_csv(path: impl AsRef<Path>) -> Result<LockdownTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(reader.headers()?, &LOCKDOWN_HEADER)?;

    let mut table: LockdownTable = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 7 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 7 fields, got {}", record.len()),
            });
        }
        let country = record[0].to_string();
        if country.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty country id".to_string(),
            });
        }
        let date = parse_day(&record[1], line)?;
        let mut raw = [0i64; LockdownLevels::CHANNELS];
        for (slot, channel) in raw.iter_mut().zip(0..LockdownLevels::CHANNELS) {
            *slot = parse_i64(&record[channel + 2], LockdownLevels::NAMES[channel], line)?;
        }
        let levels = LockdownLevels::new(raw)?;
        let rows = table.entry(country.clone()).or_default();
        if rows.iter().any(|r| r.date == date) {
            return Err(IngestError::DuplicateDate {
                line,
                country,
                date,
            });
        }
        rows.push(LockdownRecord { date, levels });
    }
    for rows in table.values_mut() {
        rows.sort_by_key(|r| r.date);
    }
    Ok(table)
}

/// A country dropped while parsing the indicators CSV, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub country_id: String,
    pub reason: String,
}

/// Result of parsing the indicators CSV: complete profiles with a uniform
/// vector schema, plus the countries excluded for missing or out-of-range
/// cells.
#[derive(Debug, Clone)]
pub struct IndicatorData {
    pub profiles: Vec<CountryProfile>,
    /// Column names in profile-vector order.
    pub schema: Vec<String>,
    pub excluded: Vec<Exclusion>,
}

impl IndicatorData {
    /// Plain-text exclusion report, one line per dropped country; empty
    /// string when nothing was dropped.
    pub fn exclusion_report(&self) -> String {
        let mut out = String::new();
        for e in &self.excluded {
            let _ = writeln!(out, "excluded {}: {}", e.country_id, e.reason);
        }
        out
    }
}

/// Parses the indicators CSV into country profiles. The header must name a
/// `country` column, every scalar indicator column, and at least one
/// age-band share column (prefix `age_`). Countries with an empty cell or a
/// value violating its range are excluded and reported, not fatal.
pub fn parse_indicators_csv(path: impl AsRef<Path>) -> Result<IndicatorData, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();

    if !header.iter().any(|h| h == "country") {
        return Err(IngestError::MissingColumn("country".to_string()));
    }
    for name in REQUIRED_INDICATORS {
        if !header.iter().any(|h| h == name) {
            return Err(IngestError::MissingColumn(name.to_string()));
        }
    }
    let age_columns: Vec<&String> = header.iter().filter(|h| h.starts_with("age_")).collect();
    if age_columns.is_empty() {
        return Err(IngestError::MissingColumn("age_*".to_string()));
    }

    // Profile vector order: median_age, age bands (header order), then the
    // remaining scalars in their declared order.
    let mut schema: Vec<String> = vec!["median_age".to_string()];
    schema.extend(age_columns.iter().map(|c| c.to_string()));
    schema.extend(REQUIRED_INDICATORS[1..].iter().map(|c| c.to_string()));
    let column_index: Vec<usize> = schema
        .iter()
        .map(|name| header.iter().position(|h| h == name).unwrap())
        .collect();
    let country_index = header.iter().position(|h| h == "country").unwrap();

    let mut profiles = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != header.len() {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected {} fields, got {}", header.len(), record.len()),
            });
        }
        let country = record[country_index].to_string();
        if country.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty country id".to_string(),
            });
        }
        if let Some(previous) = seen.insert(country.clone(), line) {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("country {country} already listed at line {previous}"),
            });
        }

        let mut indicators = Vec::with_capacity(schema.len());
        let mut drop_reason = None;
        for (name, &idx) in schema.iter().zip(&column_index) {
            let cell = record[idx].trim();
            if cell.is_empty() {
                drop_reason = Some(format!("missing cell in column `{name}`"));
                break;
            }
            let value = parse_f64(cell, name, line)?;
            if is_fraction_column(name) && !(0.0..=1.0).contains(&value) {
                drop_reason = Some(format!("column `{name}` value {value} outside [0, 1]"));
                break;
            }
            if !is_fraction_column(name) && value < 0.0 {
                drop_reason = Some(format!("column `{name}` value {value} is negative"));
                break;
            }
            indicators.push(value);
        }
        match drop_reason {
            Some(reason) => excluded.push(Exclusion {
                country_id: country,
                reason,
            }),
            None => profiles.push(CountryProfile {
                country_id: country,
                indicators,
            }),
        }
    }

    Ok(IndicatorData {
        profiles,
        schema,
        excluded,
    })
}

/// Builds the date-aligned series for one country over `[start, end]`.
///
/// Case data must cover every day of the window; the first missing day is a
/// hard error. Lockdown levels are forward-filled from the most recent
/// record on or before each day, and days before any record get all-zero
/// levels.
pub fn align_series(
    country_id: &str,
    cases: &[(Day, f64)],
    lockdown: &[LockdownRecord],
    start: Day,
    end: Day,
) -> Result<MultivariateSeries, IngestError> {
    if start > end {
        return Err(IngestError::InvalidWindow { start, end });
    }
    let mut case_map: BTreeMap<Day, f64> = BTreeMap::new();
    for &(date, value) in cases {
        if case_map.insert(date, value).is_some() {
            return Err(IngestError::DuplicateDate {
                line: 0,
                country: country_id.to_string(),
                date,
            });
        }
    }

    let mut records: Vec<LockdownRecord> = lockdown.to_vec();
    records.sort_by_key(|r| r.date);

    let days = (end - start + 1) as usize;
    let mut case_values = Vec::with_capacity(days);
    let mut levels = Vec::with_capacity(days);
    let mut cursor = 0usize;
    let mut current = LockdownLevels::NONE;
    for offset in 0..days as i64 {
        let day = start + offset;
        let value = *case_map
            .get(&day)
            .ok_or_else(|| IngestError::MissingCaseDay {
                country: country_id.to_string(),
                date: day,
            })?;
        while cursor < records.len() && records[cursor].date <= day {
            current = records[cursor].levels;
            cursor += 1;
        }
        case_values.push(value);
        levels.push(current);
    }

    Ok(MultivariateSeries::new(
        country_id,
        start,
        case_values,
        levels,
    )?)
}

/// Days whose cumulative count dips below the previous day — reporting
/// corrections in the source data.
pub fn case_dips(series: &MultivariateSeries) -> Vec<Day> {
    let cases = series.cases();
    (1..cases.len())
        .filter(|&i| cases[i] < cases[i - 1])
        .map(|i| series.date_at(i))
        .collect()
}

/// Replaces every case value with the running maximum, removing dips.
pub fn clamp_monotonic(series: &MultivariateSeries) -> MultivariateSeries {
    let mut clamped = series.cases().to_vec();
    for i in 1..clamped.len() {
        if clamped[i] < clamped[i - 1] {
            clamped[i] = clamped[i - 1];
        }
    }
    MultivariateSeries::new(
        series.country_id(),
        series.start(),
        clamped,
        series.lockdown().to_vec(),
    )
    .expect("clamping preserves the series invariants")
}

/// Serializes a cases table back to the `country,date,cumulative_cases`
/// format. Values print in shortest round-trip form, so reparsing
/// reproduces them exactly.
pub fn cases_to_csv(table: &CasesTable) -> String {
    let mut out = String::from("country,date,cumulative_cases\n");
    for (country, rows) in table {
        for (date, value) in rows {
            let _ = writeln!(out, "{country},{date},{value}");
        }
    }
    out
}

/// Serializes a lockdown table back to its CSV format.
pub fn lockdown_to_csv(table: &LockdownTable) -> String {
    let mut out = String::from("country,date,school,workplace,gatherings,transport,travel\n");
    for (country, rows) in table {
        for record in rows {
            let [s, w, g, t, v] = record.levels.as_array();
            let _ = writeln!(out, "{country},{},{s},{w},{g},{t},{v}", record.date);
        }
    }
    out
}

/// Serializes profiles under the given schema to the indicators format.
pub fn indicators_to_csv(schema: &[String], profiles: &[CountryProfile]) -> String {
    let mut out = String::from("country");
    for name in schema {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for profile in profiles {
        out.push_str(&profile.country_id);
        for value in &profile.indicators {
            let _ = write!(out, ",{value}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn day(s: &str) -> Day {
        Day::from_iso(s).unwrap()
    }

    fn write_csv(content: &str) -> NamedTempFile {
        let mut file = NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn parses_case_rows_sorted() {
        let file = write_csv(
            "country,date,cumulative_cases\nQAT,2020-03-11,262\nQAT,2020-03-10,24\n",
        );
        let table = parse_cases_csv(file.path()).unwrap();
        let qat = &table["QAT"];
        assert_eq!(qat.len(), 2);
        assert_eq!(qat[0], (day("2020-03-10"), 24.0));
        assert_eq!(qat[1], (day("2020-03-11"), 262.0));
    }

    #[test]
    fn rejects_negative_cases() {
        let file = write_csv("country,date,cumulative_cases\nQAT,2020-03-10,-5\n");
        assert!(matches!(
            parse_cases_csv(file.path()),
            Err(IngestError::NegativeCases { value, .. }) if value == -5.0
        ));
    }

    #[test]
    fn rejects_duplicate_case_dates() {
        let file = write_csv(
            "country,date,cumulative_cases\nQAT,2020-03-10,24\nQAT,2020-03-10,30\n",
        );
        assert!(matches!(
            parse_cases_csv(file.path()),
            Err(IngestError::DuplicateDate { line: 3, .. })
        ));
    }

    #[test]
    fn reports_malformed_row_line() {
        let file = write_csv("country,date,cumulative_cases\nQAT,not-a-date,24\n");
        assert!(matches!(
            parse_cases_csv(file.path()),
            Err(IngestError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn lockdown_accepts_full_closure_and_no_measures() {
        let file = write_csv(
            "country,date,school,workplace,gatherings,transport,travel\n\
             QAT,2020-03-10,3,0,0,0,0\nQAT,2020-03-11,0,0,0,0,0\n",
        );
        let table = parse_lockdown_csv(file.path()).unwrap();
        let qat = &table["QAT"];
        assert_eq!(qat[0].levels.school_closing, 3);
        assert_eq!(qat[1].levels, LockdownLevels::NONE);
    }

    #[test]
    fn lockdown_rejects_transport_level_3() {
        let file = write_csv(
            "country,date,school,workplace,gatherings,transport,travel\nQAT,2020-03-10,0,0,0,3,0\n",
        );
        assert!(matches!(
            parse_lockdown_csv(file.path()),
            Err(IngestError::Series(SeriesError::OrdinalOutOfRange {
                channel: "transport",
                value: 3,
                max: 2,
            }))
        ));
    }

    fn indicator_header() -> String {
        "country,median_age,age_0_14,age_15_64,age_65_plus,population,density,urban_share,\
         gdp_per_capita,hospital_beds_per_1000,lung_deaths_female,lung_deaths_male"
            .to_string()
    }

    #[test]
    fn parses_complete_indicator_rows() {
        let file = write_csv(&format!(
            "{}\nQAT,31.9,0.14,0.75,0.11,2800000,230,0.99,62000,1.2,8.1,12.4\n\
             OMN,30.6,0.22,0.70,0.08,5100000,15,0.86,15300,1.5,7.3,11.2\n\
             BHR,32.3,0.19,0.73,0.08,1700000,2200,0.89,23500,1.7,9.0,13.1\n",
            indicator_header()
        ));
        let data = parse_indicators_csv(file.path()).unwrap();
        assert_eq!(data.profiles.len(), 3);
        assert!(data.excluded.is_empty());
        assert_eq!(data.schema[0], "median_age");
        assert_eq!(data.schema.len(), 11);
        assert!(data
            .profiles
            .iter()
            .all(|p| p.indicators.len() == data.schema.len()));
        // median_age leads the vector, age bands follow.
        assert_eq!(data.profiles[0].indicators[0], 31.9);
        assert_eq!(data.profiles[0].indicators[1], 0.14);
    }

    #[test]
    fn excludes_country_with_missing_cell() {
        let file = write_csv(&format!(
            "{}\nQAT,31.9,0.14,0.75,0.11,2800000,230,0.99,,1.2,8.1,12.4\n\
             OMN,30.6,0.22,0.70,0.08,5100000,15,0.86,15300,1.5,7.3,11.2\n",
            indicator_header()
        ));
        let data = parse_indicators_csv(file.path()).unwrap();
        assert_eq!(data.profiles.len(), 1);
        assert_eq!(data.excluded.len(), 1);
        assert_eq!(data.excluded[0].country_id, "QAT");
        assert!(data.excluded[0].reason.contains("gdp_per_capita"));
        assert!(data.exclusion_report().contains("excluded QAT"));
    }

    #[test]
    fn missing_required_column_is_fatal() {
        let file = write_csv(
            "country,age_0_14,population,density,urban_share,gdp_per_capita,\
             hospital_beds_per_1000,lung_deaths_female,lung_deaths_male\n",
        );
        assert!(matches!(
            parse_indicators_csv(file.path()),
            Err(IngestError::MissingColumn(name)) if name == "median_age"
        ));
    }

    #[test]
    fn non_numeric_indicator_cell_is_fatal() {
        let file = write_csv(&format!(
            "{}\nQAT,31.9,0.14,0.75,0.11,lots,230,0.99,62000,1.2,8.1,12.4\n",
            indicator_header()
        ));
        assert!(matches!(
            parse_indicators_csv(file.path()),
            Err(IngestError::NonNumericCell { column, .. }) if column == "population"
        ));
    }

    #[test]
    fn align_forward_fills_lockdown() {
        let start = day("2020-03-01");
        let cases: Vec<(Day, f64)> = (0..5).map(|i| (start + i, 10.0 + i as f64)).collect();
        let lockdown = vec![LockdownRecord {
            date: start + 2,
            levels: LockdownLevels::new([2, 0, 0, 0, 0]).unwrap(),
        }];
        let series = align_series("QAT", &cases, &lockdown, start, start + 4).unwrap();
        let school: Vec<u8> = series.lockdown().iter().map(|l| l.school_closing).collect();
        assert_eq!(school, [0, 0, 2, 2, 2]);
    }

    #[test]
    fn align_reports_first_missing_day() {
        let start = day("2020-03-01");
        let mut cases: Vec<(Day, f64)> = (0..5).map(|i| (start + i, 10.0 + i as f64)).collect();
        cases.remove(3); // drop day 4 of 5
        let err = align_series("QAT", &cases, &[], start, start + 4).unwrap_err();
        assert!(matches!(
            err,
            IngestError::MissingCaseDay { date, .. } if date == start + 3
        ));
    }

    #[test]
    fn align_covers_whole_window() {
        let start = day("2020-03-01");
        let cases: Vec<(Day, f64)> = (0..7).map(|i| (start + i, i as f64)).collect();
        let series = align_series("QAT", &cases, &[], start, start + 6).unwrap();
        assert_eq!(series.len(), 7);
    }

    #[test]
    fn align_is_idempotent_on_aligned_series() {
        let start = day("2020-03-01");
        let cases: Vec<(Day, f64)> = (0..6).map(|i| (start + i, (i * i) as f64)).collect();
        let lockdown = vec![
            LockdownRecord {
                date: start + 1,
                levels: LockdownLevels::new([1, 1, 0, 0, 2]).unwrap(),
            },
            LockdownRecord {
                date: start + 4,
                levels: LockdownLevels::new([3, 2, 4, 2, 4]).unwrap(),
            },
        ];
        let series = align_series("QAT", &cases, &lockdown, start, start + 5).unwrap();

        // Feed the aligned series back in as raw per-day inputs.
        let realigned_cases: Vec<(Day, f64)> = series
            .dates()
            .zip(series.cases().iter().copied())
            .collect();
        let realigned_lockdown: Vec<LockdownRecord> = series
            .dates()
            .zip(series.lockdown().iter().copied())
            .map(|(date, levels)| LockdownRecord { date, levels })
            .collect();
        let again = align_series(
            "QAT",
            &realigned_cases,
            &realigned_lockdown,
            start,
            start + 5,
        )
        .unwrap();
        assert_eq!(series, again);
    }

    #[test]
    fn csv_round_trip_preserves_series() {
        let start = day("2020-03-01");
        let cases: Vec<(Day, f64)> = (0..6)
            .map(|i| (start + i, 10.5 + 3.25 * i as f64))
            .collect();
        let lockdown = vec![LockdownRecord {
            date: start + 2,
            levels: LockdownLevels::new([1, 2, 3, 1, 4]).unwrap(),
        }];
        let series = align_series("QAT", &cases, &lockdown, start, start + 5).unwrap();

        let mut cases_table = CasesTable::new();
        cases_table.insert(
            "QAT".to_string(),
            series.dates().zip(series.cases().iter().copied()).collect(),
        );
        let mut lockdown_table = LockdownTable::new();
        lockdown_table.insert(
            "QAT".to_string(),
            series
                .dates()
                .zip(series.lockdown().iter().copied())
                .map(|(date, levels)| LockdownRecord { date, levels })
                .collect(),
        );

        let cases_file = write_csv(&cases_to_csv(&cases_table));
        let lockdown_file = write_csv(&lockdown_to_csv(&lockdown_table));
        let reparsed_cases = parse_cases_csv(cases_file.path()).unwrap();
        let reparsed_lockdown = parse_lockdown_csv(lockdown_file.path()).unwrap();
        let round_tripped = align_series(
            "QAT",
            &reparsed_cases["QAT"],
            &reparsed_lockdown["QAT"],
            start,
            start + 5,
        )
        .unwrap();
        assert_eq!(series, round_tripped);
    }

    #[test]
    fn dips_are_flagged_and_clampable() {
        let start = day("2020-03-01");
        let series = MultivariateSeries::new(
            "QAT",
            start,
            vec![5.0, 8.0, 7.0, 9.0],
            vec![LockdownLevels::NONE; 4],
        )
        .unwrap();
        assert_eq!(case_dips(&series), vec![start + 2]);
        let clamped = clamp_monotonic(&series);
        assert_eq!(clamped.cases(), [5.0, 8.0, 8.0, 9.0]);
        assert!(case_dips(&clamped).is_empty());
        // Clamping an already monotone series changes nothing.
        assert_eq!(clamp_monotonic(&clamped), clamped);
    }
}
