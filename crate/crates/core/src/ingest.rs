//! CSV ingestion of hourly readings and the missing-hour cleaning rule.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HourlyDay, HOURS};

pub const READINGS_HEADER: [&str; 4] = ["household_id", "date", "hour", "kwh"];

/// One parsed input row. `kwh == None` means the reading was left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReadingRow {
    pub household_id: String,
    pub date: NaiveDate,
    pub hour: u8,
    pub kwh: Option<f64>,
}

/// Why a row (or day) was rejected, keyed by its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: u64,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(line: u64, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

/// Parses `household_id,date,hour,kwh` CSV text.
///
/// Malformed rows become diagnostics; only a bad header or an I/O failure
/// aborts. Duplicate (household, date, hour) keys keep the first row.
pub fn parse_readings<R: Read>(input: R) -> Result<(Vec<RawReadingRow>, Vec<Diagnostic>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);

    let mut records = reader.byte_records();
    let header = match records.next() {
        Some(h) => h.map_err(io_or_format)?,
        None => return Err(Error::Format("empty input: expected header household_id,date,hour,kwh".into())),
    };
    let fields: Vec<String> = header
        .iter()
        .map(|f| String::from_utf8_lossy(f).trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if fields != READINGS_HEADER {
        return Err(Error::Format(format!(
            "expected header household_id,date,hour,kwh, found {}",
            fields.join(",")
        )));
    }

    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record.map_err(io_or_format)?;
        let line = record.position().map_or(0, |p| p.line());
        match parse_row(&record) {
            Ok(row) => {
                if seen.insert((row.household_id.clone(), row.date, row.hour)) {
                    rows.push(row);
                } else {
                    diagnostics.push(Diagnostic::new(line, "duplicate reading"));
                }
            }
            Err(reason) => diagnostics.push(Diagnostic::new(line, reason)),
        }
    }
    Ok((rows, diagnostics))
}

fn io_or_format(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}

fn parse_row(record: &csv::ByteRecord) -> std::result::Result<RawReadingRow, String> {
    if record.len() != 4 {
        return Err(format!("expected 4 fields, found {}", record.len()));
    }
    let field = |i: usize| std::str::from_utf8(&record[i]).map(str::trim).map_err(|_| "invalid UTF-8".to_string());

    let household_id = field(0)?;
    if household_id.is_empty() {
        return Err("empty household_id".into());
    }
    let date = NaiveDate::parse_from_str(field(1)?, "%Y-%m-%d").map_err(|_| "invalid date".to_string())?;
    let hour: i64 = field(2)?.parse().map_err(|_| "invalid hour".to_string())?;
    if !(0..HOURS as i64).contains(&hour) {
        return Err("hour out of range".into());
    }
    let kwh = match field(3)? {
        "" => None,
        s => {
            let v: f64 = s.parse().map_err(|_| "invalid kwh".to_string())?;
            if !v.is_finite() {
                return Err("non-finite kwh".into());
            }
            if v < 0.0 {
                return Err("negative kwh".into());
            }
            Some(v)
        }
    };
    Ok(RawReadingRow {
        household_id: household_id.to_string(),
        date,
        hour: hour as u8,
        kwh,
    })
}

/// Writes rows back out in the input schema.
pub fn write_readings<W: Write>(rows: &[RawReadingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(READINGS_HEADER)?;
    for r in rows {
        let kwh = r.kwh.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.household_id.as_str(), &r.date.to_string(), &r.hour.to_string(), &kwh])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes diagnostics as `line,reason`.
pub fn write_diagnostics<W: Write>(diagnostics: &[Diagnostic], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line", "reason"])?;
    for d in diagnostics {
        w.write_record([d.line.to_string(), d.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Groups rows into household-days, ordered by household then date.
pub fn assemble_days(rows: &[RawReadingRow]) -> Vec<HourlyDay> {
    let mut days: BTreeMap<(&str, NaiveDate), [Option<f64>; HOURS]> = BTreeMap::new();
    for r in rows {
        let slots = days.entry((r.household_id.as_str(), r.date)).or_insert([None; HOURS]);
        let slot = &mut slots[r.hour as usize];
        if slot.is_none() {
            *slot = r.kwh;
        }
    }
    days.into_iter()
        .map(|((household_id, date), readings)| HourlyDay {
            household_id: household_id.to_string(),
            date,
            readings,
        })
        .collect()
}

/// Outcome of the cleaning rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanedDays {
    pub kept: Vec<HourlyDay>,
    /// Dropped-day count for every household seen, including zeros.
    pub dropped: BTreeMap<String, usize>,
}

impl CleanedDays {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Keeps only days with all 24 hours present.
pub fn drop_incomplete_days(days: Vec<HourlyDay>) -> CleanedDays {
    let mut out = CleanedDays::default();
    for day in days {
        let count = match out.dropped.entry(day.household_id.clone()) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(0),
        };
        if day.is_complete() {
            out.kept.push(day);
        } else {
            *count += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> (Vec<RawReadingRow>, Vec<Diagnostic>) {
        let text = format!("household_id,date,hour,kwh\n{body}");
        parse_readings(text.as_bytes()).unwrap()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn parses_a_reading() {
        let (rows, diags) = parse("H001,1990-01-06,7,0.42\n");
        assert!(diags.is_empty());
        assert_eq!(
            rows,
            vec![RawReadingRow {
                household_id: "H001".into(),
                date: date(1990, 1, 6),
                hour: 7,
                kwh: Some(0.42)
            }]
        );
    }

    #[test]
    fn rejects_hour_24() {
        let (rows, diags) = parse("H001,1990-01-06,24,0.42\n");
        assert!(rows.is_empty());
        assert_eq!(diags, vec![Diagnostic::new(2, "hour out of range")]);
    }

    #[test]
    fn empty_kwh_is_missing() {
        let (rows, _) = parse("H001,1990-01-06,7,\n");
        assert_eq!(rows[0].kwh, None);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let (rows, diags) = parse("H1,1990-01-06,0,1\nH1,1990-13-01,0,1\nH1,1990-01-06,1,-2\nH1,1990-01-06,0,3\nH1,1990-01-06,2\nH1,1990-01-06,3,abc\n");
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].kwh, Some(1.0));
        let reasons: Vec<_> = diags.iter().map(|d| (d.line, d.reason.as_str())).collect();
        assert_eq!(
            reasons,
            vec![
                (3, "invalid date"),
                (4, "negative kwh"),
                (5, "duplicate reading"),
                (6, "expected 4 fields, found 3"),
                (7, "invalid kwh"),
            ]
        );
    }

    #[test]
    fn bad_header_is_fatal() {
        assert!(matches!(parse_readings("id,date,hour,kwh\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(parse_readings("".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn assembles_complete_and_partial_days() {
        let mut body = String::new();
        for h in 0..24 {
            body.push_str(&format!("H1,1990-01-06,{h},0.5\n"));
            if h != 13 {
                body.push_str(&format!("H1,1990-01-07,{h},0.5\n"));
            }
        }
        let (rows, _) = parse(&body);
        let days = assemble_days(&rows);
        assert_eq!(days.len(), 2);
        assert_eq!(days[0].missing_count(), 0);
        assert_eq!(days[1].missing_count(), 1);
        assert_eq!(days[1].readings[13], None);
    }

    #[test]
    fn cleaning_rule() {
        let full = HourlyDay::complete("H1", date(1990, 1, 6), [1.0; HOURS]).unwrap();
        let mut partial = full.clone();
        partial.date = date(1990, 1, 7);
        partial.readings[5] = None;
        let cleaned = drop_incomplete_days(vec![full.clone(), partial]);
        assert_eq!(cleaned.kept, vec![full]);
        assert_eq!(cleaned.dropped["H1"], 1);

        let empty = drop_incomplete_days(Vec::new());
        assert!(empty.kept.is_empty());
        assert_eq!(empty.total_dropped(), 0);
    }
}
