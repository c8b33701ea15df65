//! SILSO daily total sunspot number CSV.
//!
//! Semicolon-delimited, fields padded with spaces:
//! `year;month;day;decimal-year;number;std;obs-count;definitive`.
//! A negative number marks a missing day; the last field is `1` for
//! definitive values and `0` for provisional ones.

use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{ParseIssue, Parsed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilsoRecord {
    pub date: NaiveDate,
    /// `None` when the source marks the day missing.
    pub sesc_number: Option<f64>,
    pub provisional: bool,
}

fn parse_line(line: &str) -> std::result::Result<SilsoRecord, String> {
    let fields: Vec<&str> = line.split(';').map(str::trim).collect();
    if fields.len() < 8 {
        return Err(format!("expected 8 ';'-separated fields, found {}", fields.len()));
    }
    let int = |i: usize| {
        fields[i]
            .parse::<i64>()
            .map_err(|_| format!("bad integer {:?}", fields[i]))
    };
    let (y, m, d) = (int(0)?, int(1)?, int(2)?);
    let date = NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32)
        .ok_or_else(|| format!("invalid date {y}-{m}-{d}"))?;
    let number: f64 = fields[4]
        .parse()
        .map_err(|_| format!("bad sunspot number {:?}", fields[4]))?;
    if !number.is_finite() {
        return Err(format!("bad sunspot number {:?}", fields[4]));
    }
    let provisional = match fields[7] {
        "1" => false,
        "0" => true,
        other => return Err(format!("bad definitive flag {other:?}")),
    };
    Ok(SilsoRecord {
        date,
        sesc_number: (number >= 0.0).then_some(number),
        provisional,
    })
}

pub fn parse_silso_bytes(bytes: &[u8]) -> Result<Parsed<SilsoRecord>> {
    let text = String::from_utf8_lossy(bytes);
    let mut parsed = Parsed {
        records: Vec::new(),
        issues: Vec::new(),
    };
    let mut data_lines = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        data_lines += 1;
        match parse_line(line) {
            Ok(r) => parsed.records.push(r),
            Err(message) => parsed.issues.push(ParseIssue {
                line: n + 1,
                message,
            }),
        }
    }
    parsed.check_malformed(data_lines, "SILSO file")
}

pub fn parse_silso(path: impl AsRef<Path>) -> Result<Parsed<SilsoRecord>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_silso_bytes(&bytes).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path, message),
        other => other,
    })
}

pub fn format_silso_line(r: &SilsoRecord) -> String {
    let decimal_year = f64::from(r.date.year()) + (f64::from(r.date.ordinal0()) + 0.5) / 365.0;
    let number = r.sesc_number.unwrap_or(-1.0);
    format!(
        "{:04};{:02};{:02};{:9.3};{:4};{:5.1};{:4};{}",
        r.date.year(),
        r.date.month(),
        r.date.day(),
        decimal_year,
        number,
        -1.0,
        0,
        if r.provisional { 0 } else { 1 }
    )
}
