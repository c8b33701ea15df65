//! SWPC "3-Day Forecast" text products, concatenated into an archive file.
//!
//! Each product starts with `:Product:` and carries an `:Issued: YYYY Mon DD HHMM UTC`
//! line and a Kp breakdown table:
//!
//! ```text
//! NOAA Kp index breakdown Mar 08-Mar 10 2012
//!
//!              Mar 08       Mar 09       Mar 10
//! 00-03UT        4            6 (G2)       4
//! ...
//! 21-24UT        3            4            3
//! ```
//!
//! For every issue date the earliest product that has a column for the
//! following day supplies that day's predicted maximum Kp. A plain CSV with
//! header `issue_date,predicted_max_kp` is accepted as well.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{ParseIssue, Parsed, STORM_KP};
use crate::{Error, Result, StormClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwpcForecastRecord {
    pub issue_date: NaiveDate,
    /// Maximum predicted three-hour Kp for `issue_date + 1`.
    pub predicted_max_kp: f64,
}

impl SwpcForecastRecord {
    pub fn storm_call(&self) -> StormClass {
        StormClass::from_flag(self.predicted_max_kp >= STORM_KP)
    }
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

fn month_number(name: &str) -> Option<u32> {
    MONTHS.iter().position(|m| *m == name).map(|i| i as u32 + 1)
}

/// `(issue date, HHMM)` from an `:Issued:` line.
fn parse_issued(line: &str) -> Option<(NaiveDate, u32)> {
    let rest = line.strip_prefix(":Issued:")?;
    let f: Vec<&str> = rest.split_whitespace().collect();
    if f.len() < 4 {
        return None;
    }
    let date = NaiveDate::from_ymd_opt(f[0].parse().ok()?, month_number(f[1])?, f[2].parse().ok()?)?;
    Some((date, f[3].parse().ok()?))
}

/// One product: issue date/time and per-column (date, max Kp).
fn parse_product(lines: &[&str]) -> std::result::Result<(NaiveDate, u32, Vec<(NaiveDate, f64)>), String> {
    let (issue, time) = lines
        .iter()
        .find_map(|l| parse_issued(l.trim()))
        .ok_or("missing or bad :Issued: line")?;
    let table = lines
        .iter()
        .position(|l| l.trim_start().starts_with("NOAA Kp index breakdown"))
        .ok_or("missing Kp breakdown table")?;

    // header: month/day pairs
    let header = lines[table + 1..]
        .iter()
        .find(|l| !l.trim().is_empty())
        .ok_or("missing table header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.is_empty() || tokens.len() % 2 != 0 {
        return Err(format!("bad table header {header:?}"));
    }
    let mut dates = Vec::new();
    for pair in tokens.chunks(2) {
        let month = month_number(pair[0]).ok_or_else(|| format!("bad month {:?}", pair[0]))?;
        let day: u32 = pair[1].parse().map_err(|_| format!("bad day {:?}", pair[1]))?;
        // a table issued in late December can run into January
        let year = if month < issue.month() { issue.year() + 1 } else { issue.year() };
        dates.push(NaiveDate::from_ymd_opt(year, month, day).ok_or("invalid column date")?);
    }

    let mut maxima = vec![f64::NEG_INFINITY; dates.len()];
    let mut rows = 0;
    for line in lines[table + 1..].iter().map(|l| l.trim()) {
        let Some((slot, values)) = line.split_once("UT") else {
            continue;
        };
        if slot.len() != 5 || !slot.as_bytes()[2].eq(&b'-') {
            continue;
        }
        let nums: Vec<f64> = values
            .split_whitespace()
            .filter(|t| !t.starts_with('('))
            .map(|t| t.parse::<f64>().map_err(|_| format!("bad Kp {t:?}")))
            .collect::<std::result::Result<_, _>>()?;
        if nums.len() != dates.len() {
            return Err(format!("row {slot} has {} values, expected {}", nums.len(), dates.len()));
        }
        for (m, v) in maxima.iter_mut().zip(nums) {
            if !(0.0..=9.0).contains(&v) {
                return Err(format!("Kp {v} outside [0, 9]"));
            }
            *m = m.max(v);
        }
        rows += 1;
        if rows == 8 {
            break;
        }
    }
    if rows != 8 {
        return Err(format!("expected 8 three-hour rows, found {rows}"));
    }
    Ok((issue, time, dates.into_iter().zip(maxima).collect()))
}

fn parse_text(text: &str) -> Parsed<SwpcForecastRecord> {
    let lines: Vec<&str> = text.lines().collect();
    let starts: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with(":Product:"))
        .map(|(i, _)| i)
        .collect();
    let mut issues = Vec::new();
    // issue date -> (issue time, predicted max for the next day)
    let mut best: BTreeMap<NaiveDate, (u32, f64)> = BTreeMap::new();
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(lines.len());
        match parse_product(&lines[start..end]) {
            Ok((issue, time, columns)) => {
                let Some(next) = issue.checked_add_days(Days::new(1)) else {
                    continue;
                };
                match columns.iter().find(|(d, _)| *d == next) {
                    Some(&(_, kp)) => {
                        let entry = best.entry(issue).or_insert((time, kp));
                        if time < entry.0 {
                            *entry = (time, kp);
                        }
                    }
                    None => issues.push(ParseIssue {
                        line: start + 1,
                        message: format!("no column for {next}"),
                    }),
                }
            }
            Err(message) => issues.push(ParseIssue {
                line: start + 1,
                message,
            }),
        }
    }
    Parsed {
        records: best
            .into_iter()
            .map(|(issue_date, (_, predicted_max_kp))| SwpcForecastRecord {
                issue_date,
                predicted_max_kp,
            })
            .collect(),
        issues,
    }
}

fn parse_csv(text: &str) -> Parsed<SwpcForecastRecord> {
    let mut parsed = Parsed {
        records: Vec::new(),
        issues: Vec::new(),
    };
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let rec = line.split_once(',').and_then(|(d, k)| {
            let issue_date = d.trim().parse::<NaiveDate>().ok()?;
            let kp = k.trim().parse::<f64>().ok().filter(|v| (0.0..=9.0).contains(v))?;
            Some(SwpcForecastRecord {
                issue_date,
                predicted_max_kp: kp,
            })
        });
        match rec {
            Some(r) => parsed.records.push(r),
            None => parsed.issues.push(ParseIssue {
                line: n + 1,
                message: format!("bad forecast row {line:?}"),
            }),
        }
    }
    parsed.records.sort_by_key(|r| r.issue_date);
    parsed
}

pub fn parse_swpc_bytes(bytes: &[u8]) -> Result<Parsed<SwpcForecastRecord>> {
    let text = String::from_utf8_lossy(bytes);
    if text.trim_start().starts_with("issue_date") {
        let data_lines = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
        return parse_csv(&text).check_malformed(data_lines, "SWPC forecast CSV");
    }
    let parsed = parse_text(&text);
    let products = parsed.records.len() + parsed.issues.len();
    if products == 0 && !text.trim().is_empty() {
        return Err(Error::parse("SWPC archive", "no :Product: sections found"));
    }
    parsed.check_malformed(products, "SWPC archive")
}

pub fn parse_swpc(path: impl AsRef<Path>) -> Result<Parsed<SwpcForecastRecord>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_swpc_bytes(&bytes).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path, message),
        other => other,
    })
}

/// Baseline storm calls keyed by the date whose next day they forecast.
pub fn swpc_storm_calls(records: &[SwpcForecastRecord]) -> BTreeMap<NaiveDate, StormClass> {
    records
        .iter()
        .map(|r| (r.issue_date, r.storm_call()))
        .collect()
}
