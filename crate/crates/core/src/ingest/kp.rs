//! GFZ Potsdam Kp files (`Kp_ap_since_1932.txt` layout).
//!
//! Comment lines start with `#`. Each data line is whitespace-delimited:
//!
//! ```text
//! YYYY MM DD days days_m Bsr dB Kp1 Kp2 Kp3 Kp4 Kp5 Kp6 Kp7 Kp8 ap1 .. ap8 Ap SN D
//! ```
//!
//! Kp values are decimal thirds (`2.333`, `4.667`, `5.000`); `-1` marks a
//! missing value. Only the date and the eight Kp columns are used.

use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use super::{ParseIssue, Parsed};
use crate::{Error, Result, StormClass};

/// A day is a storm day when its maximum Kp reaches this value.
pub const STORM_KP: f64 = 5.0;

const KP_FIRST_COLUMN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpDay {
    pub date: NaiveDate,
    /// Eight three-hour readings, snapped to exact thirds.
    pub values: [f64; 8],
}

impl KpDay {
    pub fn new(date: NaiveDate, values: [f64; 8]) -> Result<Self> {
        let mut snapped = [0.0; 8];
        for (out, &v) in snapped.iter_mut().zip(values.iter()) {
            if !(0.0..=9.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("Kp {v} outside [0, 9]")));
            }
            // 4.667 and 4.67 both mean 5-; compare against exact thirds
            *out = (v * 3.0).round() / 3.0;
        }
        Ok(Self {
            date,
            values: snapped,
        })
    }

    pub fn max_kp(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Storm iff the day's maximum Kp is at least 5 (so 5- = 4.67 is not).
pub fn label_day(k: &KpDay) -> StormClass {
    StormClass::from_flag(k.max_kp() >= STORM_KP)
}

fn parse_line(line: &str) -> std::result::Result<KpDay, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < KP_FIRST_COLUMN + 8 {
        return Err(format!("expected at least 15 columns, found {}", fields.len()));
    }
    let int = |i: usize| {
        fields[i]
            .parse::<i64>()
            .map_err(|_| format!("bad integer {:?}", fields[i]))
    };
    let (y, m, d) = (int(0)?, int(1)?, int(2)?);
    let date = NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32)
        .ok_or_else(|| format!("invalid date {y}-{m}-{d}"))?;
    let mut values = [0.0; 8];
    for (k, v) in values.iter_mut().enumerate() {
        let raw = fields[KP_FIRST_COLUMN + k];
        *v = raw
            .parse::<f64>()
            .map_err(|_| format!("bad Kp value {raw:?}"))?;
        if *v < 0.0 {
            return Err(format!("missing Kp value in slot {}", k + 1));
        }
    }
    KpDay::new(date, values).map_err(|e| e.to_string())
}

/// Parses GFZ Kp data from raw bytes. Never panics; malformed lines become
/// issues, and more than 10% malformed lines is an error.
pub fn parse_kp_bytes(bytes: &[u8]) -> Result<Parsed<KpDay>> {
    let text = String::from_utf8_lossy(bytes);
    let mut parsed = Parsed {
        records: Vec::new(),
        issues: Vec::new(),
    };
    let mut data_lines = 0;
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        data_lines += 1;
        match parse_line(trimmed) {
            Ok(day) => parsed.records.push(day),
            Err(message) => parsed.issues.push(ParseIssue {
                line: n + 1,
                message,
            }),
        }
    }
    if data_lines == 0 {
        warn!("Kp input contains no data lines");
    }
    parsed.check_malformed(data_lines, "Kp file")
}

pub fn parse_kp_file(path: impl AsRef<Path>) -> Result<Parsed<KpDay>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_kp_bytes(&bytes).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path, message),
        other => other,
    })
}

/// Formats a day in the GFZ column layout; columns this crate does not read
/// are written as placeholders.
pub fn format_kp_line(k: &KpDay) -> String {
    use chrono::Datelike;
    let mut s = format!(
        "{:04} {:02} {:02} 00000 00000.5    0  0",
        k.date.year(),
        k.date.month(),
        k.date.day()
    );
    for v in k.values {
        s.push_str(&format!(" {v:6.3}"));
    }
    s.push_str("    0    0    0    0    0    0    0    0     0  -1 0");
    s
}
