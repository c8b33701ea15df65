//! External data: solar images, GFZ Kp, SILSO sunspot numbers, SWPC forecasts.

mod fetch;
mod image_io;
mod kp;
mod manifest;
mod silso;
mod swpc;

pub use fetch::{fetch_sdo, FetchConfig, FetchError, FetchOutcome, Transport, DEFAULT_SDO_BASE_URL};
pub use image_io::{
    decode_image, load_image, load_image_raw, resample_area, save_png, write_atomic,
    WORKING_SIZE,
};
pub use kp::{format_kp_line, label_day, parse_kp_bytes, parse_kp_file, KpDay, STORM_KP};
pub use manifest::{build_manifest, cache_image_path, ImageManifest, ManifestScan, HMI_CHANNEL};
pub use silso::{format_silso_line, parse_silso, parse_silso_bytes, SilsoRecord};
pub use swpc::{parse_swpc, parse_swpc_bytes, swpc_storm_calls, SwpcForecastRecord};

use serde::Serialize;

/// Fraction of malformed lines above which a file is rejected outright.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

/// A line a parser could not use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseIssue {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

/// Parsed records plus everything that was rejected along the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub issues: Vec<ParseIssue>,
}

impl<T> Parsed<T> {
    fn check_malformed(self, data_lines: usize, what: &str) -> crate::Result<Self> {
        if data_lines > 0
            && self.issues.len() as f64 > MAX_MALFORMED_FRACTION * data_lines as f64
        {
            return Err(crate::Error::parse(
                what,
                format!(
                    "{} of {} lines malformed; wrong file format?",
                    self.issues.len(),
                    data_lines
                ),
            ));
        }
        Ok(self)
    }
}
