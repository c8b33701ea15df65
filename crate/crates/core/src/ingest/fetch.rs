//! SDO browse-image download with an on-disk cache.
//!
//! The archive is laid out as `{base}/YYYY/MM/DD/` directory listings holding
//! files named `YYYYMMDD_HHMMSS_{resolution}_HMIIF.jpg`. Every fetched image
//! is stored as grayscale PNG at `cache/images/YYYY/MMDD.png`.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{cache_image_path, decode_image, save_png, ImageManifest, HMI_CHANNEL};
use crate::{Error, Result};

pub const DEFAULT_SDO_BASE_URL: &str = "https://sdo.gsfc.nasa.gov/assets/img/browse";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("not found")]
    NotFound,
    #[error("offline")]
    Offline,
    #[error("{0}")]
    Other(String),
}

/// Byte-level HTTP GET. Implementations must be shareable across the
/// download workers.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, FetchError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub base_url: String,
    /// Root of the cache; images live under `images/`.
    pub cache_dir: PathBuf,
    /// How far before midnight a substitute image may be taken.
    pub window_hours: u32,
    pub concurrency: usize,
    pub resolution: u32,
    pub offline: bool,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_SDO_BASE_URL.to_string(),
            cache_dir: PathBuf::from("cache"),
            window_hours: 2,
            concurrency: 4,
            resolution: 1024,
            offline: false,
        }
    }
}

impl FetchConfig {
    pub fn images_dir(&self) -> PathBuf {
        self.cache_dir.join("images")
    }
}

#[derive(Debug, Clone, Default)]
pub struct FetchOutcome {
    pub manifest: ImageManifest,
    /// Days without an image, with the reason.
    pub gaps: Vec<(NaiveDate, String)>,
    /// Days satisfied from the cache without any request.
    pub cached: usize,
}

fn day_dir_url(base: &str, date: NaiveDate) -> String {
    format!(
        "{}/{:04}/{:02}/{:02}/",
        base.trim_end_matches('/'),
        date.year(),
        date.month(),
        date.day()
    )
}

/// `(timestamp, filename)` of every matching product in a directory listing.
fn listed_images(html: &str, resolution: u32) -> Vec<(NaiveDateTime, String)> {
    let suffix = format!("_{resolution}_{HMI_CHANNEL}.jpg");
    let mut out: Vec<(NaiveDateTime, String)> = html
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
        .filter_map(|token| {
            let stamp = token.strip_suffix(&suffix)?;
            let (day, time) = stamp.split_once('_')?;
            if day.len() != 8 || time.len() != 6 {
                return None;
            }
            let ts = NaiveDateTime::parse_from_str(&format!("{day}{time}"), "%Y%m%d%H%M%S").ok()?;
            Some((ts, token.to_string()))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn fetch_day(
    date: NaiveDate,
    cfg: &FetchConfig,
    transport: &dyn Transport,
) -> std::result::Result<(), String> {
    let midnight = date.and_time(NaiveTime::MIN);
    let list = |d: NaiveDate| -> std::result::Result<Vec<(NaiveDateTime, String)>, String> {
        let url = day_dir_url(&cfg.base_url, d);
        match transport.get(&url) {
            Ok(body) => Ok(listed_images(&String::from_utf8_lossy(&body), cfg.resolution)),
            Err(FetchError::NotFound) => Ok(Vec::new()),
            Err(e) => Err(format!("listing {url}: {e}")),
        }
    };

    // the 00:00 image, else the latest one inside the window before midnight
    let same_day = list(date)?;
    let mut choice = same_day
        .iter()
        .find(|(ts, _)| *ts >= midnight && *ts < midnight + TimeDelta::minutes(1))
        .map(|(_, name)| (date, name.clone()));
    if choice.is_none() {
        let earliest = midnight - TimeDelta::hours(i64::from(cfg.window_hours));
        let prev_day = date
            .checked_sub_days(Days::new(1))
            .ok_or("date out of range")?;
        choice = list(prev_day)?
            .into_iter()
            .rev()
            .find(|(ts, _)| *ts >= earliest && *ts < midnight)
            .map(|(_, name)| (prev_day, name));
    }
    let (dir_date, name) = choice.ok_or("no image within the window")?;

    let url = format!("{}{name}", day_dir_url(&cfg.base_url, dir_date));
    let bytes = transport.get(&url).map_err(|e| format!("{url}: {e}"))?;
    let img = decode_image(&bytes, std::path::Path::new(&name)).map_err(|e| e.to_string())?;
    let target = cache_image_path(&cfg.images_dir(), date);
    save_png(&target, img.width(), img.height(), &img.to_u8()).map_err(|e| e.to_string())?;
    debug!("{date}: cached {url}");
    Ok(())
}

/// Fills the cache for every day in `start..=end`. Days already cached cost
/// no requests; per-day failures become gaps.
pub fn fetch_sdo(
    start: NaiveDate,
    end: NaiveDate,
    cfg: &FetchConfig,
    transport: &dyn Transport,
) -> Result<FetchOutcome> {
    if end < start {
        return Err(Error::InvalidParameter(format!("empty date range {start}..{end}")));
    }
    let images = cfg.images_dir();
    let days: Vec<NaiveDate> = start.iter_days().take_while(|d| *d <= end).collect();

    let mut outcome = FetchOutcome::default();
    let mut pending = Vec::new();
    for &d in &days {
        let path = cache_image_path(&images, d);
        if path.is_file() {
            outcome.manifest.entries.insert(d, path);
            outcome.cached += 1;
        } else if cfg.offline {
            outcome.gaps.push((d, "offline and not cached".into()));
        } else {
            pending.push(d);
        }
    }
    if cfg.offline && outcome.manifest.entries.is_empty() {
        return Err(Error::Network(format!(
            "offline and no cached images for {start}..{end}"
        )));
    }

    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(pending.len()));
    let workers = cfg.concurrency.clamp(1, pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&date) = pending.get(i) else { break };
                let r = fetch_day(date, cfg, transport);
                results.lock().expect("no worker panics").push((date, r));
            });
        }
    });

    let mut results = results.into_inner().expect("no worker panics");
    results.sort_by_key(|(d, _)| *d);
    for (date, r) in results {
        match r {
            Ok(()) => {
                outcome
                    .manifest
                    .entries
                    .insert(date, cache_image_path(&images, date));
            }
            Err(reason) => {
                warn!("{date}: {reason}");
                outcome.gaps.push((date, reason));
            }
        }
    }
    outcome.gaps.sort();
    Ok(outcome)
}
