use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};

use super::WORKING_SIZE;
use crate::{Error, Result};

/// SDO HMI flattened intensitygram browse product.
pub const HMI_CHANNEL: &str = "HMIIF";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageManifest {
    pub entries: BTreeMap<NaiveDate, PathBuf>,
    pub resolution: usize,
    pub channel: String,
}

impl Default for ImageManifest {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            resolution: WORKING_SIZE,
            channel: HMI_CHANNEL.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ManifestScan {
    pub manifest: ImageManifest,
    /// Files dropped because an earlier filename already claimed their date.
    pub duplicates: Vec<PathBuf>,
    /// Files that matched neither naming scheme.
    pub ignored: usize,
}

/// `cache/images/YYYY/MMDD.png`
pub fn cache_image_path(images_dir: &Path, date: NaiveDate) -> PathBuf {
    images_dir
        .join(format!("{:04}", date.year()))
        .join(format!("{:02}{:02}.png", date.month(), date.day()))
}

fn ymd(s: &str) -> Option<NaiveDate> {
    if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    NaiveDate::from_ymd_opt(s[..4].parse().ok()?, s[4..6].parse().ok()?, s[6..].parse().ok()?)
}

/// Date encoded in a path: `YYYYMMDD_*.{png,jpg,jpeg}` or the cache layout
/// `YYYY/MMDD.png`.
fn date_of(path: &Path) -> Option<NaiveDate> {
    let name = path.file_name()?.to_str()?;
    let (stem, ext) = name.rsplit_once('.')?;
    let ext = ext.to_ascii_lowercase();
    if let Some((day, _)) = stem.split_once('_') {
        if matches!(ext.as_str(), "png" | "jpg" | "jpeg") {
            return ymd(day);
        }
    }
    if ext == "png" && stem.len() == 4 {
        let year = path.parent()?.file_name()?.to_str()?;
        if year.len() == 4 {
            return ymd(&format!("{year}{stem}"));
        }
    }
    None
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let kind = entry.file_type().map_err(|e| Error::io(&path, e))?;
        if kind.is_dir() {
            collect_files(&path, out)?;
        } else if kind.is_file() {
            out.push(path);
        }
    }
    Ok(())
}

/// Indexes a directory tree of dated solar images. When two files share a
/// date the lexicographically first path wins.
pub fn build_manifest(dir: impl AsRef<Path>) -> Result<ManifestScan> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    if dir.exists() {
        collect_files(dir, &mut files)?;
    }
    files.sort();
    let mut scan = ManifestScan::default();
    for path in files {
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'))
        {
            scan.ignored += 1;
            continue;
        }
        match date_of(&path) {
            Some(date) => {
                if let Some(kept) = scan.manifest.entries.get(&date) {
                    warn!("{date}: keeping {} over {}", kept.display(), path.display());
                    scan.duplicates.push(path);
                } else {
                    scan.manifest.entries.insert(date, path);
                }
            }
            None => scan.ignored += 1,
        }
    }
    Ok(scan)
}
