//! Daily feature records, example assembly and min-max scaling.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Days, NaiveDate};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::clustering::{count_regions, dbscan, edge_points, ClusterLabeling, DbscanParams};
use crate::imaging::{
    canny_stages, count_sunspots, find_contours, CannyParams, CannyStages, Contour, GrayImage,
    DEFAULT_MIN_PERIMETER,
};
use crate::ingest::{label_day, KpDay};
use crate::{Error, Result, StormClass};

pub const N_FEATURES: usize = 5;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "prev_sunspots",
    "prev_regions",
    "prev_storm",
    "cur_sunspots",
    "cur_regions",
];

/// Index of the binary previous-day storm flag inside a feature vector.
pub const PREV_STORM: usize = 2;

/// Sunspot and region counts extracted from one day's image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DailySunspotRecord {
    pub date: NaiveDate,
    pub sunspots: usize,
    pub regions: usize,
}

/// `[prev_sunspots, prev_regions, prev_storm, cur_sunspots, cur_regions]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn new(prev: &DailySunspotRecord, prev_storm: bool, cur: &DailySunspotRecord) -> Self {
        Self([
            prev.sunspots as f64,
            prev.regions as f64,
            if prev_storm { 1.0 } else { 0.0 },
            cur.sunspots as f64,
            cur.regions as f64,
        ])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    /// The present day; the label refers to the day after.
    pub date: NaiveDate,
    pub features: FeatureVector,
    pub label: StormClass,
}

/// Everything computed while extracting one image, for debug output.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub record: DailySunspotRecord,
    pub stages: CannyStages,
    pub contours: Vec<Contour>,
    pub labeling: ClusterLabeling,
}

/// Counts active sunspots (external contours of the limb-masked Canny edge
/// map) and active regions (DBSCAN clusters of the same edge pixels).
pub fn extract_features(
    date: NaiveDate,
    img: &GrayImage,
    canny_params: &CannyParams,
    db_params: &DbscanParams,
) -> Result<DailySunspotRecord> {
    extract_detailed(date, img, canny_params, db_params).map(|e| e.record)
}

pub fn extract_detailed(
    date: NaiveDate,
    img: &GrayImage,
    canny_params: &CannyParams,
    db_params: &DbscanParams,
) -> Result<Extraction> {
    let stages = canny_stages(img, canny_params)?;
    let contours = find_contours(&stages.edges);
    let sunspots = count_sunspots(&contours, DEFAULT_MIN_PERIMETER);
    let labeling = dbscan(&edge_points(&stages.edges), db_params)?;
    let regions = count_regions(&labeling);
    if sunspots > 0 && regions > sunspots {
        warn!("{date}: {regions} regions but only {sunspots} sunspots");
    }
    Ok(Extraction {
        record: DailySunspotRecord {
            date,
            sunspots,
            regions,
        },
        stages,
        contours,
        labeling,
    })
}

/// Result of pairing feature records with Kp history.
#[derive(Debug, Clone, Default)]
pub struct AssembledDataset {
    pub examples: Vec<LabeledExample>,
    /// Dates that had a record but lacked a dependency, with the reason.
    pub skipped: Vec<(NaiveDate, String)>,
}

/// Emits one example per date `d` that has records for `d-1` and `d` and Kp
/// data for `d-1` (previous-day storm flag) and `d+1` (label).
pub fn assemble_examples(records: &[DailySunspotRecord], kp: &[KpDay]) -> AssembledDataset {
    let by_date: BTreeMap<NaiveDate, &DailySunspotRecord> =
        records.iter().map(|r| (r.date, r)).collect();
    let kp_by_date: BTreeMap<NaiveDate, &KpDay> = kp.iter().map(|k| (k.date, k)).collect();

    let mut out = AssembledDataset::default();
    for (&date, cur) in &by_date {
        let (Some(prev_date), Some(next_date)) = (
            date.checked_sub_days(Days::new(1)),
            date.checked_add_days(Days::new(1)),
        ) else {
            continue;
        };
        let missing = match (
            by_date.get(&prev_date),
            kp_by_date.get(&prev_date),
            kp_by_date.get(&next_date),
        ) {
            (Some(prev), Some(prev_kp), Some(next_kp)) => {
                out.examples.push(LabeledExample {
                    date,
                    features: FeatureVector::new(prev, label_day(prev_kp).is_storm(), cur),
                    label: label_day(next_kp),
                });
                continue;
            }
            (None, _, _) => format!("no record for {prev_date}"),
            (_, None, _) => format!("no Kp data for {prev_date}"),
            (_, _, None) => format!("no Kp data for {next_date}"),
        };
        out.skipped.push((date, missing));
    }
    if !out.skipped.is_empty() {
        info!(
            "assembled {} examples, skipped {} dates",
            out.examples.len(),
            out.skipped.len()
        );
    }
    out
}

/// Per-feature minimum and maximum of a fitting set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fits on rows of equal length; needs at least two rows.
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InsufficientData("cannot fit a scaler on an empty set".into()))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        let mut n = 1;
        for row in iter {
            if row.len() != min.len() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} features", min.len()),
                    actual: format!("{} features", row.len()),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
            n += 1;
        }
        if n < 2 {
            return Err(Error::InsufficientData(
                "scaler needs at least two examples".into(),
            ));
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// A feature whose fitted range is a single value.
    pub fn is_degenerate(&self, feature: usize) -> bool {
        self.max[feature] == self.min[feature]
    }

    /// `(x - min) / (max - min)` per feature, 0 for degenerate features.
    /// Values outside the fitted range extrapolate rather than clip.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.dim()),
                actual: format!("{} features", v.len()),
            });
        }
        Ok(v.iter()
            .enumerate()
            .map(|(k, &x)| {
                if self.is_degenerate(k) {
                    0.0
                } else {
                    (x - self.min[k]) / (self.max[k] - self.min[k])
                }
            })
            .collect())
    }
}

pub fn fit_scaler(examples: &[LabeledExample]) -> Result<Scaler> {
    Scaler::fit(examples.iter().map(|e| e.features.as_slice()))
}

pub fn transform(scaler: &Scaler, v: &FeatureVector) -> Result<FeatureVector> {
    let t = scaler.transform(v.as_slice())?;
    let mut out = [0.0; N_FEATURES];
    out.copy_from_slice(&t);
    Ok(FeatureVector(out))
}

/// `10 R + S`: the observer-independent part of the Wolf number.
pub fn wolf_proxy(r: &DailySunspotRecord) -> f64 {
    10.0 * r.regions as f64 + r.sunspots as f64
}

#[derive(Serialize, Deserialize)]
struct DatasetRow {
    date: NaiveDate,
    prev_sunspots: f64,
    prev_regions: f64,
    prev_storm: f64,
    cur_sunspots: f64,
    cur_regions: f64,
    label: u8,
}

fn csv_error(e: csv::Error) -> Error {
    Error::parse("<csv>", e.to_string())
}

/// Feature store: `date,sunspots,regions`, sorted by date.
pub fn write_feature_store<W: Write>(out: W, records: &[DailySunspotRecord]) -> Result<()> {
    let mut sorted = records.to_vec();
    sorted.sort();
    let mut w = csv::Writer::from_writer(out);
    for r in &sorted {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_feature_store<R: Read>(input: R) -> Result<Vec<DailySunspotRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row.map_err(csv_error)?);
    }
    out.sort();
    Ok(out)
}

/// Assembled dataset: `date,prev_sunspots,prev_regions,prev_storm,cur_sunspots,cur_regions,label`
/// with `label` 1 for storm and 0 otherwise.
pub fn write_dataset<W: Write>(out: W, examples: &[LabeledExample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in examples {
        let f = e.features.0;
        w.serialize(DatasetRow {
            date: e.date,
            prev_sunspots: f[0],
            prev_regions: f[1],
            prev_storm: f[2],
            cur_sunspots: f[3],
            cur_regions: f[4],
            label: u8::from(e.label.is_storm()),
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<LabeledExample>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let r: DatasetRow = row.map_err(csv_error)?;
        if r.label > 1 {
            return Err(Error::parse("<csv>", format!("label {} is not 0 or 1", r.label)));
        }
        out.push(LabeledExample {
            date: r.date,
            features: FeatureVector([
                r.prev_sunspots,
                r.prev_regions,
                r.prev_storm,
                r.cur_sunspots,
                r.cur_regions,
            ]),
            label: StormClass::from_flag(r.label == 1),
        });
    }
    Ok(out)
}
