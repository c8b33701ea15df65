//! Geomagnetic storm forecasting from images of the Sun.
//!
//! The pipeline has two layers. The feature layer turns a solar image into
//! two counts: active sunspots (Canny edges followed by border following)
//! and active regions (DBSCAN over edge pixels). The prediction layer builds
//! a five-feature daily vector, min-max scales it, balances the classes with
//! SMOTE and trains a Gaussian-kernel SVM that answers "will the maximum Kp
//! reach 5 in the next 24 hours?".
//!
//! ```no_run
//! use stormcast::imaging::CannyParams;
//! use stormcast::clustering::DbscanParams;
//! use stormcast::features::extract_features;
//! use stormcast::ingest::load_image;
//!
//! let day = chrono::NaiveDate::from_ymd_opt(2012, 3, 7).unwrap();
//! let img = load_image("20120307_000000_1024_HMIIF.jpg").unwrap();
//! let rec = extract_features(day, &img, &CannyParams::default(), &DbscanParams::default()).unwrap();
//! println!("{} spots in {} regions", rec.sunspots, rec.regions);
//! ```

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod ingest;
pub mod learning;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Binary storm classification. `Storm` means a maximum Kp of at least 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StormClass {
    NoStorm,
    Storm,
}

impl StormClass {
    pub fn from_flag(storm: bool) -> Self {
        if storm {
            StormClass::Storm
        } else {
            StormClass::NoStorm
        }
    }

    pub fn is_storm(self) -> bool {
        self == StormClass::Storm
    }

    /// +1 for storm, -1 otherwise; the SVM label convention.
    pub fn sign(self) -> f64 {
        if self.is_storm() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StormClass::NoStorm => "no_storm",
            StormClass::Storm => "storm",
        }
    }
}

impl std::fmt::Display for StormClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StormClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "storm" | "1" => Ok(StormClass::Storm),
            "no_storm" | "0" => Ok(StormClass::NoStorm),
            other => Err(Error::InvalidParameter(format!("unknown class {other:?}"))),
        }
    }
}
