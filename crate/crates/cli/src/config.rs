//! Run configuration: TOML file, then `--set section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stormcast::clustering::DbscanParams;
use stormcast::imaging::CannyParams;
use stormcast::ingest::FetchConfig;
use stormcast::learning::{SmoteConfig, SplitConfig, SvmConfig};
use stormcast::seed::{fingerprint, stage_seed};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerScope {
    /// Fit min-max on the training split only.
    #[default]
    Train,
    /// Fit on every example before splitting.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub cache: PathBuf,
    pub features: PathBuf,
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            cache: "cache".into(),
            features: "features.csv".into(),
            dataset: "dataset.csv".into(),
            model: "model.txt".into(),
            reports: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub k_neighbors: usize,
    pub target_ratio: f64,
}

impl Default for SmoteSection {
    fn default() -> Self {
        let d = SmoteConfig::default();
        Self {
            k_neighbors: d.k_neighbors,
            target_ratio: d.target_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Every stage seed is derived from this one.
    pub seed: u64,
    pub offline: bool,
    pub scaler_scope: ScalerScope,
    pub grid_search: bool,
    /// Dates extracted between two rewrites of the features CSV.
    pub extract_chunk: usize,
    pub paths: Paths,
    pub canny: CannyParams,
    pub dbscan: DbscanParams,
    pub split: SplitSection,
    pub smote: SmoteSection,
    pub svm: SvmConfig,
    pub fetch: FetchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            offline: false,
            scaler_scope: ScalerScope::Train,
            grid_search: false,
            extract_chunk: 32,
            paths: Paths::default(),
            canny: CannyParams::default(),
            dbscan: DbscanParams::default(),
            split: SplitSection::default(),
            smote: SmoteSection::default(),
            svm: SvmConfig::default(),
            fetch: FetchConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // bare words such as `auto` or `train` become strings
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {assignment:?}")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for s in sections {
        node = node
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("{s} is not a section")))?;
    }
    node.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.canny.validate()?;
        self.dbscan.validate()?;
        self.split_config().validate()?;
        self.smote_config().validate()?;
        self.svm.validate()?;
        if self.extract_chunk == 0 {
            return Err(CliError::Usage("extract_chunk must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            test_fraction: self.split.test_fraction,
            seed: stage_seed(self.seed, "split"),
        }
    }

    pub fn smote_config(&self) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            target_ratio: self.smote.target_ratio,
            seed: stage_seed(self.seed, "smote"),
        }
    }

    pub fn fetch_config(&self) -> FetchConfig {
        FetchConfig {
            cache_dir: self.paths.cache.clone(),
            offline: self.offline || self.fetch.offline,
            ..self.fetch.clone()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self.to_json().to_string().as_bytes())
    }
}
