//! Synthetic minority oversampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, N_FEATURES, PREV_STORM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Target minority size as a multiple of the majority size.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidParameter("k_neighbors must be at least 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "target_ratio must be positive, got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// A generated row together with the parents it was interpolated from:
/// `point = minority[base] + gap * (minority[neighbor] - minority[base])`,
/// before any rounding of binary columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRow {
    pub point: Vec<f64>,
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSample {
    pub features: FeatureVector,
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

/// Number of rows SMOTE adds for the given class sizes.
pub fn synthetic_count(minority: usize, majority: usize, ratio: f64) -> usize {
    let target = (ratio * majority as f64).ceil() as usize;
    target.saturating_sub(minority)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other rows of `rows[i]`, nearest first, ties
/// broken by index.
pub fn nearest_neighbors(rows: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, r)| (dist_sq(&rows[i], r), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, j)| j).collect()
}

/// SMOTE over arbitrary-dimension rows. Bases are visited round-robin over a
/// seeded permutation of the minority; the neighbor is drawn uniformly from
/// the base's k nearest minority rows. Columns listed in `binary` are
/// rounded to {0, 1} after interpolation.
pub fn smote_rows(
    minority: &[Vec<f64>],
    majority_count: usize,
    cfg: &SmoteConfig,
    binary: &[usize],
) -> Result<Vec<SyntheticRow>> {
    cfg.validate()?;
    let n_new = synthetic_count(minority.len(), majority_count, cfg.target_ratio);
    if n_new == 0 {
        return Ok(Vec::new());
    }
    if minority.len() <= cfg.k_neighbors {
        return Err(Error::InsufficientData(format!(
            "SMOTE needs more minority samples than k_neighbors = {}, got {}",
            cfg.k_neighbors,
            minority.len()
        )));
    }
    let dim = minority[0].len();
    if let Some(bad) = minority.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim} features"),
            actual: format!("{} features", bad.len()),
        });
    }

    let neighbors: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| nearest_neighbors(minority, i, cfg.k_neighbors))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..minority.len()).collect();
    order.shuffle(&mut rng);

    let mut out = Vec::with_capacity(n_new);
    for t in 0..n_new {
        let base = order[t % order.len()];
        let neighbor = neighbors[base][rng.random_range(0..cfg.k_neighbors)];
        let gap: f64 = rng.random();
        let (x, z) = (&minority[base], &minority[neighbor]);
        // the clamp only absorbs rounding so the point never leaves its segment's box
        let mut point: Vec<f64> = x
            .iter()
            .zip(z)
            .map(|(&a, &b)| (a + gap * (b - a)).clamp(a.min(b), a.max(b)))
            .collect();
        for &c in binary {
            point[c] = if point[c] >= 0.5 { 1.0 } else { 0.0 };
        }
        out.push(SyntheticRow {
            point,
            base,
            neighbor,
            gap,
        });
    }
    Ok(out)
}

/// SMOTE over feature vectors; the previous-day storm flag stays binary.
pub fn smote(
    minority: &[FeatureVector],
    majority_count: usize,
    cfg: &SmoteConfig,
) -> Result<Vec<SyntheticSample>> {
    let rows: Vec<Vec<f64>> = minority.iter().map(|v| v.0.to_vec()).collect();
    Ok(smote_rows(&rows, majority_count, cfg, &[PREV_STORM])?
        .into_iter()
        .map(|r| {
            let mut f = [0.0; N_FEATURES];
            f.copy_from_slice(&r.point);
            SyntheticSample {
                features: FeatureVector(f),
                base: r.base,
                neighbor: r.neighbor,
                gap: r.gap,
            }
        })
        .collect())
}
