//! Seeded train/test split stratified by class.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::LabeledExample;
use crate::{Error, Result, StormClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Number of test samples drawn from a class of `n` members.
pub fn test_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1))
}

/// Returns `(train, test)`, each in input order. Within every class the test
/// members are the first [`test_count`] entries of a seeded shuffle.
pub fn stratified_split(
    examples: &[LabeledExample],
    cfg: &SplitConfig,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut is_test = vec![false; examples.len()];
    for class in [StormClass::NoStorm, StormClass::Storm] {
        let mut members: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::SingleClass(format!(
                "class {class} has {} example(s); a stratified split needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in &members[..test_count(members.len(), cfg.test_fraction)] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = examples
        .iter()
        .zip(&is_test)
        .partition(|(_, &t)| t);
    Ok((
        train.into_iter().map(|(e, _)| *e).collect(),
        test.into_iter().map(|(e, _)| *e).collect(),
    ))
}
