//! Optional hyperparameter search over a validation fold.

use serde::{Deserialize, Serialize};

use crate::evaluation::roc_curve;
use crate::features::{LabeledExample, Scaler};
use crate::learning::{fit_model, raw_decision_value, stratified_split, Gamma, SmoteConfig, SplitConfig, SvmConfig};
use crate::Result;

pub const GRID_C: [f64; 3] = [0.1, 1.0, 10.0];
pub const GRID_GAMMA: [f64; 3] = [0.01, 0.1, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: SvmConfig,
    /// `(C, γ, validation AUC)` for every grid cell.
    pub table: Vec<(f64, f64, f64)>,
}

/// Tries every `C × (γ-multiplier × auto γ)` cell on a stratified fold of
/// `train` and keeps the best validation AUC; ties go to the earlier cell.
pub fn grid_search(
    train: &[LabeledExample],
    scaler: &Scaler,
    smote_cfg: &SmoteConfig,
    base: &SvmConfig,
    seed: u64,
) -> Result<GridResult> {
    let (fit_part, valid) = stratified_split(
        train,
        &SplitConfig {
            test_fraction: 0.2,
            seed,
        },
    )?;
    let rows: Vec<Vec<f64>> = fit_part
        .iter()
        .map(|e| scaler.transform(e.features.as_slice()))
        .collect::<Result<_>>()?;
    let auto = Gamma::Auto.resolve(&rows)?;
    let labels: Vec<_> = valid.iter().map(|e| e.label).collect();

    let mut table = Vec::new();
    let mut best: Option<(f64, SvmConfig)> = None;
    for &c in &GRID_C {
        for &mult in &GRID_GAMMA {
            let cfg = SvmConfig {
                c,
                gamma: Gamma::Value(mult * auto),
                ..*base
            };
            let (model, _) = fit_model(&fit_part, scaler.clone(), smote_cfg, &cfg)?;
            let scores = valid
                .iter()
                .map(|e| raw_decision_value(&model, &e.features))
                .collect::<Result<Vec<_>>>()?;
            let auc = roc_curve(&scores, &labels)?.auc;
            table.push((c, mult * auto, auc));
            if best.as_ref().map_or(true, |(b, _)| auc > *b) {
                best = Some((auc, cfg));
            }
        }
    }
    Ok(GridResult {
        best: best.map(|(_, c)| c).unwrap_or(*base),
        table,
    })
}
