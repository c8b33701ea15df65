//! Class balancing and the Gaussian-kernel SVM.

pub mod grid;
pub mod model_file;
pub mod smote;
pub mod split;
pub mod svm;

pub use grid::{grid_search, GridResult, GRID_C, GRID_GAMMA};
pub use model_file::{load_model, model_from_str, model_to_string, save_model};
pub use smote::{smote, smote_rows, SmoteConfig, SyntheticRow, SyntheticSample};
pub use split::{stratified_split, SplitConfig};
pub use svm::{
    classify, decision_value, kkt_violation, predict, raw_decision_value, rbf_kernel, train_gsvm,
    Gamma, SvmConfig, SvmFit, SvmModel, TrainMeta,
};

use serde::{Deserialize, Serialize};

use crate::features::{LabeledExample, Scaler, N_FEATURES, PREV_STORM};
use crate::{Result, StormClass};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub no_storm: usize,
    pub storm: usize,
}

impl ClassBalance {
    pub fn of<'a>(labels: impl IntoIterator<Item = &'a StormClass>) -> Self {
        let mut b = Self::default();
        for l in labels {
            if l.is_storm() {
                b.storm += 1;
            } else {
                b.no_storm += 1;
            }
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub before_smote: ClassBalance,
    pub after_smote: ClassBalance,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
    pub support_vectors: usize,
    pub final_objective: f64,
}

/// Scales the training examples, grows the minority class with SMOTE and
/// trains the SVM. The returned model carries `scaler`, so it predicts on
/// raw feature vectors.
pub fn fit_model(
    train: &[LabeledExample],
    scaler: Scaler,
    smote_cfg: &SmoteConfig,
    svm_cfg: &SvmConfig,
) -> Result<(SvmModel, TrainSummary)> {
    let mut rows = train
        .iter()
        .map(|e| scaler.transform(e.features.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let mut labels: Vec<StormClass> = train.iter().map(|e| e.label).collect();
    let before = ClassBalance::of(&labels);

    let minority_class = StormClass::from_flag(before.storm < before.no_storm);
    let (n_min, n_maj) = if minority_class.is_storm() {
        (before.storm, before.no_storm)
    } else {
        (before.no_storm, before.storm)
    };
    if n_min > 0 && n_min < n_maj {
        let minority: Vec<Vec<f64>> = rows
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l == minority_class)
            .map(|(r, _)| r.clone())
            .collect();
        let binary: &[usize] = if scaler.dim() == N_FEATURES { &[PREV_STORM] } else { &[] };
        for s in smote_rows(&minority, n_maj, smote_cfg, binary)? {
            rows.push(s.point);
            labels.push(minority_class);
        }
    }
    let after = ClassBalance::of(&labels);

    let fit = train_gsvm(&rows, &labels, svm_cfg)?;
    let mut model = fit.model;
    model.scaler = Some(scaler);
    model.meta.smote_seed = smote_cfg.seed;
    let summary = TrainSummary {
        before_smote: before,
        after_smote: after,
        gamma: model.gamma,
        iterations: fit.iterations,
        converged: model.converged,
        support_vectors: model.support_vectors.len(),
        final_objective: fit.objective.last().copied().unwrap_or(0.0),
    };
    Ok((model, summary))
}
