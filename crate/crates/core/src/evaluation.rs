//! Validation metrics: Pearson correlation against SILSO, ROC/AUC and the
//! per-class precision/recall grid, with a side-by-side SWPC baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::features::{wolf_proxy, DailySunspotRecord};
use crate::ingest::SilsoRecord;
use crate::learning::ClassBalance;
use crate::{Error, Result, StormClass};

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", x.len()),
            actual: format!("{} values", y.len()),
        });
    }
    if x.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "need at least {min_len} paired values, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean of `x_i − y_i`.
pub fn mean_signed_difference(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 1)?;
    Ok(x.iter().zip(y).map(|(a, b)| a - b).sum::<f64>() / x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilsoCorrelation {
    pub pcc: f64,
    /// Mean of `(10R + S) − SESC` over matched days.
    pub mean_diff: f64,
    pub n_matched: usize,
}

/// Compares our `10R + S` series with SILSO's SESC numbers on shared dates.
/// SILSO days without a value are skipped.
pub fn correlate_with_silso(
    records: &[DailySunspotRecord],
    silso: &[SilsoRecord],
) -> Result<SilsoCorrelation> {
    let reference: BTreeMap<NaiveDate, f64> = silso
        .iter()
        .filter_map(|s| s.sesc_number.map(|v| (s.date, v)))
        .collect();
    let ours: BTreeMap<NaiveDate, f64> = records.iter().map(|r| (r.date, wolf_proxy(r))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = ours
        .iter()
        .filter_map(|(d, &v)| reference.get(d).map(|&s| (v, s)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} date(s) shared with the SILSO series",
            x.len()
        )));
    }
    Ok(SilsoCorrelation {
        pcc: pearson(&x, &y)?,
        mean_diff: mean_signed_difference(&x, &y)?,
        n_matched: x.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from (0, 0) to (1, 1) as the threshold falls.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Storm is the positive class; higher scores mean "more storm". Samples
/// with equal scores enter the curve in a single step.
pub fn roc_curve(scores: &[f64], labels: &[StormClass]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", scores.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|l| l.is_storm()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]].is_storm() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = trapezoid_area(&points);
    Ok(RocCurve { points, auc })
}

pub fn roc_to_csv(roc: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr\n");
    for (f, t) in &roc.points {
        let _ = writeln!(s, "{f},{t}");
    }
    s
}

/// Storm is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn tally(pred: &[StormClass], truth: &[StormClass]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} predictions", truth.len()),
                actual: format!("{} predictions", pred.len()),
            });
        }
        let mut c = Self::default();
        for (p, t) in pred.iter().zip(truth) {
            match (p.is_storm(), t.is_storm()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `None` marks a zero denominator, which is not the same as a score of 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub no_storm: ClassMetrics,
    pub storm: ClassMetrics,
    pub confusion: ConfusionCounts,
    /// Support-weighted mean recall, which equals the fraction correct.
    pub weighted_accuracy: Option<f64>,
    /// Unweighted mean of the two recalls.
    pub balanced_accuracy: Option<f64>,
}

pub fn classification_metrics(pred: &[StormClass], truth: &[StormClass]) -> Result<ClassificationMetrics> {
    let c = ConfusionCounts::tally(pred, truth)?;
    let storm = ClassMetrics {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        support: c.tp + c.fn_,
    };
    let no_storm = ClassMetrics {
        precision: ratio(c.tn, c.tn + c.fn_),
        recall: ratio(c.tn, c.tn + c.fp),
        support: c.tn + c.fp,
    };
    let balanced_accuracy = match (storm.recall, no_storm.recall) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    Ok(ClassificationMetrics {
        no_storm,
        storm,
        confusion: c,
        weighted_accuracy: ratio(c.correct(), c.total()),
        balanced_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub metrics: ClassificationMetrics,
    /// Present when the method produces scores.
    pub roc: Option<RocCurve>,
    pub n_test: ClassBalance,
    pub config_fingerprint: String,
}

impl EvaluationReport {
    /// The headline figure, reported as overall weighted accuracy.
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().map(|r| r.auc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Report for scored predictions, thresholded at zero (storm on ties).
pub fn evaluate_scores(
    method: &str,
    scores: &[f64],
    truth: &[StormClass],
    config_fingerprint: &str,
) -> Result<EvaluationReport> {
    let pred: Vec<StormClass> = scores
        .iter()
        .map(|&s| StormClass::from_flag(s >= 0.0))
        .collect();
    Ok(EvaluationReport {
        method: method.to_string(),
        metrics: classification_metrics(&pred, truth)?,
        roc: Some(roc_curve(scores, truth)?),
        n_test: ClassBalance::of(truth),
        config_fingerprint: config_fingerprint.to_string(),
    })
}

pub fn evaluate_predictions(
    method: &str,
    pred: &[StormClass],
    truth: &[StormClass],
    config_fingerprint: &str,
) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        method: method.to_string(),
        metrics: classification_metrics(pred, truth)?,
        roc: None,
        n_test: ClassBalance::of(truth),
        config_fingerprint: config_fingerprint.to_string(),
    })
}

/// One scored test day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatedScore {
    pub date: NaiveDate,
    pub score: f64,
    pub truth: StormClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub ours: EvaluationReport,
    pub baseline: EvaluationReport,
    /// Test dates the baseline does not cover; excluded from both rows.
    pub missing: Vec<NaiveDate>,
}

/// Evaluates both methods over the test dates the baseline covers.
pub fn compare_with_baseline(
    ours: &[DatedScore],
    baseline: &BTreeMap<NaiveDate, StormClass>,
    config_fingerprint: &str,
) -> Result<BaselineComparison> {
    let (shared, missing): (Vec<&DatedScore>, Vec<&DatedScore>) =
        ours.iter().partition(|s| baseline.contains_key(&s.date));
    if shared.is_empty() {
        return Err(Error::InsufficientData(
            "the baseline covers none of the test dates".into(),
        ));
    }
    let scores: Vec<f64> = shared.iter().map(|s| s.score).collect();
    let truth: Vec<StormClass> = shared.iter().map(|s| s.truth).collect();
    let base_pred: Vec<StormClass> = shared.iter().map(|s| baseline[&s.date]).collect();
    let ours_report = match roc_curve(&scores, &truth) {
        Ok(_) => evaluate_scores("G-SVM", &scores, &truth, config_fingerprint)?,
        // one class in the overlap: the grid is still defined, the ROC is not
        Err(_) => {
            let pred: Vec<StormClass> =
                scores.iter().map(|&s| StormClass::from_flag(s >= 0.0)).collect();
            evaluate_predictions("G-SVM", &pred, &truth, config_fingerprint)?
        }
    };
    Ok(BaselineComparison {
        ours: ours_report,
        baseline: evaluate_predictions("SWPC", &base_pred, &truth, config_fingerprint)?,
        missing: missing.iter().map(|s| s.date).collect(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

/// Text grid of per-class metrics, one block per method.
pub fn format_table(reports: &[&EvaluationReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:<9} {:>9} {:>7} {:>8} {:>9} {:>9} {:>6}",
        "Method", "Class", "Precision", "Recall", "Support", "Accuracy", "Balanced", "AUC"
    );
    for r in reports {
        let m = &r.metrics;
        for (i, (name, c)) in [("no_storm", &m.no_storm), ("storm", &m.storm)].iter().enumerate() {
            let (method, acc, bal, auc) = if i == 0 {
                (
                    r.method.as_str(),
                    cell(m.weighted_accuracy),
                    cell(m.balanced_accuracy),
                    cell(r.auc()),
                )
            } else {
                ("", String::new(), String::new(), String::new())
            };
            let _ = writeln!(
                s,
                "{:<8} {:<9} {:>9} {:>7} {:>8} {:>9} {:>9} {:>6}",
                method,
                name,
                cell(c.precision),
                cell(c.recall),
                c.support,
                acc,
                bal,
                auc
            );
        }
    }
    s
}

/// Distinct score values, highest first; each is one ROC step.
pub fn distinct_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut out = scores.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup_by(|a, b| a == b);
    out
}
