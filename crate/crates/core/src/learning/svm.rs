//! Gaussian-kernel soft-margin SVM trained by sequential minimal optimization.
//!
//! The solver works on the dual
//! `max  Σα_i − ½ Σ α_i α_j y_i y_j K(x_i, x_j)`  s.t. `0 ≤ α_i ≤ C`, `Σ α_i y_i = 0`,
//! picking each working pair by the maximal-violation rule for the first
//! index and second-order gain for the second, as in LIBSVM.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, Scaler};
use crate::{Error, Result, StormClass};

/// Kernel width. `Auto` resolves to `1 / (d × mean per-feature variance)`
/// of the training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum Gamma {
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Value(f64),
    Name(String),
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = String;

    fn try_from(r: GammaRepr) -> std::result::Result<Self, String> {
        match r {
            GammaRepr::Value(v) => Ok(Gamma::Value(v)),
            GammaRepr::Name(s) if s.eq_ignore_ascii_case("auto") => Ok(Gamma::Auto),
            GammaRepr::Name(s) => s
                .parse()
                .map(Gamma::Value)
                .map_err(|_| format!("gamma must be a number or \"auto\", got {s:?}")),
        }
    }
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Auto => GammaRepr::Name("auto".into()),
            Gamma::Value(v) => GammaRepr::Value(v),
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Auto => f.write_str("auto"),
            Gamma::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Gamma {
    pub fn resolve(self, rows: &[Vec<f64>]) -> Result<f64> {
        match self {
            Gamma::Value(v) if v > 0.0 && v.is_finite() => Ok(v),
            Gamma::Value(v) => Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {v}"
            ))),
            Gamma::Auto => {
                let d = rows.first().map_or(0, Vec::len);
                let n = rows.len() as f64;
                if d == 0 || rows.len() < 2 {
                    return Err(Error::InsufficientData(
                        "gamma=auto needs at least two non-empty rows".into(),
                    ));
                }
                let mut total_var = 0.0;
                for c in 0..d {
                    let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
                    total_var += rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
                }
                let mean_var = total_var / d as f64;
                if mean_var <= 0.0 {
                    return Err(Error::ZeroVariance("training feature"));
                }
                Ok(1.0 / (d as f64 * mean_var))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    /// Iteration budget in units of one pair update per training row.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Auto,
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Provenance recorded with a trained model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub split_seed: u64,
    pub smote_seed: u64,
    pub test_fraction: f64,
    pub tolerance: f64,
    pub dataset_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub converged: bool,
    /// Applied to raw features by [`predict`]; absent for models trained on
    /// data that is already in model space.
    pub scaler: Option<Scaler>,
    pub meta: TrainMeta,
}

/// A trained model plus solver telemetry.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: SvmModel,
    /// Final multiplier of every training row.
    pub alpha: Vec<f64>,
    /// Dual objective before the first and after every pair update.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

const CACHE_BYTES: usize = 256 << 20;
const TAU: f64 = 1e-12;

/// Kernel rows computed on demand, least recently used evicted first.
struct KernelCache<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    stamp: Vec<u64>,
    clock: u64,
    live: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a [Vec<f64>], gamma: f64) -> Self {
        let n = x.len();
        Self {
            x,
            gamma,
            rows: vec![None; n],
            stamp: vec![0; n],
            clock: 0,
            live: 0,
            capacity: (CACHE_BYTES / (8 * n.max(1))).clamp(2, n.max(2)),
        }
    }

    fn load(&mut self, i: usize) {
        self.clock += 1;
        self.stamp[i] = self.clock;
        if self.rows[i].is_some() {
            return;
        }
        if self.live == self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&t| t != i && self.rows[t].is_some())
                .min_by_key(|&t| self.stamp[t])
                .expect("cache holds at least one other row");
            self.rows[victim] = None;
            self.live -= 1;
        }
        let xi = &self.x[i];
        self.rows[i] = Some(self.x.iter().map(|xt| rbf_kernel(xi, xt, self.gamma)).collect());
        self.live += 1;
    }

    fn row(&self, i: usize) -> &[f64] {
        self.rows[i].as_deref().expect("row loaded")
    }
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>()
}

/// Trains on rows that are already in model space. Labels map storm to +1.
pub fn train_gsvm(x: &[Vec<f64>], labels: &[StormClass], cfg: &SvmConfig) -> Result<SvmFit> {
    cfg.validate()?;
    if x.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", x.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    let dim = x.first().map_or(0, Vec::len);
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim} features"),
            actual: format!("{} features", bad.len()),
        });
    }
    let n_pos = labels.iter().filter(|l| l.is_storm()).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass(
            "SVM training needs both storm and no-storm examples".into(),
        ));
    }

    let gamma = cfg.gamma.resolve(x)?;
    let n = x.len();
    let c = cfg.c;
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − Σα, with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let mut cache = KernelCache::new(x, gamma);
    let mut objective = vec![0.0];
    let max_iter = cfg.max_passes.saturating_mul(n);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        // i: the most violating index in I_up
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(y[t], alpha[t], c) && -y[t] * grad[t] >= g_max {
                if -y[t] * grad[t] > g_max || i_sel.is_none() {
                    g_max = -y[t] * grad[t];
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        cache.load(i);
        let k_i = cache.row(i);

        // j: largest second-order gain among violators in I_low
        let mut g_min = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(y[t], alpha[t], c) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            let b = g_max - v;
            if b > 0.0 {
                let a = (2.0 - 2.0 * k_i[t]).max(TAU);
                let gain = -(b * b) / a;
                if gain < best {
                    best = gain;
                    j_sel = Some(t);
                }
            }
        }
        if g_max - g_min < cfg.tolerance {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };

        let quad = (2.0 - 2.0 * k_i[j]).max(TAU);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let (di, dj) = (ai - old_i, aj - old_j);
        cache.load(j);
        let (k_i, k_j) = (cache.row(i), cache.row(j));
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * di + y[j] * k_j[t] * dj);
        }
        iterations += 1;
        objective.push(dual_objective(&alpha, &grad));
    }

    let bias = compute_bias(&alpha, &grad, &y, c);
    let (support_vectors, dual_coefs) = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(t, &a)| (x[t].clone(), a * y[t]))
        .unzip();
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({max_iter}) before converging");
    }
    Ok(SvmFit {
        model: SvmModel {
            support_vectors,
            dual_coefs,
            bias,
            gamma,
            c,
            converged,
            scaler: None,
            meta: TrainMeta {
                tolerance: cfg.tolerance,
                ..TrainMeta::default()
            },
        },
        alpha,
        objective,
        iterations,
    })
}

/// Mean of `−y_i G_i` over free multipliers; without free ones, the midpoint
/// of the feasible interval.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_n += 1;
        }
        if in_up(y[t], alpha[t], c) {
            lo = lo.max(v);
        }
        if in_low(y[t], alpha[t], c) {
            hi = hi.min(v);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

/// `Σ α_i y_i K(sv_i, v) + b` for a vector already in model space.
pub fn decision_value(m: &SvmModel, v: &[f64]) -> Result<f64> {
    let dim = m.support_vectors.first().map_or(v.len(), Vec::len);
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim} features"),
            actual: format!("{} features", v.len()),
        });
    }
    Ok(m
        .support_vectors
        .iter()
        .zip(&m.dual_coefs)
        .map(|(sv, coef)| coef * rbf_kernel(sv, v, m.gamma))
        .sum::<f64>()
        + m.bias)
}

/// Boundary convention: a decision value of exactly zero is a storm.
pub fn classify(decision: f64) -> StormClass {
    StormClass::from_flag(decision >= 0.0)
}

/// Scales `raw` with the model's scaler (if any) and classifies it.
pub fn predict(m: &SvmModel, raw: &FeatureVector) -> Result<StormClass> {
    Ok(classify(raw_decision_value(m, raw)?))
}

pub fn raw_decision_value(m: &SvmModel, raw: &FeatureVector) -> Result<f64> {
    match &m.scaler {
        Some(s) => decision_value(m, &s.transform(raw.as_slice())?),
        None => decision_value(m, raw.as_slice()),
    }
}

/// Largest violation of the dual KKT conditions over the training set,
/// including box and equality feasibility.
pub fn kkt_violation(
    m: &SvmModel,
    x: &[Vec<f64>],
    labels: &[StormClass],
    alpha: &[f64],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut balance = 0.0;
    for ((xi, l), &a) in x.iter().zip(labels).zip(alpha) {
        let y = l.sign();
        balance += a * y;
        if a < 0.0 || a > m.c {
            worst = worst.max(if a < 0.0 { -a } else { a - m.c });
        }
        let margin = y * decision_value(m, xi)?;
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= m.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst.max(balance.abs()))
}
