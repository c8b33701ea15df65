//! Plain-text model persistence.
//!
//! ```text
//! stormcast-svm 1
//! gamma=0.83
//! bias=-0.12
//! ...
//! alpha_y,f1,f2,f3,f4,f5
//! 0.5,0.1,0.2,0,0.4,0.3
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so reading a file back
//! reproduces the model bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::features::Scaler;
use crate::learning::{SvmModel, TrainMeta};
use crate::{Error, Result};

pub const MODEL_MAGIC: &str = "stormcast-svm";
pub const MODEL_VERSION: u32 = 1;

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn model_to_string(m: &SvmModel) -> String {
    let dim = m.support_vectors.first().map_or(0, Vec::len);
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}");
    let _ = writeln!(s, "gamma={}", m.gamma);
    let _ = writeln!(s, "bias={}", m.bias);
    let _ = writeln!(s, "c={}", m.c);
    let _ = writeln!(s, "converged={}", m.converged);
    let _ = writeln!(s, "tolerance={}", m.meta.tolerance);
    let _ = writeln!(s, "seed={}", m.meta.seed);
    let _ = writeln!(s, "split_seed={}", m.meta.split_seed);
    let _ = writeln!(s, "smote_seed={}", m.meta.smote_seed);
    let _ = writeln!(s, "test_fraction={}", m.meta.test_fraction);
    let _ = writeln!(s, "dataset_fingerprint={}", m.meta.dataset_fingerprint);
    if let Some(sc) = &m.scaler {
        let _ = writeln!(s, "scaler_min={}", join(&sc.min));
        let _ = writeln!(s, "scaler_max={}", join(&sc.max));
    }
    let _ = writeln!(s, "support_vectors={}", m.support_vectors.len());
    let cols: Vec<String> = (1..=dim).map(|k| format!("f{k}")).collect();
    let _ = writeln!(s, "alpha_y,{}", cols.join(","));
    for (sv, coef) in m.support_vectors.iter().zip(&m.dual_coefs) {
        let _ = writeln!(s, "{coef},{}", join(sv));
    }
    s
}

pub fn model_from_str(text: &str, origin: &Path) -> Result<SvmModel> {
    let bad = |line: usize, msg: String| Error::parse(origin, format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));

    let (_, first) = lines.next().ok_or_else(|| bad(1, "empty model file".into()))?;
    match first.split_once(' ') {
        Some((MODEL_MAGIC, v)) if v == MODEL_VERSION.to_string() => {}
        Some((MODEL_MAGIC, v)) => return Err(bad(1, format!("unsupported model version {v}"))),
        _ => return Err(bad(1, "not a stormcast model file".into())),
    }

    let float = |line: usize, v: &str| -> Result<f64> {
        v.trim()
            .parse::<f64>()
            .map_err(|_| bad(line, format!("invalid number {v:?}")))
    };
    let floats = |line: usize, v: &str| -> Result<Vec<f64>> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|p| float(line, p)).collect()
    };

    let mut m = SvmModel {
        support_vectors: Vec::new(),
        dual_coefs: Vec::new(),
        bias: f64::NAN,
        gamma: f64::NAN,
        c: f64::NAN,
        converged: false,
        scaler: None,
        meta: TrainMeta::default(),
    };
    let (mut smin, mut smax) = (None, None);
    let mut n_sv = None;
    let mut saw_columns = false;
    for (no, line) in lines.by_ref() {
        if line.starts_with("alpha_y") {
            saw_columns = true;
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(no, format!("expected key=value, got {line:?}")))?;
        let int = |v: &str| v.parse::<u64>().map_err(|_| bad(no, format!("invalid integer {v:?}")));
        match key {
            "gamma" => m.gamma = float(no, value)?,
            "bias" => m.bias = float(no, value)?,
            "c" => m.c = float(no, value)?,
            "converged" => {
                m.converged = value
                    .parse()
                    .map_err(|_| bad(no, format!("invalid flag {value:?}")))?
            }
            "tolerance" => m.meta.tolerance = float(no, value)?,
            "seed" => m.meta.seed = int(value)?,
            "split_seed" => m.meta.split_seed = int(value)?,
            "smote_seed" => m.meta.smote_seed = int(value)?,
            "test_fraction" => m.meta.test_fraction = float(no, value)?,
            "dataset_fingerprint" => m.meta.dataset_fingerprint = value.to_string(),
            "scaler_min" => smin = Some(floats(no, value)?),
            "scaler_max" => smax = Some(floats(no, value)?),
            "support_vectors" => n_sv = Some(int(value)? as usize),
            other => return Err(bad(no, format!("unknown key {other:?}"))),
        }
    }
    if !saw_columns {
        return Err(Error::parse(origin, "missing support vector table"));
    }
    let n_sv = n_sv.ok_or_else(|| Error::parse(origin, "missing support_vectors count"))?;
    for (name, v) in [("gamma", m.gamma), ("bias", m.bias), ("c", m.c)] {
        if !v.is_finite() {
            return Err(Error::parse(origin, format!("missing or invalid {name}")));
        }
    }
    m.scaler = match (smin, smax) {
        (Some(min), Some(max)) if min.len() == max.len() => Some(Scaler { min, max }),
        (None, None) => None,
        _ => return Err(Error::parse(origin, "inconsistent scaler fields")),
    };

    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut row = floats(no, line)?;
        if row.len() < 2 {
            return Err(bad(no, "support vector row needs alpha_y and features".into()));
        }
        m.dual_coefs.push(row.remove(0));
        m.support_vectors.push(row);
    }
    let dim = m.support_vectors.first().map_or(0, Vec::len);
    if m.support_vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::parse(origin, "support vectors differ in length"));
    }
    if let Some(s) = &m.scaler {
        if dim != 0 && s.dim() != dim {
            return Err(Error::parse(origin, "scaler and support vectors differ in length"));
        }
    }
    if n_sv != m.support_vectors.len() {
        return Err(Error::parse(
            origin,
            format!(
                "header announces {n_sv} support vectors, found {}",
                m.support_vectors.len()
            ),
        ));
    }
    Ok(m)
}

pub fn save_model(path: impl AsRef<Path>, m: &SvmModel) -> Result<()> {
    crate::ingest::write_atomic(path, model_to_string(m).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text, path)
}
