//! Browser bindings for the demo page in `www/`.
//!
//! Images cross the boundary as row-major bytes: grayscale in, RGBA out.

use chrono::NaiveDate;
use wasm_bindgen::prelude::*;

use stormcast::clustering::{ClusterLabel, DbscanParams};
use stormcast::features::extract_detailed;
use stormcast::imaging::{CannyParams, GrayImage};
use stormcast::learning::{decision_value, smote_rows, train_gsvm, Gamma, SmoteConfig, SvmConfig};
use stormcast::synth::{render_sun as render, spot_layout, SunSpec};
use stormcast::StormClass;

fn js(e: stormcast::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Side length of rendered suns, in pixels.
#[wasm_bindgen]
pub fn sun_size() -> u32 {
    SunSpec::default().size as u32
}

/// Renders a synthetic sun with `spots` dark spots in `groups` groups.
#[wasm_bindgen]
pub fn render_sun(spots: u32, groups: u32, seed: u32, noise: f64) -> Result<Vec<u8>, JsError> {
    let spec = SunSpec {
        noise,
        seed: seed.into(),
        ..SunSpec::default()
    };
    let layout = spot_layout(&spec, spots as usize, groups as usize, seed.into()).map_err(js)?;
    Ok(render(&spec, &layout).to_u8())
}

#[wasm_bindgen]
pub struct Detection {
    sunspots: usize,
    regions: usize,
    edge_pixels: usize,
    overlay: Vec<u8>,
}

#[wasm_bindgen]
impl Detection {
    #[wasm_bindgen(getter)]
    pub fn sunspots(&self) -> u32 {
        self.sunspots as u32
    }

    #[wasm_bindgen(getter)]
    pub fn regions(&self) -> u32 {
        self.regions as u32
    }

    #[wasm_bindgen(getter)]
    pub fn edge_pixels(&self) -> u32 {
        self.edge_pixels as u32
    }

    /// RGBA image: the input dimmed, edge pixels coloured by cluster.
    #[wasm_bindgen(getter)]
    pub fn overlay(&self) -> Vec<u8> {
        self.overlay.clone()
    }
}

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

/// Canny, contour counting and DBSCAN on a square grayscale image.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn detect(
    gray: &[u8],
    size: u32,
    sigma: f64,
    low: f64,
    high: f64,
    eps: f64,
    min_pts: u32,
) -> Result<Detection, JsError> {
    let size = size as usize;
    let img = GrayImage::from_u8(size, size, gray).map_err(js)?;
    let canny = CannyParams {
        smoothing_sigma: sigma,
        low_threshold: low,
        high_threshold: high,
        ..CannyParams::default()
    };
    let db = DbscanParams {
        eps,
        min_pts: min_pts as usize,
    };
    let day = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let ex = extract_detailed(day, &img, &canny, &db).map_err(js)?;

    let mut overlay = Vec::with_capacity(size * size * 4);
    for &g in gray {
        let v = g / 2;
        overlay.extend_from_slice(&[v, v, v, 255]);
    }
    for ((x, y), label) in ex.stages.edges.foreground().zip(&ex.labeling.labels) {
        let rgb = match label {
            ClusterLabel::Cluster(c) => PALETTE[c % PALETTE.len()],
            ClusterLabel::Noise => [255, 255, 255],
        };
        let i = (y * size + x) * 4;
        overlay[i..i + 3].copy_from_slice(&rgb);
    }
    Ok(Detection {
        sunspots: ex.record.sunspots,
        regions: ex.record.regions,
        edge_pixels: ex.stages.edges.count_set(),
        overlay,
    })
}

#[wasm_bindgen]
pub struct DecisionField {
    field: Vec<u8>,
    synthetic: Vec<f64>,
    support_vectors: usize,
    iterations: usize,
    accuracy: f64,
}

#[wasm_bindgen]
impl DecisionField {
    /// RGBA image of the decision function over the unit square, y up.
    #[wasm_bindgen(getter)]
    pub fn field(&self) -> Vec<u8> {
        self.field.clone()
    }

    /// SMOTE points as flat `x, y` pairs.
    #[wasm_bindgen(getter)]
    pub fn synthetic(&self) -> Vec<f64> {
        self.synthetic.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn support_vectors(&self) -> u32 {
        self.support_vectors as u32
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> u32 {
        self.iterations as u32
    }

    /// Training accuracy on the points as given, without synthetic ones.
    #[wasm_bindgen(getter)]
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
}

/// Trains an RBF SVM on points in the unit square. `points` holds
/// `x, y, label` triples with label 1 for storm. With `oversample` set, the
/// storm class is first brought level with SMOTE.
#[wasm_bindgen]
pub fn svm_field(
    points: &[f64],
    c: f64,
    gamma: f64,
    oversample: bool,
    k: u32,
    seed: u32,
    resolution: u32,
) -> Result<DecisionField, JsError> {
    if points.len() % 3 != 0 {
        return Err(JsError::new("points must be x, y, label triples"));
    }
    let mut x: Vec<Vec<f64>> = points.chunks(3).map(|p| vec![p[0], p[1]]).collect();
    let mut y: Vec<StormClass> = points.chunks(3).map(|p| StormClass::from_flag(p[2] >= 0.5)).collect();
    let original = x.len();

    let mut synthetic = Vec::new();
    if oversample {
        let minority: Vec<Vec<f64>> = x.iter().zip(&y).filter(|(_, l)| l.is_storm()).map(|(v, _)| v.clone()).collect();
        let majority = y.len() - minority.len();
        let cfg = SmoteConfig {
            k_neighbors: k as usize,
            target_ratio: 1.0,
            seed: seed.into(),
        };
        for s in smote_rows(&minority, majority, &cfg, &[]).map_err(js)? {
            synthetic.extend_from_slice(&s.point);
            x.push(s.point);
            y.push(StormClass::Storm);
        }
    }

    let cfg = SvmConfig {
        c,
        gamma: Gamma::Value(gamma),
        ..SvmConfig::default()
    };
    let fit = train_gsvm(&x, &y, &cfg).map_err(js)?;
    let model = &fit.model;
    let correct = x[..original]
        .iter()
        .zip(&y)
        .filter(|(v, l)| (decision_value(model, v).unwrap_or(0.0) >= 0.0) == l.is_storm())
        .count();

    let n = resolution.max(2) as usize;
    let mut field = Vec::with_capacity(n * n * 4);
    for row in 0..n {
        for col in 0..n {
            let p = [(col as f64 + 0.5) / n as f64, 1.0 - (row as f64 + 0.5) / n as f64];
            let d = decision_value(model, &p).map_err(js)?;
            let t = (d.abs().min(1.5) / 1.5 * 160.0) as u8;
            let px = if d >= 0.0 { [255, 255 - t, 255 - t, 255] } else { [255 - t, 255 - t / 2, 255, 255] };
            field.extend_from_slice(&px);
        }
    }
    Ok(DecisionField {
        field,
        synthetic,
        support_vectors: model.support_vectors.len(),
        iterations: fit.iterations,
        accuracy: correct as f64 / original.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendered_sun_is_detected() {
        let img = render_sun(5, 2, 3, 0.0).unwrap();
        let size = sun_size();
        let d = detect(&img, size, 0.5, 300.0, 600.0, 10.0, 5).unwrap();
        assert_eq!((d.sunspots(), d.regions()), (5, 2));
        assert_eq!(d.overlay().len(), (size * size * 4) as usize);
    }

    #[test]
    fn oversampled_field() {
        let pts = [0.1, 0.1, 0.0, 0.2, 0.8, 0.0, 0.8, 0.2, 0.0, 0.9, 0.9, 0.0, 0.5, 0.5, 0.0, 0.3, 0.6, 0.0, 0.45, 0.5, 1.0, 0.55, 0.5, 1.0, 0.5, 0.45, 1.0];
        let f = svm_field(&pts, 10.0, 5.0, true, 2, 1, 16).unwrap();
        assert_eq!(f.synthetic().len(), 2 * 3);
        assert_eq!(f.field().len(), 16 * 16 * 4);
        assert!(f.support_vectors() > 0);
    }
}
