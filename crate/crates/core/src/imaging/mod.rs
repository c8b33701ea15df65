//! Sunspot imaging: Canny edge detection, solar disk localisation and
//! border-following contour extraction.

mod canny;
mod contours;
mod disk;

pub use canny::{
    canny, canny_stages, gaussian_kernel, gaussian_smooth, hysteresis_threshold,
    nonmax_suppress, sobel_gradient, CannyStages,
};
pub use contours::{count_sunspots, find_contours, trace_borders, Contour, DEFAULT_MIN_PERIMETER};
pub use disk::{otsu_threshold, solar_disk_mask, SolarDisk};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major grayscale raster with intensities in `[0, 255]`.
///
/// Intensities are stored as `f64` so smoothing does not quantize.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=255.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!(
                "intensity {bad} outside [0, 255]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid fill value")
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(width, height, data.iter().map(|&v| f64::from(v)).collect())
    }

    /// Clamps every intensity into `[0, 255]`; for data from renderers.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 255.0));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[cy * self.width + cx]
    }

    /// Rounds to 8-bit, for PNG output.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| p.round() as u8).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for x in 0..self.width {
            for y in 0..self.height {
                pixels.push(self.get(x, y));
            }
        }
        Self {
            width: self.height,
            height: self.width,
            pixels,
        }
    }
}

/// Non-negative real-valued raster, used for gradient magnitudes which are
/// not bounded by the 8-bit intensity range.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl MagnitudeMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", width * height),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Linear rescale to 8-bit for debug dumps.
    pub fn to_u8(&self) -> Vec<u8> {
        let max = self.max();
        if max <= 0.0 {
            return vec![0; self.values.len()];
        }
        self.values
            .iter()
            .map(|v| (v / max * 255.0).round() as u8)
            .collect()
    }
}

/// Per-pixel Sobel gradient: magnitude and direction in `(-pi/2, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    pub direction: Vec<f64>,
}

impl GradientField {
    pub fn magnitude_map(&self) -> MagnitudeMap {
        MagnitudeMap {
            width: self.width,
            height: self.height,
            values: self.magnitude.clone(),
        }
    }
}

/// Boolean raster; `true` marks an edge / foreground pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", bits.len()),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Coordinates of all set pixels in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }
}

/// Canny and limb-masking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyParams {
    pub smoothing_sigma: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub disk_margin_fraction: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            smoothing_sigma: 0.5,
            low_threshold: 300.0,
            high_threshold: 600.0,
            disk_margin_fraction: 0.02,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_sigma > 0.0 && self.smoothing_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing_sigma must be > 0, got {}",
                self.smoothing_sigma
            )));
        }
        if !(self.low_threshold > 0.0 && self.low_threshold <= self.high_threshold) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < low_threshold <= high_threshold, got {} and {}",
                self.low_threshold, self.high_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.disk_margin_fraction) {
            return Err(Error::InvalidParameter(format!(
                "disk_margin_fraction must be in [0, 1), got {}",
                self.disk_margin_fraction
            )));
        }
        Ok(())
    }
}
