use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::{Error, Result};

/// Minimum intensity range for an image to be considered a disk on a dark sky.
const MIN_CONTRAST: f64 = 50.0;

/// Circle fitted to the solar disk, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarDisk {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl SolarDisk {
    /// True when `(x, y)` is strictly closer than `radius` to the centre.
    #[inline]
    pub fn contains(&self, x: f64, y: f64, radius: f64) -> bool {
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        dx * dx + dy * dy < radius * radius
    }
}

/// Otsu's threshold over a 256-bin histogram of rounded intensities.
/// Pixels strictly above the returned level form the bright class.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p.round() as usize] += 1;
    }
    let total = img.pixels().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let (mut best_t, mut best_var) = (0u8, -1.0);
    let (mut w0, mut sum0) = (0.0, 0.0);
    for (t, &count) in hist.iter().enumerate() {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best_var {
            best_var = between;
            best_t = t as u8;
        }
    }
    best_t
}

/// Locates the solar disk as the largest 8-connected region brighter than
/// Otsu's threshold, with enclosed holes (sunspots) filled in.
///
/// The centre is the region centroid and the radius `sqrt(area / pi)`.
pub fn solar_disk_mask(img: &GrayImage) -> Result<SolarDisk> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    let (lo, hi) = img
        .pixels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if hi - lo < MIN_CONTRAST {
        return Err(Error::NoSolarDisk);
    }

    let (w, h) = (img.width(), img.height());
    let level = f64::from(otsu_threshold(img));
    let bright: Vec<bool> = img.pixels().iter().map(|&p| p.round() > level).collect();

    // label 8-connected bright components, keep the largest
    let mut label = vec![0u32; w * h];
    let mut next = 0u32;
    let (mut best_label, mut best_size) = (0u32, 0usize);
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !bright[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bright[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        if size > best_size {
            best_size = size;
            best_label = next;
        }
    }
    if best_size == 0 {
        return Err(Error::NoSolarDisk);
    }

    // 4-connected flood of the outside from the frame; anything else not in
    // the region is an enclosed hole
    let inside: Vec<bool> = label.iter().map(|&l| l == best_label).collect();
    let mut outside = vec![false; w * h];
    for x in 0..w {
        for y in [0, h - 1] {
            let i = y * w + x;
            if !inside[i] && !outside[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            let i = y * w + x;
            if !inside[i] && !outside[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !inside[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }

    let (mut area, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (i, &out) in outside.iter().enumerate() {
        if !out {
            area += 1.0;
            sx += (i % w) as f64;
            sy += (i / w) as f64;
        }
    }
    Ok(SolarDisk {
        center_x: sx / area,
        center_y: sy / area,
        radius: (area / std::f64::consts::PI).sqrt(),
    })
}
