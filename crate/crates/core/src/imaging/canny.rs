use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use super::{
    solar_disk_mask, BinaryImage, CannyParams, GradientField, GrayImage, MagnitudeMap, SolarDisk,
};
use crate::{Error, Result};

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / denom).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= sum);
    kernel
}

/// Convolves with a normalized 2-D Gaussian (applied separably), replicating
/// edge pixels at the border.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                acc += weight * img.get_clamped(x as isize + k as isize - radius, y as isize);
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sy = (y as isize + k as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += weight * horizontal[sy * w + x];
            }
            // rounding can push a saturated pixel a hair past 255
            out[y * w + x] = acc.clamp(0.0, 255.0);
        }
    }
    GrayImage::new(w, h, out)
}

/// 3x3 Sobel gradient with edge replication.
///
/// `magnitude = sqrt(gx^2 + gy^2)` and `direction = atan(gy / gx)`, with
/// `gx == 0` mapped to `pi/2` so the range is `(-pi/2, pi/2]`. `y` grows
/// downwards.
pub fn sobel_gradient(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut magnitude = vec![0.0; w * h];
    let mut direction = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            magnitude[i] = gx.hypot(gy);
            direction[i] = if gx == 0.0 { FRAC_PI_2 } else { (gy / gx).atan() };
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        magnitude,
        direction,
    })
}

/// Pixel offsets of the two neighbours along a gradient direction, quantized
/// to 0, 45, 90 or 135 degrees.
fn direction_neighbours(theta: f64) -> (isize, isize) {
    let deg = theta.to_degrees();
    if deg.abs() < 22.5 {
        (1, 0)
    } else if (22.5..67.5).contains(&deg) {
        (1, 1)
    } else if deg.abs() >= 67.5 {
        (0, 1)
    } else {
        (1, -1)
    }
}

/// Keeps a magnitude iff it is `>=` both neighbours along the quantized
/// gradient direction. Neighbours outside the frame count as zero.
pub fn nonmax_suppress(g: &GradientField) -> Result<MagnitudeMap> {
    let (w, h) = (g.width, g.height);
    if g.magnitude.len() != w * h || g.direction.len() != w * h {
        return Err(Error::DimensionMismatch {
            expected: format!("{w}x{h} gradient field"),
            actual: format!(
                "{} magnitudes, {} directions",
                g.magnitude.len(),
                g.direction.len()
            ),
        });
    }
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            g.magnitude[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = g.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = direction_neighbours(g.direction[i]);
            let (xi, yi) = (x as isize, y as isize);
            if m >= at(xi + dx, yi + dy) && m >= at(xi - dx, yi - dy) {
                out[i] = m;
            }
        }
    }
    MagnitudeMap::new(w, h, out)
}

/// Two-threshold edge linking: pixels `>= high` seed edges, pixels in
/// `[low, high)` survive iff 8-connected to a seed through other surviving pixels.
pub fn hysteresis_threshold(mag: &MagnitudeMap, low: f64, high: f64) -> Result<BinaryImage> {
    if !(low > 0.0 && low <= high) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < low <= high, got low={low} high={high}"
        )));
    }
    let (w, h) = (mag.width, mag.height);
    let mut edges = BinaryImage::empty(w, h);
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if mag.get(x, y) >= high {
                edges.set(x, y, true);
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                if !edges.get(nx, ny) && mag.get(nx, ny) >= low {
                    edges.set(nx, ny, true);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    Ok(edges)
}

/// Every intermediate product of [`canny`], for debug dumps and the demo.
#[derive(Debug, Clone)]
pub struct CannyStages {
    pub smoothed: GrayImage,
    pub gradient: GradientField,
    pub suppressed: MagnitudeMap,
    /// Hysteresis output before the limb mask.
    pub raw_edges: BinaryImage,
    pub disk: SolarDisk,
    pub edges: BinaryImage,
}

pub fn canny_stages(img: &GrayImage, params: &CannyParams) -> Result<CannyStages> {
    params.validate()?;
    let smoothed = gaussian_smooth(img, params.smoothing_sigma)?;
    let gradient = sobel_gradient(&smoothed)?;
    let suppressed = nonmax_suppress(&gradient)?;
    let raw_edges =
        hysteresis_threshold(&suppressed, params.low_threshold, params.high_threshold)?;
    let disk = solar_disk_mask(img)?;

    let keep_radius = disk.radius * (1.0 - params.disk_margin_fraction);
    let mut edges = raw_edges.clone();
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) && !disk.contains(x as f64, y as f64, keep_radius) {
                edges.set(x, y, false);
            }
        }
    }
    Ok(CannyStages {
        smoothed,
        gradient,
        suppressed,
        raw_edges,
        disk,
        edges,
    })
}

/// Gaussian smoothing, Sobel gradient, non-maximum suppression and
/// hysteresis, followed by clearing every edge pixel that is not strictly
/// inside the solar disk shrunk by `disk_margin_fraction` of its radius.
pub fn canny(img: &GrayImage, params: &CannyParams) -> Result<BinaryImage> {
    canny_stages(img, params).map(|s| s.edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..=255.0)).collect())
            .unwrap()
    }

    fn field(w: usize, h: usize, magnitude: Vec<f64>, direction: f64) -> GradientField {
        GradientField {
            width: w,
            height: h,
            direction: vec![direction; magnitude.len()],
            magnitude,
        }
    }

    #[test]
    fn smoothing_preserves_constant_image() {
        let img = GrayImage::filled(17, 9, 128.0);
        let out = gaussian_smooth(&img, 1.4).unwrap();
        let dev = out.pixels().iter().map(|p| (p - 128.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "max deviation {dev}");
    }

    #[test]
    fn smoothing_impulse_spreads_central_weight() {
        let mut px = vec![0.0; 21 * 21];
        px[10 * 21 + 10] = 255.0;
        let img = GrayImage::new(21, 21, px).unwrap();
        let out = gaussian_smooth(&img, 1.0).unwrap();

        // central weight of the normalized 2-D kernel, evaluated directly
        let mut total = 0.0;
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                total += (-f64::from(dx * dx + dy * dy) / 2.0).exp();
            }
        }
        let central = 255.0 / total;
        assert!((out.get(10, 10) - central).abs() < 1e-9);
        let sum: f64 = out.pixels().iter().sum();
        assert!((sum - 255.0).abs() / 255.0 < 1e-6);
    }

    #[test]
    fn smoothing_matches_direct_2d_convolution() {
        let img = random_image(3, 3, 7);
        let sigma = 0.5;
        let out = gaussian_smooth(&img, sigma).unwrap();
        let r = (3.0f64 * sigma).ceil() as isize;
        let mut norm = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                norm += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        for y in 0..3isize {
            for x in 0..3isize {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                        acc += wgt * img.get_clamped(x + dx, y + dy);
                    }
                }
                let expected = acc / norm;
                let got = out.get(x as usize, y as usize);
                assert!((got - expected).abs() < 1e-12, "({x},{y}) {got} vs {expected}");
            }
        }
    }

    #[test]
    fn smoothing_rejects_empty_image() {
        let img = GrayImage::new(0, 0, vec![]).unwrap();
        assert!(matches!(gaussian_smooth(&img, 1.0), Err(Error::EmptyImage)));
    }

    #[test]
    fn sobel_uniform_is_zero() {
        let g = sobel_gradient(&GrayImage::filled(6, 5, 77.0)).unwrap();
        assert!(g.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn sobel_vertical_step() {
        let img = GrayImage::from_fn(8, 6, |x, _| if x < 4 { 0.0 } else { 255.0 });
        let g = sobel_gradient(&img).unwrap();
        let max = g.magnitude.iter().copied().fold(0.0, f64::max);
        for y in 0..6 {
            for x in 0..8 {
                let i = y * 8 + x;
                if x == 3 || x == 4 {
                    assert_eq!(g.magnitude[i], max);
                    assert!(g.direction[i].abs() < 1e-12);
                } else {
                    assert!(g.magnitude[i] < max);
                }
            }
        }
        assert_eq!(max, 4.0 * 255.0);
    }

    #[test]
    fn sobel_rejects_tiny_image() {
        assert!(matches!(
            sobel_gradient(&GrayImage::filled(2, 5, 1.0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn sobel_matches_stencil_oracle() {
        let img = random_image(5, 5, 11);
        let g = sobel_gradient(&img).unwrap();
        let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
        for y in 0..5isize {
            for x in 0..5isize {
                let (mut gx, mut gy) = (0.0, 0.0);
                for (r, (rx, ry)) in kx.iter().zip(ky.iter()).enumerate() {
                    for c in 0..3 {
                        let v = img.get_clamped(x + c as isize - 1, y + r as isize - 1);
                        gx += rx[c] * v;
                        gy += ry[c] * v;
                    }
                }
                let i = (y * 5 + x) as usize;
                assert!((g.magnitude[i] - (gx * gx + gy * gy).sqrt()).abs() < 1e-12);
                let theta = if gx == 0.0 { FRAC_PI_2 } else { (gy / gx).atan() };
                assert!((g.direction[i] - theta).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn sobel_transpose_swaps_axes(seed in any::<u64>()) {
            let img = random_image(8, 8, seed);
            let a = sobel_gradient(&img).unwrap();
            let b = sobel_gradient(&img.transpose()).unwrap();
            for y in 1..7 {
                for x in 1..7 {
                    let i = y * 8 + x;
                    let j = x * 8 + y;
                    prop_assert!((a.magnitude[i] - b.magnitude[j]).abs() < 1e-9);
                    if a.magnitude[i] > 1e-6 {
                        // orientation is defined modulo pi
                        let d = (b.direction[j] - (FRAC_PI_2 - a.direction[i]))
                            .rem_euclid(std::f64::consts::PI);
                        prop_assert!(d < 1e-9 || (std::f64::consts::PI - d) < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn hysteresis_monotone_in_low(seed in any::<u64>(), lo in 1.0f64..100.0, drop in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mag = MagnitudeMap::new(12, 12, (0..144).map(|_| rng.random_range(0.0..200.0)).collect()).unwrap();
            let high = 150.0;
            let a = hysteresis_threshold(&mag, lo, high).unwrap();
            let b = hysteresis_threshold(&mag, lo * drop.max(0.01), high).unwrap();
            for (ea, eb) in a.bits().iter().zip(b.bits()) {
                prop_assert!(!*ea || *eb);
            }
        }
    }

    #[test]
    fn nms_keeps_single_ridge() {
        let mut m = vec![0.0; 49];
        for y in 0..7 {
            m[y * 7 + 3] = 500.0;
        }
        let out = nonmax_suppress(&field(7, 7, m.clone(), 0.0)).unwrap();
        assert_eq!(out.values, m);
    }

    #[test]
    fn nms_uniform_field_is_idempotent() {
        let g = field(6, 6, vec![10.0; 36], 0.3);
        let once = nonmax_suppress(&g).unwrap();
        assert!(once.values.iter().all(|&v| v == 10.0));
        let twice = nonmax_suppress(&GradientField {
            magnitude: once.values.clone(),
            ..g.clone()
        })
        .unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn nms_ramp_keeps_crest() {
        let profile = [0.0, 0.0, 100.0, 250.0, 100.0, 0.0, 0.0];
        let m: Vec<f64> = (0..49).map(|i| profile[i % 7]).collect();
        let out = nonmax_suppress(&field(7, 7, m, 0.0)).unwrap();
        for y in 0..7 {
            for x in 0..7 {
                let expected = if x == 3 { 250.0 } else { 0.0 };
                assert_eq!(out.get(x, y), expected, "({x},{y})");
            }
        }
    }

    #[test]
    fn nms_diagonal_directions_compare_diagonals() {
        // gradient along +45 deg: crest on the anti-diagonal x + y == 4
        let m: Vec<f64> = (0..25)
            .map(|i| {
                let (x, y) = (i % 5, i / 5);
                match x + y {
                    4 => 100.0,
                    2 | 6 => 50.0,
                    _ => 0.0,
                }
            })
            .collect();
        let out = nonmax_suppress(&field(5, 5, m, std::f64::consts::FRAC_PI_4)).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(out.get(x, y) > 0.0, x + y == 4, "({x},{y})");
            }
        }
    }

    #[test]
    fn hysteresis_all_below_low_is_empty() {
        let mag = MagnitudeMap::new(4, 4, vec![299.0; 16]).unwrap();
        let out = hysteresis_threshold(&mag, 300.0, 600.0).unwrap();
        assert_eq!(out.count_set(), 0);
    }

    #[test]
    fn hysteresis_follows_weak_chain() {
        let mut v = vec![0.0; 36];
        v[0] = 700.0;
        for k in 1..6 {
            v[k * 6 + k] = 400.0;
        }
        v[5] = 400.0; // weak but isolated
        let out = hysteresis_threshold(&MagnitudeMap::new(6, 6, v).unwrap(), 300.0, 600.0).unwrap();
        for k in 0..6 {
            assert!(out.get(k, k));
        }
        assert!(!out.get(5, 0));
        assert_eq!(out.count_set(), 6);
    }

    #[test]
    fn hysteresis_rejects_inverted_thresholds() {
        let mag = MagnitudeMap::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            hysteresis_threshold(&mag, 600.0, 300.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    /// Independent flood fill: repeatedly grow the strong set by one
    /// neighbourhood ring until nothing changes.
    fn hysteresis_oracle(mag: &MagnitudeMap, low: f64, high: f64) -> Vec<bool> {
        let (w, h) = (mag.width, mag.height);
        let mut on: Vec<bool> = mag.values.iter().map(|&v| v >= high).collect();
        loop {
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    if on[y * w + x] || mag.get(x, y) < low {
                        continue;
                    }
                    let touching = (-1isize..=1).any(|dy| {
                        (-1isize..=1).any(|dx| {
                            let (nx, ny) = (x as isize + dx, y as isize + dy);
                            nx >= 0
                                && ny >= 0
                                && (nx as usize) < w
                                && (ny as usize) < h
                                && on[ny as usize * w + nx as usize]
                        })
                    });
                    if touching {
                        on[y * w + x] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                return on;
            }
        }
    }

    #[test]
    fn hysteresis_matches_flood_fill_oracle() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mag = MagnitudeMap::new(
                10,
                10,
                (0..100).map(|_| rng.random_range(0.0..800.0)).collect(),
            )
            .unwrap();
            let out = hysteresis_threshold(&mag, 300.0, 600.0).unwrap();
            assert_eq!(out.bits(), hysteresis_oracle(&mag, 300.0, 600.0).as_slice());
        }
    }
}
