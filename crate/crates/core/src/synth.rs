//! Synthetic full-disk images and a small labelled corpus with a planted
//! spot-count signal, for tests, demos and the desk-scale run.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::GrayImage;
use crate::ingest::{format_kp_line, save_png, write_atomic, KpDay};
use crate::{Error, Result};

/// A dark circular spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spot {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunSpec {
    pub size: usize,
    pub disk_radius: f64,
    pub disk_level: f64,
    /// Fractional brightness lost at the limb.
    pub limb_darkening: f64,
    pub background: f64,
    pub spot_level: f64,
    /// Half-width of the uniform pixel noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SunSpec {
    fn default() -> Self {
        Self {
            size: 1024,
            disk_radius: 420.0,
            disk_level: 230.0,
            limb_darkening: 0.15,
            background: 0.0,
            spot_level: 15.0,
            noise: 2.0,
            seed: 0,
        }
    }
}

impl SunSpec {
    pub fn center(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }
}

/// Fraction of a pixel covered by a disk, from the signed distance of the
/// pixel centre to the rim.
fn coverage(dist: f64, radius: f64) -> f64 {
    (radius - dist + 0.5).clamp(0.0, 1.0)
}

pub fn render_sun(spec: &SunSpec, spots: &[Spot]) -> GrayImage {
    let c = spec.center();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise: Vec<f64> = (0..spec.size * spec.size)
        .map(|_| if spec.noise > 0.0 { rng.random_range(-spec.noise..=spec.noise) } else { 0.0 })
        .collect();
    GrayImage::from_fn(spec.size, spec.size, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let r = ((fx - c).powi(2) + (fy - c).powi(2)).sqrt();
        let mu = (1.0 - (r / spec.disk_radius).min(1.0).powi(2)).sqrt();
        let disk = spec.disk_level * (1.0 - spec.limb_darkening * (1.0 - mu));
        let cov = coverage(r, spec.disk_radius);
        let mut v = spec.background + cov * (disk - spec.background);
        for s in spots {
            let d = ((fx - s.x).powi(2) + (fy - s.y).powi(2)).sqrt();
            if d < s.radius + 1.0 {
                let k = coverage(d, s.radius);
                v = v * (1.0 - k) + spec.spot_level * k;
            }
        }
        v + noise[y * spec.size + x]
    })
}

/// Spot radius range and spacing used by [`spot_layout`].
pub const SPOT_RADIUS: (f64, f64) = (7.0, 10.0);
/// Rim-to-rim gap between neighbouring spots inside a group.
pub const GROUP_GAP: f64 = 7.0;
/// Minimum distance between group centres.
pub const GROUP_SEPARATION: f64 = 130.0;

/// Places `k` spots in `g` groups (`g ≤ k`, or `g = 0` when `k = 0`).
/// Spots in a group surround a central spot with rims `GROUP_GAP` apart, so
/// their edges are close but never touch; groups are far apart.
pub fn spot_layout(spec: &SunSpec, k: usize, g: usize, seed: u64) -> Result<Vec<Spot>> {
    if (k == 0) != (g == 0) || g > k || k > 5 * g.max(1) {
        return Err(Error::InvalidParameter(format!(
            "cannot lay out {k} spots in {g} groups"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = spec.center();
    let reach = 0.6 * spec.disk_radius;
    let mut centres: Vec<(f64, f64)> = Vec::new();
    let mut attempts = 0;
    while centres.len() < g {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidParameter(format!("no room for {g} groups")));
        }
        let (dx, dy) = (rng.random_range(-reach..reach), rng.random_range(-reach..reach));
        if dx * dx + dy * dy > reach * reach {
            continue;
        }
        let p = (c + dx, c + dy);
        if centres
            .iter()
            .all(|q| (q.0 - p.0).hypot(q.1 - p.1) >= GROUP_SEPARATION)
        {
            centres.push(p);
        }
    }

    // spread k spots over g groups as evenly as possible
    let mut spots = Vec::with_capacity(k);
    for (gi, &(gx, gy)) in centres.iter().enumerate() {
        let n = k / g + usize::from(gi < k % g);
        let r0 = rng.random_range(SPOT_RADIUS.0..SPOT_RADIUS.1);
        spots.push(Spot { x: gx, y: gy, radius: r0 });
        let turn = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        for j in 1..n {
            let r = rng.random_range(SPOT_RADIUS.0..SPOT_RADIUS.1);
            let a = turn + (j - 1) as f64 * std::f64::consts::FRAC_PI_2;
            let dist = r0 + r + GROUP_GAP;
            spots.push(Spot {
                x: gx + dist * a.cos(),
                y: gy + dist * a.sin(),
                radius: r,
            });
        }
    }
    Ok(spots)
}

/// Number of groups used for `k` spots in the corpus: up to three spots per
/// group.
pub fn groups_for(k: usize) -> usize {
    k.div_ceil(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    pub max_spots: usize,
    /// A day with at least this many spots is followed by a storm day.
    pub storm_threshold: usize,
    pub sun: SunSpec,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date"),
            days: 60,
            seed: 7,
            max_spots: 8,
            storm_threshold: 5,
            sun: SunSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDay {
    pub date: NaiveDate,
    pub spots: usize,
    pub groups: usize,
    pub image: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub days: Vec<CorpusDay>,
    pub kp_file: PathBuf,
    pub kp: Vec<KpDay>,
}

fn kp_profile(rng: &mut ChaCha8Rng, storm: bool) -> [f64; 8] {
    let mut v = [0.0; 8];
    for slot in &mut v {
        *slot = f64::from(rng.random_range(0..=10u8)) / 3.0;
    }
    if storm {
        v[rng.random_range(0..8)] = f64::from(rng.random_range(15..=21u8)) / 3.0;
    }
    v
}

/// Writes `days` images named `YYYYMMDD_000000_1024_HMIIF.png` into
/// `dir/images` and a GFZ-layout Kp file `dir/kp.txt` covering one day either
/// side. The day after a day with at least `storm_threshold` spots is a storm
/// day; every other day peaks below Kp 4.
pub fn generate_corpus(dir: &Path, spec: &CorpusSpec) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let images = dir.join("images");
    let day = |i: usize| {
        spec.start
            .checked_add_days(Days::new(i as u64))
            .ok_or_else(|| Error::InvalidParameter("corpus date out of range".into()))
    };

    let mut days = Vec::with_capacity(spec.days);
    for i in 0..spec.days {
        let date = day(i)?;
        let spots = rng.random_range(0..=spec.max_spots);
        let groups = groups_for(spots);
        let sun = SunSpec {
            seed: rng.random(),
            ..spec.sun
        };
        let layout = spot_layout(&sun, spots, groups, rng.random())?;
        let img = render_sun(&sun, &layout);
        let path = images.join(format!(
            "{:04}{:02}{:02}_000000_{}_HMIIF.png",
            date.year(),
            date.month(),
            date.day(),
            spec.sun.size
        ));
        save_png(&path, img.width(), img.height(), &img.to_u8())?;
        days.push(CorpusDay {
            date,
            spots,
            groups,
            image: path,
        });
    }

    // Kp for start-1 ..= end+1; day i+1 storms iff day i had many spots
    let mut kp = Vec::with_capacity(spec.days + 2);
    let before = spec
        .start
        .checked_sub_days(Days::new(1))
        .ok_or_else(|| Error::InvalidParameter("corpus date out of range".into()))?;
    kp.push(KpDay::new(before, kp_profile(&mut rng, false))?);
    for i in 0..=spec.days {
        let storm = i > 0 && days[i - 1].spots >= spec.storm_threshold;
        kp.push(KpDay::new(day(i)?, kp_profile(&mut rng, storm))?);
    }
    let mut text = String::from("# synthetic Kp, GFZ column layout\n");
    for k in &kp {
        text.push_str(&format_kp_line(k));
        text.push('\n');
    }
    let kp_file = dir.join("kp.txt");
    write_atomic(&kp_file, text.as_bytes())?;
    Ok(Corpus { days, kp_file, kp })
}
