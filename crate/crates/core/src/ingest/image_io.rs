use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::imaging::GrayImage;
use crate::{Error, Result};

/// Every image is processed at this square size so gradient thresholds
/// keep the same meaning across archive resolutions.
pub const WORKING_SIZE: usize = 1024;

/// Decodes PNG or JPEG bytes to grayscale without resampling.
///
/// Colour input is reduced with `0.299 R + 0.587 G + 0.114 B`.
pub fn decode_image(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let format = image::guess_format(bytes).map_err(|_| Error::UnsupportedFormat {
        path: path.to_path_buf(),
    })?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
        });
    }
    let decoded =
        image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => decoded
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect(),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => decoded
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) * 255.0 / 65535.0)
            .collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                (0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
                    .clamp(0.0, 255.0)
            })
            .collect(),
    };
    GrayImage::new(w, h, pixels)
}

pub fn load_image_raw(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, path)
}

/// Loads an image as grayscale at the working size.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = load_image_raw(path)?;
    if img.width() == WORKING_SIZE && img.height() == WORKING_SIZE {
        Ok(img)
    } else {
        resample_area(&img, WORKING_SIZE, WORKING_SIZE)
    }
}

/// Overlap weights of source cells `[i, i+1)` with `[o*scale, (o+1)*scale)`.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
            let mut taps = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < src {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((i, overlap / scale));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

/// Area-weighted resampling: each output pixel is the mean of the source
/// area it covers. Works for both reduction and enlargement.
pub fn resample_area(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if img.is_empty() || width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let (sw, sh) = (img.width(), img.height());
    let wx = area_weights(sw, width);
    let wy = area_weights(sh, height);

    let mut rows = vec![0.0; width * sh];
    for y in 0..sh {
        for (x, taps) in wx.iter().enumerate() {
            rows[y * width + x] = taps.iter().map(|&(i, w)| w * img.get(i, y)).sum();
        }
    }
    let mut out = vec![0.0; width * height];
    for (y, taps) in wy.iter().enumerate() {
        for x in 0..width {
            let v: f64 = taps.iter().map(|&(j, w)| w * rows[j * width + x]).sum();
            out[y * width + x] = v.clamp(0.0, 255.0);
        }
    }
    GrayImage::new(width, height, out)
}

/// Writes via a temporary file in the target directory and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Encodes 8-bit grayscale data as PNG and writes it atomically.
pub fn save_png(path: impl AsRef<Path>, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let buf = image::GrayImage::from_raw(width as u32, height as u32, data.to_vec()).ok_or_else(
        || Error::DimensionMismatch {
            expected: format!("{} bytes", width * height),
            actual: format!("{} bytes", data.len()),
        },
    )?;
    let mut encoded = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut encoded, ImageFormat::Png)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    write_atomic(path, encoded.get_ref())
}
