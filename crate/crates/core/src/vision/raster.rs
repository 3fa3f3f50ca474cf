use serde::{Deserialize, Serialize};

use super::VisionError;

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::Input(format!(
                "image has zero extent {width}x{height}"
            )));
        }
        if pixels.len() != 3 * width * height {
            return Err(VisionError::Input(format!(
                "pixel buffer holds {} bytes, expected {} for {width}x{height} RGB",
                pixels.len(),
                3 * width * height
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, VisionError> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(3 * width * height)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Copies the `w`×`h` region whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self, VisionError> {
        if x + w > self.width || y + h > self.height {
            return Err(VisionError::Contract(format!(
                "crop {w}x{h}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(3 * w * h);
        for row in y..y + h {
            let start = 3 * (row * self.width + x);
            pixels.extend_from_slice(&self.pixels[start..start + 3 * w]);
        }
        Self::new(w, h, pixels)
    }

    /// Rec. 601 luma per pixel, in [0, 255].
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }

    /// Area-averaging resample of one channel plane to `out_w`×`out_h`.
    /// Each output pixel is the coverage-weighted mean of the source pixels
    /// its footprint overlaps, so it also handles upscaling.
    pub fn box_resample_plane(
        plane: &[f64],
        width: usize,
        height: usize,
        out_w: usize,
        out_h: usize,
    ) -> Vec<f64> {
        let xs = spans(width, out_w);
        let ys = spans(height, out_h);
        let mut out = Vec::with_capacity(out_w * out_h);
        for row in &ys {
            for col in &xs {
                let mut acc = 0.0;
                let mut weight = 0.0;
                for &(sy, wy) in row {
                    for &(sx, wx) in col {
                        let w = wy * wx;
                        acc += plane[sy * width + sx] * w;
                        weight += w;
                    }
                }
                out.push(acc / weight);
            }
        }
        out
    }

    /// Box-filtered RGB resize.
    pub fn resize_box(&self, out_w: usize, out_h: usize) -> Result<Self, VisionError> {
        if out_w == 0 || out_h == 0 {
            return Err(VisionError::Contract(
                "resize target must be non-empty".into(),
            ));
        }
        if out_w == self.width && out_h == self.height {
            return Ok(self.clone());
        }
        let n = self.width * self.height;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, p) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                planes[c][i] = p[c] as f64;
            }
        }
        let resized: Vec<Vec<f64>> = planes
            .iter()
            .map(|pl| Self::box_resample_plane(pl, self.width, self.height, out_w, out_h))
            .collect();
        let mut pixels = Vec::with_capacity(3 * out_w * out_h);
        for i in 0..out_w * out_h {
            for plane in &resized {
                pixels.push(plane[i].round().clamp(0.0, 255.0) as u8);
            }
        }
        Self::new(out_w, out_h, pixels)
    }
}

/// For each of `out` destination cells over a source axis of length `len`,
/// the overlapped source indices with their overlap lengths.
fn spans(len: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = len as f64 / out as f64;
    (0..out)
        .map(|o| {
            let start = o as f64 * scale;
            let end = (o + 1) as f64 * scale;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(len);
            (first..last)
                .filter_map(|s| {
                    let overlap = end.min((s + 1) as f64) - start.max(s as f64);
                    (overlap > 1e-12).then_some((s, overlap))
                })
                .collect()
        })
        .collect()
}

/// Splits an image into `rows`×`cols` tiles, left-to-right then
/// top-to-bottom. Tiles in the last row/column absorb the remainder.
pub fn make_patches(
    img: &RasterImage,
    rows: usize,
    cols: usize,
) -> Result<Vec<RasterImage>, VisionError> {
    if rows == 0 || cols == 0 {
        return Err(VisionError::Contract(
            "patch grid must be at least 1x1".into(),
        ));
    }
    if img.width < cols || img.height < rows {
        return Err(VisionError::Contract(format!(
            "{}x{} image is smaller than the {rows}x{cols} patch grid",
            img.width, img.height
        )));
    }
    let (pw, ph) = (img.width / cols, img.height / rows);
    let mut patches = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let h = if r + 1 == rows {
            img.height - ph * r
        } else {
            ph
        };
        for c in 0..cols {
            let w = if c + 1 == cols {
                img.width - pw * c
            } else {
                pw
            };
            patches.push(img.crop(c * pw, r * ph, w, h)?);
        }
    }
    Ok(patches)
}

#[cfg(feature = "native")]
impl RasterImage {
    /// Decodes any format the `image` crate understands into RGB.
    pub fn decode(bytes: &[u8]) -> Result<Self, VisionError> {
        let img = image::load_from_memory(bytes)
            .map_err(|e| VisionError::Input(format!("image decode failed: {e}")))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn open(path: &std::path::Path) -> Result<Self, VisionError> {
        let bytes = std::fs::read(path)
            .map_err(|e| VisionError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::decode(&bytes)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, VisionError> {
        let buf =
            image::RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
                .ok_or_else(|| VisionError::Input("pixel buffer does not match extent".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| VisionError::Input(format!("png encode failed: {e}")))?;
        Ok(out.into_inner())
    }
}
