//! Stick-figure rendering of posed skeletons to uncompressed bitmaps.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kinematics::{JointPositions, KinematicTree};

/// Smallest accepted image side, in pixels.
pub const MIN_IMAGE_SIZE: usize = 64;

/// Orthographic projection plane; the first axis maps to image x, the
/// second to image y (up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Plane {
    #[default]
    XY,
    XZ,
    ZY,
}

impl Plane {
    fn axes(self) -> (usize, usize) {
        match self {
            Plane::XY => (0, 1),
            Plane::XZ => (0, 2),
            Plane::ZY => (2, 1),
        }
    }
}

impl std::str::FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(Plane::XY),
            "xz" => Ok(Plane::XZ),
            "zy" => Ok(Plane::ZY),
            _ => Err(Error::Config(format!("unknown projection plane {s:?} (xy, xz, zy)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    /// Side of the square image in pixels.
    pub size: usize,
    pub plane: Plane,
    /// Side of the square brush, in pixels.
    pub stroke: usize,
    /// Blank border kept around the figure, in pixels.
    pub margin: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            size: 256,
            plane: Plane::XY,
            stroke: 2,
            margin: 8,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < MIN_IMAGE_SIZE {
            return Err(Error::Config(format!(
                "image size must be at least {MIN_IMAGE_SIZE}, got {}",
                self.size
            )));
        }
        if self.stroke == 0 || 2 * self.margin >= self.size {
            return Err(Error::Config("stroke must be positive and the margin under half the size".into()));
        }
        Ok(())
    }
}

/// 24-bit RGB raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const INK: [u8; 3] = [0, 0, 0];

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    fn stamp(&mut self, x: i64, y: i64, stroke: usize) {
        let lo = (stroke as i64 - 1) / 2;
        for dy in -lo..stroke as i64 - lo {
            for dx in -lo..stroke as i64 - lo {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 && (px as usize) < self.width && (py as usize) < self.height {
                    self.pixels[py as usize * self.width + px as usize] = INK;
                }
            }
        }
    }

    /// Bresenham line between pixel centres.
    pub fn line(&mut self, from: (i64, i64), to: (i64, i64), stroke: usize) {
        let (mut x, mut y) = from;
        let dx = (to.0 - x).abs();
        let dy = -(to.1 - y).abs();
        let sx = if x < to.0 { 1 } else { -1 };
        let sy = if y < to.1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.stamp(x, y, stroke);
            if (x, y) == to {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Uncompressed 24-bit BMP bytes (bottom-up rows, 4-byte row padding).
    pub fn to_bmp(&self) -> Vec<u8> {
        let row = (3 * self.width).div_ceil(4) * 4;
        let data = row * self.height;
        let mut out = Vec::with_capacity(54 + data);
        out.extend_from_slice(b"BM");
        out.extend_from_slice(&((54 + data) as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&54u32.to_le_bytes());
        out.extend_from_slice(&40u32.to_le_bytes());
        out.extend_from_slice(&(self.width as i32).to_le_bytes());
        out.extend_from_slice(&(self.height as i32).to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&24u16.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&(data as u32).to_le_bytes());
        out.extend_from_slice(&2835u32.to_le_bytes());
        out.extend_from_slice(&2835u32.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let [r, g, b] = self.get(x, y);
                out.extend_from_slice(&[b, g, r]);
            }
            out.resize(out.len() + row - 3 * self.width, 0);
        }
        out
    }
}

/// Maps skeleton coordinates to pixels with one scale for a whole sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub plane: Plane,
    /// Pixels per skeleton unit.
    pub scale: f64,
    centre: (f64, f64),
    size: usize,
}

impl Projection {
    /// Fits the bounding box of every frame inside the image margins.
    pub fn fit(pos: &JointPositions, cfg: &RenderConfig) -> Self {
        let (a, b) = cfg.plane.axes();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pos.positions {
            for (k, axis) in [a, b].into_iter().enumerate() {
                lo[k] = lo[k].min(p[axis]);
                hi[k] = hi[k].max(p[axis]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let avail = (cfg.size - 2 * cfg.margin - 1) as f64;
        let scale = if extent > 0.0 { avail / extent } else { 1.0 };
        Projection {
            plane: cfg.plane,
            scale,
            centre: ((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0),
            size: cfg.size,
        }
    }

    pub fn project(&self, p: &nalgebra::Vector3<f64>) -> (i64, i64) {
        let (a, b) = self.plane.axes();
        let half = (self.size - 1) as f64 / 2.0;
        let x = half + (p[a] - self.centre.0) * self.scale;
        let y = half - (p[b] - self.centre.1) * self.scale;
        (x.round() as i64, y.round() as i64)
    }
}

/// One stick-figure image per frame.
pub fn render_frames(tree: &KinematicTree, pos: &JointPositions, cfg: &RenderConfig) -> Result<Vec<Image>> {
    cfg.validate()?;
    if pos.joints != tree.len() {
        return Err(Error::JointCount {
            expected: tree.len(),
            got: pos.joints,
        });
    }
    if pos.frames == 0 {
        return Ok(Vec::new());
    }
    let proj = Projection::fit(pos, cfg);
    Ok((0..pos.frames)
        .map(|t| {
            let mut img = Image::new(cfg.size, cfg.size);
            let frame = pos.frame(t);
            for (j, joint) in tree.joints().iter().enumerate() {
                if let Some(p) = joint.parent {
                    img.line(proj.project(&frame[p]), proj.project(&frame[j]), cfg.stroke);
                }
            }
            img
        })
        .collect())
}

/// Writes `frame_00000.bmp`, `frame_00001.bmp`, ... into `dir`.
pub fn write_frames(images: &[Image], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let path = dir.join(format!("frame_{i:05}.bmp"));
            std::fs::write(&path, img.to_bmp()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bmp_layout() {
        let mut img = Image::new(3, 2);
        img.pixels[0] = [1, 2, 3];
        let bmp = img.to_bmp();
        // 3 px * 3 bytes padded to 12 per row
        assert_eq!(bmp.len(), 54 + 24);
        assert_eq!(&bmp[..2], b"BM");
        // top-left pixel lands in the last row, stored as BGR
        assert_eq!(&bmp[54 + 12..54 + 15], &[3, 2, 1]);
    }

    #[test]
    fn line_endpoints_and_length() {
        let mut img = Image::new(10, 10);
        img.line((1, 1), (8, 1), 1);
        let inked: Vec<usize> = (0..10).filter(|&x| img.get(x, 1) == INK).collect();
        assert_eq!(inked, (1..=8).collect::<Vec<_>>());
        let mut img = Image::new(10, 10);
        img.line((2, 7), (5, 2), 1);
        assert_eq!(img.get(2, 7), INK);
        assert_eq!(img.get(5, 2), INK);
    }

    #[test]
    fn rejects_small_images() {
        let cfg = RenderConfig {
            size: 32,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
