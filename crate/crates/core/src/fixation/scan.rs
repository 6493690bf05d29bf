//! Fixed-size retina frames scanned over a patch.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use image::RgbImage;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PathKind {
    Circular,
    #[default]
    Zigzag,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Circular => "circular",
            PathKind::Zigzag => "zigzag",
        })
    }
}

impl FromStr for PathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circular" => Ok(PathKind::Circular),
            "zigzag" => Ok(PathKind::Zigzag),
            other => Err(Error::invalid(format!("unknown scan path `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSequence {
    pub frames: Vec<RgbImage>,
    /// Frame centers in patch coordinates.
    pub centers: Vec<(f64, f64)>,
    pub path_kind: PathKind,
    pub frame_size: usize,
}

impl ScanSequence {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

fn spaced(count: usize, span: usize) -> Vec<usize> {
    if count == 1 {
        return vec![span / 2];
    }
    (0..count)
        .map(|i| (i as f64 * span as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Frame top-left corners along the path.
pub fn scan_positions(
    width: usize,
    height: usize,
    kind: PathKind,
    count: usize,
    frame_size: usize,
) -> Result<Vec<(usize, usize)>> {
    if count == 0 || frame_size == 0 {
        return Err(Error::invalid("scan needs at least one frame of positive size"));
    }
    if frame_size > width || frame_size > height {
        return Err(Error::invalid(format!(
            "frame {frame_size}px larger than {width}x{height} patch"
        )));
    }
    let (sx, sy) = (width - frame_size, height - frame_size);
    Ok(match kind {
        PathKind::Zigzag => {
            let rows = (count as f64).sqrt().ceil() as usize;
            let cols = count.div_ceil(rows);
            let xs = spaced(cols, sx);
            let ys = spaced(rows, sy);
            (0..count).map(|i| (xs[i % cols], ys[i / cols])).collect()
        }
        PathKind::Circular => {
            let (cx, cy) = (sx as f64 / 2.0, sy as f64 / 2.0);
            let radius = cx.min(cy);
            (0..count)
                .map(|i| {
                    let t = TAU * i as f64 / count as f64;
                    let x = (cx + radius * t.cos()).round().clamp(0.0, sx as f64);
                    let y = (cy + radius * t.sin()).round().clamp(0.0, sy as f64);
                    (x as usize, y as usize)
                })
                .collect()
        }
    })
}

pub fn make_scan(
    patch: &RgbImage,
    kind: PathKind,
    count: usize,
    frame_size: usize,
) -> Result<ScanSequence> {
    let (w, h) = (patch.width() as usize, patch.height() as usize);
    let positions = scan_positions(w, h, kind, count, frame_size)?;
    let half = (frame_size as f64 - 1.0) / 2.0;
    let f = frame_size as u32;
    Ok(ScanSequence {
        frames: positions
            .iter()
            .map(|&(x, y)| image::imageops::crop_imm(patch, x as u32, y as u32, f, f).to_image())
            .collect(),
        centers: positions
            .iter()
            .map(|&(x, y)| (x as f64 + half, y as f64 + half))
            .collect(),
        path_kind: kind,
        frame_size,
    })
}
