//! Object extent from per-scale responses, and local re-saliency segmentation.

use std::collections::VecDeque;

use crate::color::LabImage;
use crate::convolve::{convolve_at, convolve_region};
use crate::error::{Error, Result};
use crate::grid::{BBox, Grid};
use crate::kernel::KernelStack;

/// A scale is selected once its response reaches this fraction of the strongest one.
pub const EXTENT_RESPONSE_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extent {
    pub bbox: BBox,
    pub scale_index: usize,
    /// Ring radius of the winning scale's surround, in pixels.
    pub radius: f64,
}

impl Extent {
    pub fn half_width(&self) -> usize {
        self.radius.round() as usize
    }
}

/// Mean absolute center-surround response of each scale at one pixel.
pub fn scale_responses(lab: &LabImage, point: (usize, usize), stack: &KernelStack) -> Result<Vec<f64>> {
    (0..stack.scales())
        .map(|s| {
            let k = stack.scale_kernel(s);
            let mut acc = 0.0;
            for c in lab.channels() {
                acc += convolve_at(c, &k, point.0, point.1)?.abs();
            }
            Ok(acc / 3.0)
        })
        .collect()
}

/// Smallest scale whose response is at least half the strongest one: an
/// object fills a scale's center until its edge reaches that scale's surround.
pub fn estimate_extent(lab: &LabImage, point: (usize, usize), stack: &KernelStack) -> Result<Extent> {
    let (w, h) = (lab.width(), lab.height());
    if point.0 >= w || point.1 >= h {
        return Err(Error::invalid(format!("point {point:?} outside {w}x{h} image")));
    }
    let responses = scale_responses(lab, point, stack)?;
    let max = responses.iter().copied().fold(0.0, f64::max);
    let scale_index = responses
        .iter()
        .position(|&r| r >= EXTENT_RESPONSE_FRACTION * max)
        .unwrap_or(0);
    let radius = stack.ring_radius(scale_index);
    Ok(Extent {
        bbox: BBox::around(point.0, point.1, radius.round() as usize, w, h),
        scale_index,
        radius,
    })
}

/// Otsu threshold over 256 bins spanning `[min, max]`.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    const BINS: usize = 256;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0usize; BINS];
    for &v in values {
        hist[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_var) = (0, -1.0);
    for (i, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1).powi(2);
        if var > best_var {
            best_var = var;
            best = i;
        }
    }
    Some(lo + (best + 1) as f64 * width)
}

/// 4-connected component of `mask` containing `seed`, as a 0/1 grid.
pub fn component_at(mask: &Grid, seed: (usize, usize)) -> Grid {
    let (w, h) = mask.dims();
    let mut out = Grid::zeros(w, h);
    if mask.get(seed.0, seed.1) == 0.0 {
        return out;
    }
    let mut queue = VecDeque::from([seed]);
    out.set(seed.0, seed.1, 1.0);
    while let Some((x, y)) = queue.pop_front() {
        let neighbors = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in neighbors {
            if nx < w && ny < h && mask.get(nx, ny) != 0.0 && out.get(nx, ny) == 0.0 {
                out.set(nx, ny, 1.0);
                queue.push_back((nx, ny));
            }
        }
    }
    out
}

/// Largest 4-connected component; ties go to the first in row-major order.
pub fn largest_component(mask: &Grid) -> Grid {
    let (w, h) = mask.dims();
    let mut seen = Grid::zeros(w, h);
    let mut best = (0.0, Grid::zeros(w, h));
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) != 0.0 && seen.get(x, y) == 0.0 {
                let c = component_at(mask, (x, y));
                let area = c.sum();
                for (s, v) in seen.data_mut().iter_mut().zip(c.data()) {
                    *s += v;
                }
                if area > best.0 {
                    best = (area, c);
                }
            }
        }
    }
    best.1
}

fn tight_box(mask: &Grid) -> Option<BBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) != 0.0 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    (x0 != usize::MAX).then(|| BBox::new(x0, y0, x1, y1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// Tight box of the segmented object, in image coordinates.
    pub bbox: BBox,
    /// Object mask over `bbox` (1 inside the object).
    pub mask: Grid,
    /// Local saliency over the extent box.
    pub local_map: Grid,
    /// True when thresholding failed and the extent box was used as is.
    pub fallback: bool,
}

/// Recomputes raw saliency over the extent with the finer scales only,
/// thresholds it with Otsu and keeps the component under the fixation.
pub fn refine_and_segment(
    lab: &LabImage,
    point: (usize, usize),
    extent: &BBox,
    stack: &KernelStack,
) -> Result<Segment> {
    if extent.is_empty() || !extent.contains(point.0, point.1) {
        return Err(Error::invalid(format!(
            "extent {extent:?} must be non-empty and contain {point:?}"
        )));
    }
    let local_stack = stack.without_largest_scale()?;
    let mut local = Grid::zeros(extent.width(), extent.height());
    for c in lab.channels() {
        let r = convolve_region(c, local_stack.realized(), extent)?;
        for (o, v) in local.data_mut().iter_mut().zip(r.data()) {
            *o += v.abs() / 3.0;
        }
    }
    let fallback = || Segment {
        bbox: *extent,
        mask: Grid::filled(extent.width(), extent.height(), 1.0),
        local_map: local.clone(),
        fallback: true,
    };
    let floor = 1e-6 * lab.magnitude().max(1.0);
    if local.max() <= floor {
        return Ok(fallback());
    }
    let Some(t) = otsu_threshold(local.data()) else {
        return Ok(fallback());
    };
    let mask = local.map(|v| if v >= t { 1.0 } else { 0.0 });
    let seed = (point.0 - extent.x0, point.1 - extent.y0);
    let mut component = component_at(&mask, seed);
    if component.sum() == 0.0 {
        component = largest_component(&mask);
    }
    let Some(b) = tight_box(&component) else {
        return Ok(fallback());
    };
    Ok(Segment {
        bbox: BBox::new(extent.x0 + b.x0, extent.y0 + b.y0, extent.x0 + b.x1, extent.y0 + b.y1),
        mask: component.crop(&b),
        local_map: local,
        fallback: false,
    })
}
