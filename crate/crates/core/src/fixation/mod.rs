//! The acquire-process cycle: pick the most salient point, size and segment the
//! object under it, scan it, suppress it, repeat until the map is featureless.

mod scan;
mod segment;

pub use scan::{make_scan, scan_positions, PathKind, ScanSequence};
pub use segment::{
    component_at, estimate_extent, largest_component, otsu_threshold, refine_and_segment,
    scale_responses, Extent, Segment, EXTENT_RESPONSE_FRACTION,
};

use std::fmt;
use std::str::FromStr;

use image::RgbImage;

use crate::color::{rgb_to_lab, LabImage};
use crate::error::{Error, Result};
use crate::foveation::{foveate, FoveationParams};
use crate::grid::{BBox, Grid};
use crate::saliency::{lab_saliency, prepare_image, SaliencyMap, SaliencyParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Featureless,
    MaxFixations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Featureless => "featureless",
            StopReason::MaxFixations => "max_fixations",
        })
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "featureless" => Ok(StopReason::Featureless),
            "max_fixations" => Ok(StopReason::MaxFixations),
            other => Err(Error::invalid(format!("unknown stop reason `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixation {
    pub point: (usize, usize),
    /// Value of the inhibited map at selection time.
    pub saliency_value: f64,
    pub extent: BBox,
    pub scale_index: usize,
    /// No later fixation may land within this distance of `point`.
    pub fovea_radius: f64,
    /// Tight box of the segmented object.
    pub segment: BBox,
    pub segment_fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixationTrace {
    /// Forced start at the image center; not counted as a fixation.
    pub start: (usize, usize),
    pub fixations: Vec<Fixation>,
    /// Multiplicative suppression in `[0, 1]`.
    pub inhibition: Grid,
    pub stop_reason: StopReason,
}

impl FixationTrace {
    pub fn dims(&self) -> (usize, usize) {
        self.inhibition.dims()
    }

    /// Maps the trace onto an image of another size (pixel-center aligned).
    pub fn rescaled(&self, width: usize, height: usize) -> FixationTrace {
        let (w, h) = self.dims();
        let sx = width as f64 / w as f64;
        let sy = height as f64 / h as f64;
        let pt = |(x, y): (usize, usize)| {
            (
                (((x as f64 + 0.5) * sx - 0.5).round().max(0.0) as usize).min(width - 1),
                (((y as f64 + 0.5) * sy - 0.5).round().max(0.0) as usize).min(height - 1),
            )
        };
        let bx = |b: &BBox| {
            let s = b.scaled(sx, sy);
            BBox::new(s.x0, s.y0, s.x1.min(width), s.y1.min(height))
        };
        FixationTrace {
            start: pt(self.start),
            fixations: self
                .fixations
                .iter()
                .map(|f| Fixation {
                    point: pt(f.point),
                    extent: bx(&f.extent),
                    segment: bx(&f.segment),
                    fovea_radius: f.fovea_radius * sx.max(sy),
                    ..f.clone()
                })
                .collect(),
            inhibition: self.inhibition.resize_bilinear(width, height),
            stop_reason: self.stop_reason,
        }
    }
}

/// Per-fixation artifacts: the image patch, object mask and retina scan.
#[derive(Clone, Debug)]
pub struct Glimpse {
    pub patch: RgbImage,
    pub mask: Grid,
    pub scan: ScanSequence,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Featureless threshold on the normalized map.
    pub theta: f64,
    pub max_fixations: usize,
    pub path_kind: PathKind,
    pub frame_count: usize,
    pub frame_size: usize,
    /// Foveate at the start point and at every fixation when set.
    pub foveation: Option<FoveationParams>,
    pub saliency: SaliencyParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            theta: 0.2,
            max_fixations: 30,
            path_kind: PathKind::Zigzag,
            frame_count: 5,
            frame_size: 16,
            foveation: None,
            saliency: SaliencyParams::toronto(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid(format!("theta must be in (0, 1], got {}", self.theta)));
        }
        if self.frame_count == 0 || self.frame_size == 0 {
            return Err(Error::invalid("frame count and size must be positive"));
        }
        if let Some(f) = &self.foveation {
            f.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CycleResult {
    pub trace: FixationTrace,
    pub glimpses: Vec<Glimpse>,
    /// Bottom-up (or supplied) map the cycle ran on.
    pub map: SaliencyMap,
}

/// Argmax of `map * inhibition`, first in row-major order, if it reaches `theta`.
pub fn next_fixation(
    map: &SaliencyMap,
    inhibition: &Grid,
    theta: f64,
) -> Result<Option<((usize, usize), f64)>> {
    select(map, inhibition, theta, &[])
}

fn select(
    map: &SaliencyMap,
    inhibition: &Grid,
    theta: f64,
    visited: &[(usize, usize, f64)],
) -> Result<Option<((usize, usize), f64)>> {
    map.values().check_same_shape(inhibition)?;
    let (w, h) = inhibition.dims();
    let mut best: Option<((usize, usize), f64)> = None;
    for y in 0..h {
        for x in 0..w {
            let v = map.values().get(x, y) * inhibition.get(x, y);
            if best.is_some_and(|(_, b)| v <= b) {
                continue;
            }
            let near = visited.iter().any(|&(px, py, r)| {
                let d2 = (x as f64 - px as f64).powi(2) + (y as f64 - py as f64).powi(2);
                d2 <= r * r
            });
            if !near {
                best = Some(((x, y), v));
            }
        }
    }
    Ok(best.filter(|&(_, v)| v >= theta))
}

/// Multiplies the inhibition grid by an inverted Gaussian of amplitude
/// `saliency_value` and sigma `half_width / 2` centered on the fixation.
pub fn inhibit(inhibition: &mut Grid, point: (usize, usize), half_width: f64, saliency_value: f64) {
    let a = saliency_value.clamp(0.0, 1.0);
    let sigma = (half_width / 2.0).max(0.5);
    let (px, py) = (point.0 as f64, point.1 as f64);
    let (w, h) = inhibition.dims();
    for y in 0..h {
        for x in 0..w {
            let d2 = (x as f64 - px).powi(2) + (y as f64 - py).powi(2);
            let g = (-d2 / (2.0 * sigma * sigma)).exp();
            let v = inhibition.get(x, y) * (1.0 - a * g);
            inhibition.set(x, y, v.clamp(0.0, 1.0));
        }
    }
}

/// Runs the cycle on a bottom-up map computed from `image`.
pub fn run_cycle(image: &RgbImage, config: &EngineConfig) -> Result<CycleResult> {
    config.validate()?;
    let working = prepare_image(image, config.saliency.resize);
    let start = center_of(&working);
    let viewed = match &config.foveation {
        Some(p) => foveate(&working, start, p)?.to_rgb()?,
        None => working.clone(),
    };
    let map = lab_saliency(&rgb_to_lab(&viewed)?, &config.saliency)?;
    run_cycle_on_map(&working, map, config)
}

fn center_of(image: &RgbImage) -> (usize, usize) {
    ((image.width() as usize - 1) / 2, (image.height() as usize - 1) / 2)
}

/// Runs the cycle on a precomputed map aligned with `working`, which must
/// already be at the working resolution.
pub fn run_cycle_on_map(
    working: &RgbImage,
    map: SaliencyMap,
    config: &EngineConfig,
) -> Result<CycleResult> {
    config.validate()?;
    let (w, h) = (working.width() as usize, working.height() as usize);
    if map.values().dims() != (w, h) {
        return Err(Error::ShapeMismatch {
            expected: (w, h),
            found: map.values().dims(),
        });
    }
    let stack = &config.saliency.stack;
    let base_lab = rgb_to_lab(working)?;
    let mut inhibition = Grid::filled(w, h, 1.0);
    let mut visited: Vec<(usize, usize, f64)> = Vec::new();
    let mut fixations = Vec::new();
    let mut glimpses = Vec::new();
    let mut stop_reason = StopReason::Featureless;
    loop {
        if fixations.len() >= config.max_fixations {
            stop_reason = StopReason::MaxFixations;
            break;
        }
        let Some((point, value)) = select(&map, &inhibition, config.theta, &visited)? else {
            break;
        };
        let refocused: LabImage;
        let lab = match &config.foveation {
            Some(p) => {
                refocused = rgb_to_lab(&foveate(working, point, p)?.to_rgb()?)?;
                &refocused
            }
            None => &base_lab,
        };
        let extent = estimate_extent(lab, point, stack)?;
        let segment = refine_and_segment(lab, point, &extent.bbox, stack)?;
        let patch_box = segment
            .bbox
            .grown_to(config.frame_size, config.frame_size, w, h);
        let patch = image::imageops::crop_imm(
            working,
            patch_box.x0 as u32,
            patch_box.y0 as u32,
            patch_box.width() as u32,
            patch_box.height() as u32,
        )
        .to_image();
        let scan = make_scan(&patch, config.path_kind, config.frame_count, config.frame_size)?;
        inhibit(&mut inhibition, point, extent.radius, value);
        visited.push((point.0, point.1, extent.radius));
        fixations.push(Fixation {
            point,
            saliency_value: value,
            extent: extent.bbox,
            scale_index: extent.scale_index,
            fovea_radius: extent.radius,
            segment: segment.bbox,
            segment_fallback: segment.fallback,
        });
        glimpses.push(Glimpse {
            patch,
            mask: segment.mask,
            scan,
        });
    }
    Ok(CycleResult {
        trace: FixationTrace {
            start: center_of(working),
            fixations,
            inhibition,
            stop_reason,
        },
        glimpses,
        map,
    })
}
