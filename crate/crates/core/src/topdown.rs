//! Class-conditioned saliency from external feature maps, with weights learned
//! from labeled boxes and multiplicative fusion with bottom-up saliency.

use std::collections::BTreeMap;

use image::RgbImage;
use rayon::prelude::*;

use crate::color::rgb_to_lab;
use crate::convolve::{convolve_all, ConvolutionMethod};
use crate::error::{Error, Result};
use crate::fixation::{run_cycle_on_map, CycleResult, EngineConfig};
use crate::foveation::foveate;
use crate::grid::{BBox, Grid};
use crate::kernel::{build_multiscale, GammaKernelSpec, KernelStack};
use crate::metrics::iou;
use crate::saliency::{
    check_kernel_fits, lab_saliency, post_process, prepare_image, PostProcessParams, SaliencyMap,
};

/// `N` feature maps of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMapStack {
    maps: Vec<Grid>,
    pub source_tag: String,
    /// Image pixels per feature-grid pixel.
    pub spatial_scale: f64,
}

impl FeatureMapStack {
    pub fn new(maps: Vec<Grid>, source_tag: impl Into<String>, spatial_scale: f64) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::invalid("feature stack needs at least one map"))?;
        if first.is_empty() {
            return Err(Error::invalid("feature maps are empty"));
        }
        for m in &maps {
            first.check_same_shape(m)?;
            if m.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("feature maps must be finite"));
            }
        }
        if !(spatial_scale > 0.0 && spatial_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "spatial scale must be positive, got {spatial_scale}"
            )));
        }
        Ok(Self {
            maps,
            source_tag: source_tag.into(),
            spatial_scale,
        })
    }

    pub fn maps(&self) -> &[Grid] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Feature-grid size, `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].dims()
    }

    /// Image size implied by the spatial scale.
    pub fn image_dims(&self) -> (usize, usize) {
        let (w, h) = self.dims();
        (
            (w as f64 * self.spatial_scale).round() as usize,
            (h as f64 * self.spatial_scale).round() as usize,
        )
    }
}

/// A class-labeled box in feature-grid coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledBox {
    pub image_id: String,
    pub class_id: String,
    pub bbox: BBox,
}

#[derive(Clone, Debug)]
pub struct TopDownModel {
    pub classes: Vec<String>,
    /// One row per class, one column per feature map.
    pub weights: Vec<Vec<f64>>,
    pub alpha: f64,
    pub stack: KernelStack,
}

impl TopDownModel {
    pub fn new(
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        alpha: f64,
        stack: KernelStack,
    ) -> Result<Self> {
        if classes.is_empty() || classes.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} classes but {} weight rows",
                classes.len(),
                weights.len()
            )));
        }
        let n = weights[0].len();
        for (c, row) in classes.iter().zip(&weights) {
            if row.len() != n || n == 0 {
                return Err(Error::invalid(format!("class `{c}` has {} weights, expected {n}", row.len())));
            }
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::invalid(format!("class `{c}` has a negative or non-finite weight")));
            }
            if !row.iter().any(|&w| w > 0.0) {
                return Err(Error::invalid(format!("class `{c}` has no positive weight")));
            }
        }
        let mut seen = classes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != classes.len() {
            return Err(Error::invalid("duplicate class ids"));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
        }
        Ok(Self {
            classes,
            weights,
            alpha,
            stack,
        })
    }

    pub fn map_count(&self) -> usize {
        self.weights[0].len()
    }

    pub fn class_weights(&self, class_id: &str) -> Result<&[f64]> {
        self.classes
            .iter()
            .position(|c| c == class_id)
            .map(|i| self.weights[i].as_slice())
            .ok_or_else(|| Error::UnknownClass(class_id.to_string()))
    }

    /// Rebuilds the kernel stack from per-spec `(order, shape, support)` triples.
    pub fn stack_from_specs(specs: &[(u32, f64, usize)]) -> Result<KernelStack> {
        let specs = specs
            .iter()
            .map(|&(k, mu, r)| GammaKernelSpec::new(k, mu, r))
            .collect::<Result<Vec<_>>>()?;
        build_multiscale(&specs)
    }
}

/// `|g * C_n|^alpha` for every map.
pub fn raw_map_saliency(stack: &FeatureMapStack, kernel: &KernelStack, alpha: f64) -> Result<Vec<Grid>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let (w, h) = stack.dims();
    check_kernel_fits(kernel, w, h)?;
    let refs: Vec<&Grid> = stack.maps.iter().collect();
    Ok(convolve_all(&refs, kernel.realized(), ConvolutionMethod::Auto)?
        .into_iter()
        .map(|g| g.map(|v| v.abs().powf(alpha)))
        .collect())
}

fn check_box(b: &LabeledBox, (w, h): (usize, usize)) -> Result<()> {
    if b.bbox.is_empty() || b.bbox.x1 > w || b.bbox.y1 > h {
        return Err(Error::invalid(format!(
            "box {:?} of `{}` is empty or outside the {w}x{h} feature grid",
            b.bbox, b.image_id
        )));
    }
    if b.bbox.area() == w * h {
        return Err(Error::invalid(format!(
            "box of `{}` covers the whole grid, leaving no outside region",
            b.image_id
        )));
    }
    Ok(())
}

/// Mean inside the box and mean over the rest of the grid.
fn inside_outside(g: &Grid, b: &BBox) -> (f64, f64) {
    let (mut inside, mut outside) = (0.0, 0.0);
    for y in 0..g.height() {
        for x in 0..g.width() {
            if b.contains(x, y) {
                inside += g.get(x, y);
            } else {
                outside += g.get(x, y);
            }
        }
    }
    let n_in = b.area() as f64;
    let n_out = (g.width() * g.height()) as f64 - n_in;
    (inside / n_in, outside / n_out)
}

/// Terms whose outside saliency was zero and used the epsilon floor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingReport {
    /// `(sample index, map index)` pairs.
    pub floored: Vec<(usize, usize)>,
}

/// Outside means of zero are replaced by this fraction of the map's maximum.
pub const OUTSIDE_FLOOR: f64 = 1e-6;

/// Per-class mean over training samples of inside-mean / outside-mean raw saliency.
pub fn learn_weights(
    samples: &[(&FeatureMapStack, &LabeledBox)],
    kernel: &KernelStack,
    alpha: f64,
) -> Result<(TopDownModel, TrainingReport)> {
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    let n = samples[0].0.len();
    for (stack, b) in samples {
        if stack.len() != n {
            return Err(Error::invalid(format!(
                "`{}` has {} feature maps, expected {n}",
                b.image_id,
                stack.len()
            )));
        }
        check_box(b, stack.dims())?;
    }
    let per_sample: Vec<(Vec<f64>, Vec<usize>)> = samples
        .par_iter()
        .map(|(stack, b)| {
            let raw = raw_map_saliency(stack, kernel, alpha)?;
            let mut ratios = Vec::with_capacity(n);
            let mut floored = Vec::new();
            for (i, g) in raw.iter().enumerate() {
                let (inside, mut outside) = inside_outside(g, &b.bbox);
                if outside <= 0.0 {
                    outside = OUTSIDE_FLOOR * g.max();
                    floored.push(i);
                }
                ratios.push(if inside > 0.0 { inside / outside } else { 0.0 });
            }
            Ok((ratios, floored))
        })
        .collect::<Result<_>>()?;
    // sums are accumulated in sample order so the result does not depend on scheduling
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    let mut report = TrainingReport::default();
    for (i, ((_, b), (ratios, floored))) in samples.iter().zip(&per_sample).enumerate() {
        let entry = sums
            .entry(b.class_id.as_str())
            .or_insert_with(|| (vec![0.0; n], 0));
        for (s, r) in entry.0.iter_mut().zip(ratios) {
            *s += r;
        }
        entry.1 += 1;
        report.floored.extend(floored.iter().map(|&m| (i, m)));
    }
    let (classes, weights) = sums
        .into_iter()
        .map(|(c, (s, count))| (c.to_string(), s.into_iter().map(|v| v / count as f64).collect()))
        .unzip();
    Ok((TopDownModel::new(classes, weights, alpha, kernel.clone())?, report))
}

/// Weighted mean of the per-map saliencies for one class, post-processed on the
/// feature grid and resampled to `dims` (`None` uses the stack's image size).
pub fn topdown_map(
    stack: &FeatureMapStack,
    model: &TopDownModel,
    class_id: &str,
    dims: Option<(usize, usize)>,
) -> Result<SaliencyMap> {
    let weights = model.class_weights(class_id)?;
    if weights.len() != stack.len() {
        return Err(Error::invalid(format!(
            "model expects {} feature maps, stack has {}",
            weights.len(),
            stack.len()
        )));
    }
    let raw = raw_map_saliency(stack, &model.stack, model.alpha)?;
    let (w, h) = stack.dims();
    let mut acc = Grid::zeros(w, h);
    for (g, &wn) in raw.iter().zip(weights) {
        for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
            *a += wn * v;
        }
    }
    let n = stack.len() as f64;
    let acc = acc.map(|v| v / n);
    // the exponent was already applied per map, so the chain runs with alpha 1
    let post = PostProcessParams::for_size(1.0, 0.25, 0.5, w, h)?;
    let map = post_process(&SaliencyMap::new(acc, false)?, &post)?;
    let (tw, th) = dims.unwrap_or_else(|| stack.image_dims());
    let resized = map.into_values().resize_bilinear(tw, th).normalized_by_max();
    SaliencyMap::new(resized.map(|v| v.max(0.0)), true)
}

/// Elementwise product, rescaled to a maximum of 1.
pub fn fuse(bottom_up: &SaliencyMap, top_down: &SaliencyMap) -> Result<SaliencyMap> {
    let product = bottom_up
        .values()
        .zip_map(top_down.values(), |a, b| a * b)?;
    SaliencyMap::new(product.normalized_by_max(), true)
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub cycle: CycleResult,
    /// Fixations up to and including the first one on the target, or
    /// `max_fixations` when the target was never found.
    pub saccades: usize,
    pub found: bool,
    /// Target box at the working resolution.
    pub target: BBox,
}

/// IoU a fixation's segment must exceed to count as finding the target.
pub const FOUND_IOU: f64 = 0.5;

fn bottom_up_map(working: &RgbImage, config: &EngineConfig) -> Result<SaliencyMap> {
    let viewed = match &config.foveation {
        Some(p) => {
            let c = ((working.width() as usize - 1) / 2, (working.height() as usize - 1) / 2);
            foveate(working, c, p)?.to_rgb()?
        }
        None => working.clone(),
    };
    lab_saliency(&rgb_to_lab(&viewed)?, &config.saliency)
}

fn score(cycle: CycleResult, target: BBox, max_fixations: usize) -> SearchOutcome {
    let hit = cycle
        .trace
        .fixations
        .iter()
        .position(|f| iou(&f.segment, &target) > FOUND_IOU);
    SearchOutcome {
        saccades: hit.map_or(max_fixations, |i| i + 1),
        found: hit.is_some(),
        cycle,
        target,
    }
}

fn working_target(image: &RgbImage, working: &RgbImage, target: &BBox) -> BBox {
    let sx = working.width() as f64 / image.width() as f64;
    let sy = working.height() as f64 / image.height() as f64;
    let b = target.scaled(sx, sy);
    BBox::new(b.x0, b.y0, b.x1.min(working.width() as usize), b.y1.min(working.height() as usize))
}

/// Fixation cycle on the fused bottom-up and top-down map. `target` is in
/// image pixels.
pub fn search(
    image: &RgbImage,
    features: &FeatureMapStack,
    model: &TopDownModel,
    class_id: &str,
    target: &BBox,
    config: &EngineConfig,
) -> Result<SearchOutcome> {
    let working = prepare_image(image, config.saliency.resize);
    let dims = (working.width() as usize, working.height() as usize);
    let td = topdown_map(features, model, class_id, Some(dims))?;
    let bu = bottom_up_map(&working, config)?;
    let fused = fuse(&bu, &td)?;
    let cycle = run_cycle_on_map(&working, fused, config)?;
    Ok(score(cycle, working_target(image, &working, target), config.max_fixations))
}

/// The same search driven by bottom-up saliency alone.
pub fn bottom_up_search(image: &RgbImage, target: &BBox, config: &EngineConfig) -> Result<SearchOutcome> {
    let working = prepare_image(image, config.saliency.resize);
    let bu = bottom_up_map(&working, config)?;
    let cycle = run_cycle_on_map(&working, bu, config)?;
    Ok(score(cycle, working_target(image, &working, target), config.max_fixations))
}

/// Default kernel for naturalistic feature maps.
pub fn naturalistic_stack() -> Result<KernelStack> {
    use crate::kernel::{NATURALISTIC_ORDERS, NATURALISTIC_SHAPES, NATURALISTIC_SUPPORT};
    KernelStack::from_params(&NATURALISTIC_ORDERS, &NATURALISTIC_SHAPES, Some(NATURALISTIC_SUPPORT))
}
