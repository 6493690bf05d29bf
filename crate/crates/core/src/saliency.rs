//! Bottom-up saliency: Lab channels convolved with a multiscale gamma kernel,
//! fused by mean absolute response, then sharpened, center-weighted and blurred.

use std::time::{Duration, Instant};

use image::imageops::FilterType;
use image::RgbImage;
use rayon::prelude::*;

use crate::color::{rgb_to_lab, LabImage};
use crate::convolve::{convolve_all, convolve_strided, ConvolutionMethod};
use crate::error::{Error, Result};
use crate::grid::{gaussian_blur, lerp, Grid};
use crate::kernel::{KernelStack, TORONTO_ORDERS, TORONTO_SHAPES};

/// Responses below this fraction of the input magnitude are numerical residue
/// of a constant neighborhood and are set to exactly zero.
const RESIDUE_FLOOR: f64 = 1e-9;

/// Working resolution the default blur sigma is expressed at.
pub const REFERENCE_MIN_SIDE: f64 = 128.0;

/// Non-negative saliency values aligned to an image.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    values: Grid,
    post_processed: bool,
}

impl SaliencyMap {
    pub fn new(values: Grid, post_processed: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("saliency map is empty"));
        }
        if let Some(v) = values.data().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!(
                "saliency values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            values,
            post_processed,
        })
    }

    pub fn values(&self) -> &Grid {
        &self.values
    }

    pub fn into_values(self) -> Grid {
        self.values
    }

    pub fn post_processed(&self) -> bool {
        self.post_processed
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Location of the maximum. Ties go to the pixel nearest the map center,
    /// so a featureless map peaks at its center.
    pub fn peak(&self) -> (usize, usize) {
        let max = self.values.max();
        let cx = (self.width() as f64 - 1.0) / 2.0;
        let cy = (self.height() as f64 - 1.0) / 2.0;
        let mut best = (0, 0, f64::INFINITY);
        for y in 0..self.height() {
            for x in 0..self.width() {
                if self.values.get(x, y) == max {
                    let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    if d < best.2 {
                        best = (x, y, d);
                    }
                }
            }
        }
        (best.0, best.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostProcessParams {
    pub alpha: f64,
    pub center_sigma: f64,
    pub blur_sigma: f64,
}

impl PostProcessParams {
    pub fn new(alpha: f64, center_sigma: f64, blur_sigma: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
        }
        if !(center_sigma > 0.0) || !(blur_sigma > 0.0) {
            return Err(Error::invalid(format!(
                "post-processing sigmas must be positive, got center {center_sigma}, blur {blur_sigma}"
            )));
        }
        Ok(Self {
            alpha,
            center_sigma,
            blur_sigma,
        })
    }

    /// Sigmas derived from the map size: the center bias scales with the short
    /// side, the blur is `blur_ref` pixels at a 128-pixel short side.
    pub fn for_size(
        alpha: f64,
        center_fraction: f64,
        blur_ref: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let short = width.min(height) as f64;
        Self::new(alpha, center_fraction * short, blur_ref * short / REFERENCE_MIN_SIDE)
    }
}

/// Everything needed to go from an RGB image to a post-processed map.
#[derive(Clone, Debug)]
pub struct SaliencyParams {
    pub stack: KernelStack,
    pub alpha: f64,
    /// Center-bias sigma as a fraction of the short image side.
    pub center_sigma_fraction: f64,
    /// Final blur sigma in pixels at a 128-pixel short side.
    pub blur_sigma_ref: f64,
    /// Working resolution as `(width, height)`; `None` keeps the input size.
    pub resize: Option<(usize, usize)>,
    pub stride: usize,
    pub method: ConvolutionMethod,
}

impl SaliencyParams {
    /// Three-scale free-viewing setup: alpha 5, images resized to 171x128.
    pub fn toronto() -> Self {
        Self {
            stack: KernelStack::from_params(&TORONTO_ORDERS, &TORONTO_SHAPES, None)
                .expect("built-in kernel parameters are valid"),
            alpha: 5.0,
            center_sigma_fraction: 0.25,
            blur_sigma_ref: 0.5,
            resize: Some((171, 128)),
            stride: 1,
            method: ConvolutionMethod::Auto,
        }
    }

    pub fn post_params(&self, width: usize, height: usize) -> Result<PostProcessParams> {
        PostProcessParams::for_size(
            self.alpha,
            self.center_sigma_fraction,
            self.blur_sigma_ref,
            width,
            height,
        )
    }
}

/// Wall-clock time spent in each stage of [`compute_saliency_timed`].
#[derive(Clone, Copy, Debug, Default)]
pub struct StageTimes {
    pub colorspace: Duration,
    pub convolution: Duration,
    pub post_process: Duration,
}

impl StageTimes {
    pub fn total(&self) -> Duration {
        self.colorspace + self.convolution + self.post_process
    }
}

pub(crate) fn check_kernel_fits(stack: &KernelStack, width: usize, height: usize) -> Result<()> {
    if stack.radius() > width.min(height) {
        return Err(Error::KernelTooLarge {
            radius: stack.radius(),
            width,
            height,
        });
    }
    Ok(())
}

/// Raw saliency: mean absolute response of the three Lab channels.
pub fn channel_saliency(
    lab: &LabImage,
    stack: &KernelStack,
    stride: usize,
    method: ConvolutionMethod,
) -> Result<SaliencyMap> {
    let (w, h) = (lab.width(), lab.height());
    check_kernel_fits(stack, w, h)?;
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    let channels = lab.channels();
    let responses = if stride == 1 {
        convolve_all(&channels, stack.realized(), method)?
    } else {
        channels
            .par_iter()
            .map(|c| {
                convolve_strided(c, stack.realized(), stride).map(|g| upsample_lattice(&g, stride, w, h))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let floor = RESIDUE_FLOOR * lab.magnitude();
    // fixed L, a, b summation order keeps the result independent of scheduling
    let mut out = Grid::zeros(w, h);
    for (i, o) in out.data_mut().iter_mut().enumerate() {
        let s = (responses[0].data()[i].abs()
            + responses[1].data()[i].abs()
            + responses[2].data()[i].abs())
            / 3.0;
        *o = if s <= floor { 0.0 } else { s };
    }
    SaliencyMap::new(out, false)
}

/// Bilinear interpolation of samples taken at every `stride`-th pixel back to `width x height`.
fn upsample_lattice(samples: &Grid, stride: usize, width: usize, height: usize) -> Grid {
    let coord = |p: usize, n: usize| {
        let pos = (p as f64 / stride as f64).min((n - 1) as f64);
        let i0 = pos.floor() as usize;
        (i0, (i0 + 1).min(n - 1), pos - i0 as f64)
    };
    Grid::from_fn(width, height, |x, y| {
        let (x0, x1, tx) = coord(x, samples.width());
        let (y0, y1, ty) = coord(y, samples.height());
        let top = lerp(samples.get(x0, y0), samples.get(x1, y0), tx);
        let bottom = lerp(samples.get(x0, y1), samples.get(x1, y1), tx);
        lerp(top, bottom, ty)
    })
}

/// Centered isotropic Gaussian weight, 1 at the image center.
pub fn center_weight(width: usize, height: usize, sigma: f64) -> Grid {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    Grid::from_fn(width, height, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
}

/// `blur(raw^alpha * center_weight)`, then scaled so the maximum is 1.
pub fn post_process(raw: &SaliencyMap, params: &PostProcessParams) -> Result<SaliencyMap> {
    if raw.post_processed {
        return Err(Error::invalid("map is already post-processed"));
    }
    let params = PostProcessParams::new(params.alpha, params.center_sigma, params.blur_sigma)?;
    let (w, h) = raw.values.dims();
    let weight = center_weight(w, h, params.center_sigma);
    let weighted = raw
        .values
        .zip_map(&weight, |s, g| s.powf(params.alpha) * g)?;
    let blurred = gaussian_blur(&weighted, params.blur_sigma);
    SaliencyMap::new(blurred.normalized_by_max().map(|v| v.max(0.0)), true)
}

/// Resizes to the working resolution when one is configured.
pub fn prepare_image(image: &RgbImage, resize: Option<(usize, usize)>) -> RgbImage {
    match resize {
        Some((w, h)) if (w as u32, h as u32) != image.dimensions() => {
            image::imageops::resize(image, w as u32, h as u32, FilterType::Triangle)
        }
        _ => image.clone(),
    }
}

pub fn compute_saliency(image: &RgbImage, params: &SaliencyParams) -> Result<SaliencyMap> {
    compute_saliency_timed(image, params).map(|(m, _)| m)
}

pub fn compute_saliency_timed(
    image: &RgbImage,
    params: &SaliencyParams,
) -> Result<(SaliencyMap, StageTimes)> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::invalid("cannot compute saliency of an empty image"));
    }
    let t0 = Instant::now();
    let working = prepare_image(image, params.resize);
    let lab = rgb_to_lab(&working)?;
    let t1 = Instant::now();
    let raw = channel_saliency(&lab, &params.stack, params.stride, params.method)?;
    let t2 = Instant::now();
    let post = params.post_params(lab.width(), lab.height())?;
    let map = post_process(&raw, &post)?;
    let t3 = Instant::now();
    Ok((
        map,
        StageTimes {
            colorspace: t1 - t0,
            convolution: t2 - t1,
            post_process: t3 - t2,
        },
    ))
}

/// Bottom-up saliency of an already converted Lab image (no resizing).
pub fn lab_saliency(lab: &LabImage, params: &SaliencyParams) -> Result<SaliencyMap> {
    let raw = channel_saliency(lab, &params.stack, params.stride, params.method)?;
    post_process(&raw, &params.post_params(lab.width(), lab.height())?)
}
