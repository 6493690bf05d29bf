//! Foveated images: a blur-and-halve pyramid blended by distance from a fixation.

use std::f64::consts::FRAC_PI_2;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::{separable_filter, Grid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoveationParams {
    pub levels: usize,
    pub blur_kernel_side: usize,
    /// Fovea radius in pixels; each further `resolution` pixels of
    /// eccentricity moves the blend one pyramid level coarser.
    pub resolution: f64,
}

impl Default for FoveationParams {
    fn default() -> Self {
        Self {
            levels: 6,
            blur_kernel_side: 3,
            resolution: 32.0,
        }
    }
}

impl FoveationParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.levels) {
            return Err(Error::invalid(format!(
                "pyramid levels must be in [2, 8], got {}",
                self.levels
            )));
        }
        if self.blur_kernel_side < 3 || self.blur_kernel_side % 2 == 0 {
            return Err(Error::invalid(format!(
                "blur kernel side must be odd and >= 3, got {}",
                self.blur_kernel_side
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::invalid(format!(
                "foveation resolution must be positive, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

/// Normalized binomial filter, e.g. `[1, 2, 1] / 4` for side 3.
pub fn binomial_kernel(side: usize) -> Vec<f64> {
    let mut k = vec![1.0];
    for _ in 1..side {
        let mut next = vec![1.0; k.len() + 1];
        for i in 1..k.len() {
            next[i] = k[i - 1] + k[i];
        }
        k = next;
    }
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn decimate(g: &Grid) -> Grid {
    Grid::from_fn(g.width().div_ceil(2), g.height().div_ceil(2), |x, y| {
        g.get(2 * x, 2 * y)
    })
}

/// One pyramid level, resampled back to the source size for blending.
#[derive(Clone, Debug)]
pub struct PyramidLevel {
    /// Size of the level before upsampling, `(width, height)`.
    pub native_dims: (usize, usize),
    pub planes: Vec<Grid>,
}

/// Level 0 is the source; every next level blurs and halves the previous one.
pub fn build_pyramid(planes: &[Grid], params: &FoveationParams) -> Result<Vec<PyramidLevel>> {
    params.validate()?;
    let first = planes
        .first()
        .ok_or_else(|| Error::invalid("image has no channels"))?;
    for p in planes {
        first.check_same_shape(p)?;
    }
    let (w, h) = first.dims();
    if w.min(h) < 1 << params.levels {
        return Err(Error::invalid(format!(
            "image {w}x{h} too small for a {}-level pyramid (needs {} px per side)",
            params.levels,
            1usize << params.levels
        )));
    }
    let k = binomial_kernel(params.blur_kernel_side);
    let mut native: Vec<Grid> = planes.to_vec();
    let mut out = vec![PyramidLevel {
        native_dims: (w, h),
        planes: native.clone(),
    }];
    for _ in 1..params.levels {
        native = native
            .iter()
            .map(|g| decimate(&separable_filter(g, &k)))
            .collect();
        out.push(PyramidLevel {
            native_dims: native[0].dims(),
            planes: native.iter().map(|g| g.resize_bilinear(w, h)).collect(),
        });
    }
    Ok(out)
}

/// Blend weights for one eccentricity: raised-cosine bumps one `resolution`
/// apart, so at most two adjacent levels are active and they sum to one.
pub fn blend_weights(eccentricity: f64, params: &FoveationParams) -> Vec<f64> {
    let mut w = vec![0.0; params.levels];
    let (i, t) = level_position(eccentricity, params);
    let c = (FRAC_PI_2 * t).cos().powi(2);
    w[i] = c;
    if i + 1 < params.levels {
        w[i + 1] = 1.0 - c;
    }
    w
}

fn level_position(eccentricity: f64, params: &FoveationParams) -> (usize, f64) {
    let top = (params.levels - 1) as f64;
    let p = (eccentricity / params.resolution - 1.0).clamp(0.0, top);
    if !p.is_finite() {
        return (0, 0.0);
    }
    let i = p.floor();
    if i >= top {
        (params.levels - 1, 0.0)
    } else {
        (i as usize, p - i)
    }
}

#[derive(Clone, Debug)]
pub struct FoveatedImage {
    pub planes: Vec<Grid>,
    pub fixation: (usize, usize),
    pub params: FoveationParams,
}

impl FoveatedImage {
    /// Rounds the planes back to 8 bits; needs three planes.
    pub fn to_rgb(&self) -> Result<RgbImage> {
        let [r, g, b] = self.planes.as_slice() else {
            return Err(Error::invalid(format!(
                "expected 3 planes for RGB output, found {}",
                self.planes.len()
            )));
        };
        let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        Ok(RgbImage::from_fn(r.width() as u32, r.height() as u32, |x, y| {
            let (x, y) = (x as usize, y as usize);
            Rgb([q(r.get(x, y)), q(g.get(x, y)), q(b.get(x, y))])
        }))
    }
}

pub fn rgb_planes(image: &RgbImage) -> Vec<Grid> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    (0..3)
        .map(|c| Grid::from_fn(w, h, |x, y| image.get_pixel(x as u32, y as u32).0[c] as f64))
        .collect()
}

pub fn foveate_planes(
    planes: &[Grid],
    fixation: (usize, usize),
    params: &FoveationParams,
) -> Result<FoveatedImage> {
    let first = planes
        .first()
        .ok_or_else(|| Error::invalid("image has no channels"))?;
    if !first.contains(fixation.0, fixation.1) {
        return Err(Error::invalid(format!(
            "fixation {fixation:?} outside {}x{} image",
            first.width(),
            first.height()
        )));
    }
    let pyramid = build_pyramid(planes, params)?;
    let (w, h) = first.dims();
    let (fx, fy) = (fixation.0 as f64, fixation.1 as f64);
    let out = (0..planes.len())
        .map(|c| {
            Grid::from_fn(w, h, |x, y| {
                let e = ((x as f64 - fx).powi(2) + (y as f64 - fy).powi(2)).sqrt();
                let (i, t) = level_position(e, params);
                let lo = pyramid[i].planes[c].get(x, y);
                if t == 0.0 {
                    return lo;
                }
                let wlo = (FRAC_PI_2 * t).cos().powi(2);
                let hi = pyramid[i + 1].planes[c].get(x, y);
                wlo * lo + (1.0 - wlo) * hi
            })
        })
        .collect();
    Ok(FoveatedImage {
        planes: out,
        fixation,
        params: *params,
    })
}

pub fn foveate(
    image: &RgbImage,
    fixation: (usize, usize),
    params: &FoveationParams,
) -> Result<FoveatedImage> {
    foveate_planes(&rgb_planes(image), fixation, params)
}
