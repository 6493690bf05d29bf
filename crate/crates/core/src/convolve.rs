//! 2D convolution with replicate-edge borders: an FFT path and a direct spatial path.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{BBox, Grid};

/// Kernels with a side above this many pixels go through the FFT when the
/// method is [`ConvolutionMethod::Auto`].
pub const FFT_MIN_KERNEL_SIDE: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionMethod {
    #[default]
    Auto,
    Fft,
    Direct,
}

impl ConvolutionMethod {
    fn resolve(self, kernel_side: usize) -> ConvolutionMethod {
        match self {
            ConvolutionMethod::Auto if kernel_side >= FFT_MIN_KERNEL_SIDE => ConvolutionMethod::Fft,
            ConvolutionMethod::Auto => ConvolutionMethod::Direct,
            m => m,
        }
    }
}

fn check_kernel(kernel: &Grid) -> Result<usize> {
    let (kw, kh) = kernel.dims();
    if kw != kh || kw % 2 == 0 {
        return Err(Error::invalid(format!(
            "convolution kernel must be square with odd side, got {kw}x{kh}"
        )));
    }
    Ok(kw / 2)
}

/// Convolves every image with the same kernel. All images must share a shape.
pub fn convolve_all(images: &[&Grid], kernel: &Grid, method: ConvolutionMethod) -> Result<Vec<Grid>> {
    let radius = check_kernel(kernel)?;
    let Some(first) = images.first() else {
        return Ok(Vec::new());
    };
    for img in images {
        first.check_same_shape(img)?;
    }
    match method.resolve(kernel.width()) {
        ConvolutionMethod::Fft => {
            let conv = FftConvolver::new(kernel, first.width(), first.height())?;
            Ok(images.par_iter().map(|img| conv.apply(img)).collect())
        }
        _ => Ok(images
            .par_iter()
            .map(|img| direct(img, kernel, radius, 1))
            .collect()),
    }
}

pub fn convolve(image: &Grid, kernel: &Grid, method: ConvolutionMethod) -> Result<Grid> {
    Ok(convolve_all(&[image], kernel, method)?.remove(0))
}

/// Direct convolution evaluated only on every `stride`-th row and column.
/// The result has `ceil(w / stride) x ceil(h / stride)` samples.
pub fn convolve_strided(image: &Grid, kernel: &Grid, stride: usize) -> Result<Grid> {
    let radius = check_kernel(kernel)?;
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    Ok(direct(image, kernel, radius, stride))
}

/// Convolution value at a single pixel.
pub fn convolve_at(image: &Grid, kernel: &Grid, x: usize, y: usize) -> Result<f64> {
    let radius = check_kernel(kernel)? as isize;
    let mut acc = 0.0;
    for ky in 0..kernel.height() {
        let dy = ky as isize - radius;
        for kx in 0..kernel.width() {
            let dx = kx as isize - radius;
            acc += kernel.get(kx, ky) * image.get_clamped(x as isize - dx, y as isize - dy);
        }
    }
    Ok(acc)
}

/// Direct convolution evaluated on the pixels of `region` only, with the
/// replicate border taken from the full image.
pub fn convolve_region(image: &Grid, kernel: &Grid, region: &BBox) -> Result<Grid> {
    let radius = check_kernel(kernel)? as isize;
    if region.x1 > image.width() || region.y1 > image.height() {
        return Err(Error::invalid(format!(
            "region {region:?} outside {}x{} image",
            image.width(),
            image.height()
        )));
    }
    let side = kernel.width();
    let flipped: Vec<f64> = kernel.data().iter().rev().copied().collect();
    let rows: Vec<Vec<f64>> = (region.y0..region.y1)
        .into_par_iter()
        .map(|y| {
            (region.x0..region.x1)
                .map(|x| {
                    let mut acc = 0.0;
                    for ky in 0..side {
                        let sy = y as isize + ky as isize - radius;
                        for kx in 0..side {
                            let sx = x as isize + kx as isize - radius;
                            acc += flipped[ky * side + kx] * image.get_clamped(sx, sy);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Grid::from_vec(region.width(), region.height(), rows.concat())
}

fn replicate_pad(image: &Grid, left: usize, top: usize, width: usize, height: usize) -> Grid {
    Grid::from_fn(width, height, |x, y| {
        image.get_clamped(x as isize - left as isize, y as isize - top as isize)
    })
}

fn direct(image: &Grid, kernel: &Grid, radius: usize, stride: usize) -> Grid {
    let (w, h) = image.dims();
    let padded = replicate_pad(image, radius, radius, w + 2 * radius, h + 2 * radius);
    let side = kernel.width();
    let pw = padded.width();
    let out_w = w.div_ceil(stride);
    let out_h = h.div_ceil(stride);
    // flipped kernel turns the convolution into a plain correlation over the padded image
    let flipped: Vec<f64> = kernel.data().iter().rev().copied().collect();
    let rows: Vec<Vec<f64>> = (0..out_h)
        .into_par_iter()
        .map(|oy| {
            let y = oy * stride;
            (0..out_w)
                .map(|ox| {
                    let x = ox * stride;
                    let mut acc = 0.0;
                    for ky in 0..side {
                        let prow = &padded.data()[(y + ky) * pw + x..(y + ky) * pw + x + side];
                        let krow = &flipped[ky * side..(ky + 1) * side];
                        acc += prow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>();
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Grid::from_vec(out_w, out_h, rows.concat()).expect("row lengths")
}

/// Smallest `n' >= n` of the form `2^a 3^b 5^c`.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Precomputed plans and kernel spectrum for one image shape.
pub struct FftConvolver {
    width: usize,
    height: usize,
    radius: usize,
    padded_w: usize,
    padded_h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Kernel spectrum in transposed (column-major) layout.
    kernel_spectrum: Vec<Complex<f64>>,
}

impl FftConvolver {
    pub fn new(kernel: &Grid, width: usize, height: usize) -> Result<Self> {
        let radius = check_kernel(kernel)?;
        if width == 0 || height == 0 {
            return Err(Error::invalid("cannot convolve an empty image"));
        }
        // image plus a replicated border of `radius` on every side; the circular
        // wrap then never reaches the pixels we keep
        let padded_w = fast_len(width + 2 * radius);
        let padded_h = fast_len(height + 2 * radius);
        let mut planner = FftPlanner::new();
        let mut conv = Self {
            width,
            height,
            radius,
            padded_w,
            padded_h,
            row_fwd: planner.plan_fft_forward(padded_w),
            row_inv: planner.plan_fft_inverse(padded_w),
            col_fwd: planner.plan_fft_forward(padded_h),
            col_inv: planner.plan_fft_inverse(padded_h),
            kernel_spectrum: Vec::new(),
        };
        let r = radius as isize;
        let mut buf = vec![Complex::new(0.0, 0.0); padded_w * padded_h];
        for ky in 0..kernel.height() {
            let dy = (ky as isize - r).rem_euclid(padded_h as isize) as usize;
            for kx in 0..kernel.width() {
                let dx = (kx as isize - r).rem_euclid(padded_w as isize) as usize;
                buf[dy * padded_w + dx] = Complex::new(kernel.get(kx, ky), 0.0);
            }
        }
        conv.kernel_spectrum = conv.forward(buf);
        Ok(conv)
    }

    fn forward(&self, mut buf: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        self.row_fwd.process(&mut buf);
        let mut t = transpose(&buf, self.padded_w, self.padded_h);
        self.col_fwd.process(&mut t);
        t
    }

    pub fn apply(&self, image: &Grid) -> Grid {
        assert_eq!(image.dims(), (self.width, self.height), "image shape");
        let padded = replicate_pad(image, self.radius, self.radius, self.padded_w, self.padded_h);
        let buf: Vec<Complex<f64>> = padded.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut spec = self.forward(buf);
        for (s, k) in spec.iter_mut().zip(&self.kernel_spectrum) {
            *s *= k;
        }
        self.col_inv.process(&mut spec);
        let mut rows = transpose(&spec, self.padded_h, self.padded_w);
        self.row_inv.process(&mut rows);
        let scale = 1.0 / (self.padded_w * self.padded_h) as f64;
        let r = self.radius;
        Grid::from_fn(self.width, self.height, |x, y| {
            rows[(y + r) * self.padded_w + x + r].re * scale
        })
    }
}

/// Transposes a row-major `height x width` buffer.
fn transpose(src: &[Complex<f64>], width: usize, height: usize) -> Vec<Complex<f64>> {
    let mut dst = vec![Complex::new(0.0, 0.0); src.len()];
    for y in 0..height {
        for x in 0..width {
            dst[x * height + y] = src[y * width + x];
        }
    }
    dst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(1), 1);
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(299), 300);
        assert_eq!(fast_len(256), 256);
    }

    #[test]
    fn delta_reproduces_kernel() {
        let kernel = Grid::from_fn(5, 5, |x, y| (x * 5 + y) as f64);
        let mut img = Grid::zeros(12, 9);
        img.set(6, 4, 1.0);
        for method in [ConvolutionMethod::Fft, ConvolutionMethod::Direct] {
            let out = convolve(&img, &kernel, method).unwrap();
            for ky in 0..5 {
                for kx in 0..5 {
                    let v = out.get(6 + kx - 2, 4 + ky - 2);
                    assert!((v - kernel.get(kx, ky)).abs() < 1e-12, "{method:?}");
                }
            }
        }
    }

    #[test]
    fn replicate_border_keeps_constants() {
        let kernel = Grid::from_fn(7, 7, |x, y| 1.0 + (x + 2 * y) as f64);
        let img = Grid::filled(10, 6, 2.0);
        let out = convolve(&img, &kernel, ConvolutionMethod::Direct).unwrap();
        let expect = 2.0 * kernel.sum();
        assert!(out.data().iter().all(|v| (v - expect).abs() < 1e-9));
    }

    #[test]
    fn strided_samples_match_dense() {
        let kernel = Grid::from_fn(5, 5, |x, y| ((x + y) % 3) as f64 - 1.0);
        let img = Grid::from_fn(11, 8, |x, y| ((x * 7 + y * 3) % 5) as f64);
        let dense = convolve(&img, &kernel, ConvolutionMethod::Direct).unwrap();
        let strided = convolve_strided(&img, &kernel, 3).unwrap();
        assert_eq!(strided.dims(), (4, 3));
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(strided.get(x, y), dense.get(3 * x, 3 * y));
                let p = convolve_at(&img, &kernel, 3 * x, 3 * y).unwrap();
                assert!((p - dense.get(3 * x, 3 * y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn region_matches_dense() {
        let kernel = Grid::from_fn(7, 7, |x, y| ((x * 3 + y) % 4) as f64 - 1.5);
        let img = Grid::from_fn(15, 12, |x, y| ((x * 5 + y * 11) % 9) as f64);
        let dense = convolve(&img, &kernel, ConvolutionMethod::Direct).unwrap();
        let region = BBox::new(0, 3, 9, 12);
        let part = convolve_region(&img, &kernel, &region).unwrap();
        assert_eq!(part.dims(), (9, 9));
        for y in 0..9 {
            for x in 0..9 {
                assert!((part.get(x, y) - dense.get(x, y + 3)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_must_be_odd_square() {
        let img = Grid::zeros(4, 4);
        assert!(convolve(&img, &Grid::zeros(4, 4), ConvolutionMethod::Auto).is_err());
        assert!(convolve(&img, &Grid::zeros(3, 5), ConvolutionMethod::Auto).is_err());
    }
}
