//! Dense real-valued 2D grids and pixel boxes shared by every stage.

use crate::error::{Error, Result};

/// Row-major 2D array of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Value with coordinates clamped into the grid (replicate-edge border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.check_same_shape(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First maximum in row-major order: `(x, y, value)`.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 % self.width, best.0 / self.width, best.1)
    }

    /// Divides by the maximum so the peak becomes 1. An all-zero grid is returned unchanged.
    pub fn normalized_by_max(&self) -> Grid {
        let max = self.max();
        if max > 0.0 {
            self.map(|v| v / max)
        } else {
            self.clone()
        }
    }

    /// Bilinear resampling with pixel-center alignment and clamped borders.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Grid {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let xs: Vec<(usize, usize, f64)> = (0..width)
            .map(|x| lerp_coords((x as f64 + 0.5) * sx - 0.5, self.width))
            .collect();
        Grid::from_fn(width, height, |x, y| {
            let (y0, y1, ty) = lerp_coords((y as f64 + 0.5) * sy - 0.5, self.height);
            let (x0, x1, tx) = xs[x];
            let top = lerp(self.get(x0, y0), self.get(x1, y0), tx);
            let bottom = lerp(self.get(x0, y1), self.get(x1, y1), tx);
            lerp(top, bottom, ty)
        })
    }

    pub fn crop(&self, b: &BBox) -> Grid {
        Grid::from_fn(b.width(), b.height(), |x, y| self.get(b.x0 + x, b.y0 + y))
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact when a == b, which keeps constant images constant through resampling
    a + t * (b - a)
}

pub(crate) fn lerp_coords(pos: f64, len: usize) -> (usize, usize, f64) {
    let pos = pos.clamp(0.0, (len - 1) as f64);
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, pos - i0 as f64)
}

/// Sampled, unit-sum 1D Gaussian of radius `ceil(3 sigma)`.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    if radius == 0 {
        return vec![1.0];
    }
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with replicate-edge borders.
pub fn gaussian_blur(grid: &Grid, sigma: f64) -> Grid {
    let k = gaussian_kernel_1d(sigma);
    if k.len() == 1 {
        return grid.clone();
    }
    separable_filter(grid, &k)
}

/// Applies the same odd-length 1D filter along rows then columns, replicating edges.
pub fn separable_filter(grid: &Grid, k: &[f64]) -> Grid {
    let r = (k.len() / 2) as isize;
    let (w, h) = grid.dims();
    let horizontal = Grid::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, &kv)| kv * grid.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    Grid::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, &kv)| kv * horizontal.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    })
}

/// Axis-aligned pixel box, half-open: covers `x0..x1` by `y0..y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// Square box of the given half-width around a point, clipped to `width x height`.
    pub fn around(x: usize, y: usize, half_width: usize, width: usize, height: usize) -> Self {
        Self {
            x0: x.saturating_sub(half_width),
            y0: y.saturating_sub(half_width),
            x1: (x + half_width + 1).min(width),
            y1: (y + half_width + 1).min(height),
        }
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersection(&self, other: &BBox) -> BBox {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        BBox {
            x0,
            y0,
            x1: self.x1.min(other.x1).max(x0),
            y1: self.y1.min(other.y1).max(y0),
        }
    }

    /// Grows the box symmetrically until it is at least `min_w x min_h`, staying inside the image.
    pub fn grown_to(&self, min_w: usize, min_h: usize, width: usize, height: usize) -> BBox {
        fn grow(lo: usize, hi: usize, min: usize, limit: usize) -> (usize, usize) {
            if hi - lo >= min || min >= limit {
                return if min >= limit { (0, limit) } else { (lo, hi) };
            }
            let extra = min - (hi - lo);
            let mut lo2 = lo.saturating_sub(extra / 2);
            let mut hi2 = lo2 + min;
            if hi2 > limit {
                hi2 = limit;
                lo2 = limit - min;
            }
            (lo2, hi2)
        }
        let (x0, x1) = grow(self.x0, self.x1, min_w, width);
        let (y0, y1) = grow(self.y0, self.y1, min_h, height);
        BBox { x0, y0, x1, y1 }
    }

    /// Rescales by independent horizontal and vertical factors, rounding outward.
    pub fn scaled(&self, sx: f64, sy: f64) -> BBox {
        BBox {
            x0: (self.x0 as f64 * sx).floor() as usize,
            y0: (self.y0 as f64 * sy).floor() as usize,
            x1: (self.x1 as f64 * sx).ceil() as usize,
            y1: (self.y1 as f64 * sy).ceil() as usize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_in_row_major_order() {
        let mut g = Grid::zeros(4, 3);
        g.set(3, 0, 1.0);
        g.set(0, 2, 1.0);
        assert_eq!(g.argmax(), (3, 0, 1.0));
    }

    #[test]
    fn bilinear_keeps_constants_exact() {
        let g = Grid::filled(7, 5, 0.3);
        let r = g.resize_bilinear(19, 11);
        assert!(r.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn blur_preserves_mass_in_interior() {
        let mut g = Grid::zeros(31, 31);
        g.set(15, 15, 1.0);
        let b = gaussian_blur(&g, 2.0);
        assert!((b.sum() - 1.0).abs() < 1e-12);
        assert_eq!(b.argmax().0, 15);
    }

    #[test]
    fn grown_box_respects_image_limits() {
        let b = BBox::new(2, 2, 4, 4).grown_to(10, 10, 8, 20);
        assert_eq!(b, BBox::new(0, 0, 8, 10));
        let b = BBox::new(15, 15, 18, 18).grown_to(6, 6, 20, 20);
        assert_eq!(b.width(), 6);
        assert!(b.x1 <= 20 && b.contains(16, 16));
    }
}
