//! sRGB (D65) to CIELab.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::grid::Grid;

// D65 reference white, from the rows of the sRGB -> XYZ matrix
const XN: f64 = 0.950_470;
const YN: f64 = 1.0;
const ZN: f64 = 1.088_830;

#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    pub l: Grid,
    pub a: Grid,
    pub b: Grid,
}

impl LabImage {
    pub fn new(l: Grid, a: Grid, b: Grid) -> Result<Self> {
        l.check_same_shape(&a)?;
        l.check_same_shape(&b)?;
        Ok(Self { l, a, b })
    }

    pub fn width(&self) -> usize {
        self.l.width()
    }

    pub fn height(&self) -> usize {
        self.l.height()
    }

    pub fn channels(&self) -> [&Grid; 3] {
        [&self.l, &self.a, &self.b]
    }

    pub fn crop(&self, b: &crate::grid::BBox) -> LabImage {
        LabImage {
            l: self.l.crop(b),
            a: self.a.crop(b),
            b: self.b.crop(b),
        }
    }

    /// Largest absolute channel value.
    pub fn magnitude(&self) -> f64 {
        self.channels()
            .iter()
            .flat_map(|g| g.data().iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one 8-bit sRGB triple to `[L, a, b]`.
pub fn srgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let (fx, fy, fz) = (lab_f(x / XN), lab_f(y / YN), lab_f(z / ZN));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn rgb_to_lab(image: &RgbImage) -> Result<LabImage> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::invalid("cannot convert an empty image"));
    }
    let mut l = Vec::with_capacity(w * h);
    let mut a = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for p in image.pixels() {
        let [lv, av, bv] = srgb_pixel_to_lab(p.0);
        l.push(lv);
        a.push(av);
        b.push(bv);
    }
    Ok(LabImage {
        l: Grid::from_vec(w, h, l)?,
        a: Grid::from_vec(w, h, a)?,
        b: Grid::from_vec(w, h, b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_and_black() {
        let [l, a, b] = srgb_pixel_to_lab([255, 255, 255]);
        assert!((l - 100.0).abs() < 1e-4, "L={l}");
        assert!(a.abs() < 0.5 && b.abs() < 0.5, "a={a} b={b}");
        assert_eq!(srgb_pixel_to_lab([0, 0, 0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn mid_gray_matches_reference() {
        // reference value from an independent sRGB -> XYZ -> Lab script
        let [l, a, b] = srgb_pixel_to_lab([119, 119, 119]);
        assert!((l - 50.0344).abs() < 0.5, "L={l}");
        assert!(a.abs() < 0.5 && b.abs() < 0.5);
        let [l, a, b] = srgb_pixel_to_lab([200, 30, 90]);
        assert!((l - 44.1609).abs() < 0.05);
        assert!((a - 65.8066).abs() < 0.05);
        assert!((b - 10.6150).abs() < 0.05);
    }

    #[test]
    fn empty_image_rejected() {
        assert!(rgb_to_lab(&RgbImage::new(0, 3)).is_err());
    }
}
