#![allow(dead_code)]

use gamma_saliency::color::srgb_pixel_to_lab;
use gamma_saliency::topdown::LabeledBox;
use gamma_saliency::{BBox, FeatureMapStack, Grid, KernelStack};
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const W: usize = 171;
pub const H: usize = 128;
pub const CENTER: (f64, f64) = (85.0, 63.5);

/// Gray level whose lightness is closest to `l`.
pub fn gray_for_l(l: f64) -> u8 {
    (0..=255u8)
        .min_by(|&a, &b| {
            let la = srgb_pixel_to_lab([a, a, a])[0];
            let lb = srgb_pixel_to_lab([b, b, b])[0];
            (la - l).abs().total_cmp(&(lb - l).abs())
        })
        .unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Disk,
    Square,
}

#[derive(Clone, Copy, Debug)]
pub struct Object {
    pub center: (f64, f64),
    pub radius: f64,
    pub shape: Shape,
    pub gray: u8,
}

impl Object {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        match self.shape {
            Shape::Disk => dx * dx + dy * dy <= self.radius * self.radius,
            Shape::Square => dx.abs() <= self.radius && dy.abs() <= self.radius,
        }
    }

    /// Distance from a point to the object (zero inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        match self.shape {
            Shape::Disk => ((dx * dx + dy * dy).sqrt() - self.radius).max(0.0),
            Shape::Square => {
                let ex = (dx.abs() - self.radius).max(0.0);
                let ey = (dy.abs() - self.radius).max(0.0);
                (ex * ex + ey * ey).sqrt()
            }
        }
    }

    pub fn bbox(&self) -> BBox {
        let mut x0 = W;
        let mut y0 = H;
        let (mut x1, mut y1) = (0, 0);
        for y in 0..H {
            for x in 0..W {
                if self.contains(x as f64, y as f64) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        BBox::new(x0, y0, x1, y1)
    }
}

pub fn paint(background: u8, objects: &[Object]) -> RgbImage {
    RgbImage::from_fn(W as u32, H as u32, |x, y| {
        let g = objects
            .iter()
            .find(|o| o.contains(x as f64, y as f64))
            .map_or(background, |o| o.gray);
        Rgb([g, g, g])
    })
}

pub struct Scene {
    pub image: RgbImage,
    /// Sorted by descending contrast.
    pub objects: Vec<Object>,
}

/// Lightness steps between consecutive objects.
pub const CONTRAST_RATIO: f64 = 0.92;

/// 1 to 4 objects of one shape on a ring around the center, contrasts
/// descending by `CONTRAST_RATIO`.
pub fn synthetic_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4usize);
    let shape = if rng.random_bool(0.5) { Shape::Disk } else { Shape::Square };
    let radius = rng.random_range(5.0..8.0);
    let ring = rng.random_range(30.0..45.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let bg_l = rng.random_range(35.0..50.0);
    let top = rng.random_range(38.0..44.0);
    let objects = (0..n)
        .map(|i| {
            let t = phase + std::f64::consts::TAU * i as f64 / n as f64;
            Object {
                center: (CENTER.0 + ring * t.cos(), CENTER.1 + ring * t.sin()),
                radius,
                shape,
                gray: gray_for_l(bg_l + top * CONTRAST_RATIO.powi(i as i32)),
            }
        })
        .collect::<Vec<_>>();
    Scene {
        image: paint(gray_for_l(bg_l), &objects),
        objects,
    }
}

pub fn disk_image(radius: f64, fg_l: f64, bg_l: f64) -> (RgbImage, (usize, usize)) {
    let o = Object {
        center: (CENTER.0 + 0.3, CENTER.1 - 0.2),
        radius,
        shape: Shape::Disk,
        gray: gray_for_l(fg_l),
    };
    (paint(gray_for_l(bg_l), &[o]), (85, 63))
}

/// Image pixels per feature cell in the top-down environment.
pub const FEATURE_STRIDE: usize = 4;
pub const FEATURE_MAPS: usize = 4;
pub const TARGET_CLASS: &str = "a";
pub const DISTRACTOR_CLASS: &str = "b";

pub fn feature_kernel() -> KernelStack {
    KernelStack::from_params(&[1, 6], &[1.0, 1.0], None).unwrap()
}

/// One target and eight brighter distractors on a jittered 3x3 lattice. Class
/// `a` activates feature maps 0 and 1 over its object, class `b` maps 2 and 3.
pub struct TopDownScene {
    pub image: RgbImage,
    pub features: FeatureMapStack,
    pub target: Object,
    pub distractors: Vec<Object>,
}

impl TopDownScene {
    pub fn feature_box(&self, o: &Object, class: &str, id: &str) -> LabeledBox {
        let b = o.bbox();
        let s = FEATURE_STRIDE;
        let (fw, fh) = self.features.dims();
        LabeledBox {
            image_id: id.to_string(),
            class_id: class.to_string(),
            bbox: BBox::new(b.x0 / s, b.y0 / s, b.x1.div_ceil(s).min(fw), b.y1.div_ceil(s).min(fh)),
        }
    }
}

pub fn topdown_scene(seed: u64) -> TopDownScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7d5c_0000);
    let bg_l = rng.random_range(35.0..45.0);
    let target_slot = rng.random_range(0..9usize);
    let radius = 7.0;
    let mut target = None;
    let mut distractors = Vec::new();
    for slot in 0..9 {
        let (col, row) = ((slot % 3) as f64, (slot / 3) as f64);
        let cx = 30.0 + col * 55.0 + rng.random_range(-4.0..4.0);
        let cy = 22.0 + row * 42.0 + rng.random_range(-3.0..3.0);
        let contrast = if slot == target_slot {
            rng.random_range(18.0..22.0)
        } else {
            rng.random_range(32.0..42.0)
        };
        let o = Object {
            center: (cx, cy),
            radius,
            shape: Shape::Disk,
            gray: gray_for_l(bg_l + contrast),
        };
        if slot == target_slot {
            target = Some(o);
        } else {
            distractors.push(o);
        }
    }
    let target = target.unwrap();
    let mut all = distractors.clone();
    all.push(target);
    let image = paint(gray_for_l(bg_l), &all);

    let s = FEATURE_STRIDE as f64;
    let (fw, fh) = (W.div_ceil(FEATURE_STRIDE), H.div_ceil(FEATURE_STRIDE));
    let mut maps: Vec<Grid> = (0..FEATURE_MAPS)
        .map(|_| Grid::from_fn(fw, fh, |_, _| rng.random_range(0.0..0.02)))
        .collect();
    for fy in 0..fh {
        for fx in 0..fw {
            let (x, y) = ((fx as f64 + 0.5) * s, (fy as f64 + 0.5) * s);
            if target.distance(x, y) <= 1.0 {
                let v = maps[0].get(fx, fy);
                maps[0].set(fx, fy, v + 1.0);
                let v = maps[1].get(fx, fy);
                maps[1].set(fx, fy, v + 0.6);
            }
            if distractors.iter().any(|d| d.distance(x, y) <= 1.0) {
                let v = maps[2].get(fx, fy);
                maps[2].set(fx, fy, v + 1.0);
                let v = maps[3].get(fx, fy);
                maps[3].set(fx, fy, v + 0.6);
            }
        }
    }
    TopDownScene {
        image,
        features: FeatureMapStack::new(maps, format!("synthetic-{seed}"), s).unwrap(),
        target,
        distractors,
    }
}
