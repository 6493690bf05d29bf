//! Heatmap and fixation-trace rendering.

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::fixation::FixationTrace;
use crate::grid::{BBox, Grid};

pub const BOX_COLOR: Rgb<u8> = Rgb([255, 220, 0]);
pub const LINE_COLOR: Rgb<u8> = Rgb([0, 220, 255]);
pub const MARKER_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
pub const LABEL_COLOR: Rgb<u8> = Rgb([255, 255, 255]);
pub const MARKER_RADIUS: i64 = 2;

fn viridis(t: f64) -> [u8; 3] {
    let c = colorous::VIRIDIS.eval_continuous(t.clamp(0.0, 1.0));
    [c.r, c.g, c.b]
}

/// Viridis rendering of a `[0, 1]` map, optionally blended over an image of
/// the same size with weight `alpha` on the colors.
pub fn render_heatmap(map: &Grid, underlay: Option<(&RgbImage, f64)>) -> Result<RgbImage> {
    let (w, h) = map.dims();
    if let Some((img, alpha)) = underlay {
        if (img.width() as usize, img.height() as usize) != (w, h) {
            return Err(Error::ShapeMismatch {
                expected: (w, h),
                found: (img.width() as usize, img.height() as usize),
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("blend alpha must be in [0, 1], got {alpha}")));
        }
    }
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let c = viridis(map.get(x as usize, y as usize));
        match underlay {
            None => Rgb(c),
            Some((img, a)) => {
                let u = img.get_pixel(x, y).0;
                Rgb(std::array::from_fn(|i| {
                    (u[i] as f64 + a * (c[i] as f64 - u[i] as f64)).round() as u8
                }))
            }
        }
    }))
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham line including both endpoints.
pub fn draw_line(img: &mut RgbImage, from: (i64, i64), to: (i64, i64), c: Rgb<u8>) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, c);
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// One-pixel outline of a half-open box.
pub fn draw_box(img: &mut RgbImage, b: &BBox, c: Rgb<u8>) {
    if b.is_empty() {
        return;
    }
    let (x0, y0, x1, y1) = (b.x0 as i64, b.y0 as i64, b.x1 as i64 - 1, b.y1 as i64 - 1);
    draw_line(img, (x0, y0), (x1, y0), c);
    draw_line(img, (x1, y0), (x1, y1), c);
    draw_line(img, (x1, y1), (x0, y1), c);
    draw_line(img, (x0, y1), (x0, y0), c);
}

pub fn draw_disc(img: &mut RgbImage, center: (i64, i64), radius: i64, c: Rgb<u8>) {
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy <= radius * radius {
                put(img, center.0 + dx, center.1 + dy, c);
            }
        }
    }
}

// 3x5 glyphs, one row per 3 bits, top row first
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Draws a number with its top-left corner at `at`.
pub fn draw_number(img: &mut RgbImage, at: (i64, i64), n: usize, c: Rgb<u8>) {
    for (i, ch) in n.to_string().bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        let ox = at.0 + 4 * i as i64;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    put(img, ox + col, at.1 + row as i64, c);
                }
            }
        }
    }
}

/// Extent boxes, saccade lines between consecutive fixations, 1-based labels,
/// and a marker centered exactly on every fixation (drawn last).
pub fn render_trace(image: &RgbImage, trace: &FixationTrace) -> RgbImage {
    let mut out = image.clone();
    let pts: Vec<(i64, i64)> = trace
        .fixations
        .iter()
        .map(|f| (f.point.0 as i64, f.point.1 as i64))
        .collect();
    for f in &trace.fixations {
        draw_box(&mut out, &f.extent, BOX_COLOR);
    }
    for w in pts.windows(2) {
        draw_line(&mut out, w[0], w[1], LINE_COLOR);
    }
    for (i, p) in pts.iter().enumerate() {
        draw_number(&mut out, (p.0 + MARKER_RADIUS + 2, p.1 - MARKER_RADIUS - 6), i + 1, LABEL_COLOR);
    }
    for &p in &pts {
        draw_disc(&mut out, p, MARKER_RADIUS, MARKER_COLOR);
    }
    out
}
