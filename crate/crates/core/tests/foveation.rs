use gamma_saliency::foveation::{blend_weights, build_pyramid, foveate_planes, rgb_planes};
use gamma_saliency::{foveate, FoveationParams, Grid};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(seed: u64, w: usize, h: usize) -> Grid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
}

fn noise_rgb(seed: u64, w: u32, h: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]))
}

fn abs_laplacian(g: &Grid, x: usize, y: usize) -> f64 {
    (4.0 * g.get(x, y) - g.get(x - 1, y) - g.get(x + 1, y) - g.get(x, y - 1) - g.get(x, y + 1)).abs()
}

/// Mean |Laplacian| in rings of `width` pixels around `c`.
fn ring_energy(g: &Grid, c: (usize, usize), width: f64, rings: usize) -> Vec<f64> {
    let mut sum = vec![0.0; rings];
    let mut n = vec![0usize; rings];
    for y in 1..g.height() - 1 {
        for x in 1..g.width() - 1 {
            let e = ((x as f64 - c.0 as f64).powi(2) + (y as f64 - c.1 as f64).powi(2)).sqrt();
            let i = (e / width) as usize;
            if i < rings {
                sum[i] += abs_laplacian(g, x, y);
                n[i] += 1;
            }
        }
    }
    sum.iter().zip(&n).map(|(s, &k)| s / k as f64).collect()
}

#[test]
fn constant_image_pyramid_is_flat() {
    let g = Grid::filled(80, 72, 93.0);
    for level in build_pyramid(&[g.clone()], &FoveationParams::default()).unwrap() {
        assert_eq!(level.planes[0], g);
    }
}

#[test]
fn noise_pyramid_loses_detail_per_level() {
    let g = noise(5, 128, 128);
    let levels = build_pyramid(&[g], &FoveationParams::default()).unwrap();
    let energy: Vec<f64> = levels
        .iter()
        .map(|l| {
            let p = &l.planes[0];
            let mut s = 0.0;
            for y in 1..127 {
                for x in 1..127 {
                    s += abs_laplacian(p, x, y).powi(2);
                }
            }
            s
        })
        .collect();
    assert!(energy.windows(2).all(|w| w[1] < w[0]), "{energy:?}");
}

#[test]
fn acuity_falls_with_eccentricity() {
    let params = FoveationParams {
        resolution: 12.0,
        ..Default::default()
    };
    let g = noise(9, 192, 192);
    let out = foveate_planes(&[g], (96, 96), &params).unwrap();
    let e = ring_energy(&out.planes[0], (96, 96), 10.0, 9);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    assert!(e[8] < 0.5 * e[0]);
}

#[test]
fn fovea_is_untouched() {
    let params = FoveationParams::default();
    let img = noise_rgb(2, 171, 128);
    let fix = (40, 70);
    let out = foveate(&img, fix, &params).unwrap().to_rgb().unwrap();
    let again = foveate(&out, fix, &params).unwrap().to_rgb().unwrap();
    let mut checked = 0;
    for y in 0..128u32 {
        for x in 0..171u32 {
            let e = ((x as f64 - 40.0).powi(2) + (y as f64 - 70.0).powi(2)).sqrt();
            if blend_weights(e, &params)[0] > 0.999 {
                assert_eq!(out.get_pixel(x, y), img.get_pixel(x, y));
                assert_eq!(again.get_pixel(x, y), out.get_pixel(x, y));
                checked += 1;
            }
        }
    }
    assert!(checked > 3000);
}

#[test]
fn unbounded_resolution_returns_source() {
    let img = noise_rgb(4, 100, 90);
    let params = FoveationParams {
        resolution: f64::INFINITY,
        ..Default::default()
    };
    assert!(params.validate().is_ok());
    assert_eq!(foveate(&img, (0, 0), &params).unwrap().to_rgb().unwrap(), img);
    let big = FoveationParams {
        resolution: 1e9,
        ..Default::default()
    };
    let planes = rgb_planes(&img);
    assert_eq!(foveate_planes(&planes, (99, 89), &big).unwrap().planes, planes);
}

proptest! {
    #[test]
    fn weights_partition_unity(e in 0.0f64..2000.0, res in 0.5f64..100.0, levels in 2usize..=8) {
        let p = FoveationParams { levels, blur_kernel_side: 3, resolution: res };
        let w = blend_weights(e, &p);
        prop_assert_eq!(w.len(), levels);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weight_mass_moves_outward(e1 in 0.0f64..500.0, d in 0.0f64..100.0, res in 1.0f64..60.0) {
        let p = FoveationParams { resolution: res, ..Default::default() };
        let mean_level = |e: f64| blend_weights(e, &p).iter().enumerate().map(|(i, w)| i as f64 * w).sum::<f64>();
        prop_assert!(mean_level(e1 + d) >= mean_level(e1) - 1e-12);
    }
}
