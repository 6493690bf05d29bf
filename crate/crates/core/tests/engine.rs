mod common;

use common::*;
use gamma_saliency::fixation::{
    estimate_extent, make_scan, next_fixation, refine_and_segment, run_cycle_on_map,
};
use gamma_saliency::saliency::SaliencyMap;
use gamma_saliency::{
    rgb_to_lab, run_cycle, BBox, EngineConfig, FoveationParams, Grid, PathKind, SaliencyParams,
    StopReason,
};
use image::{Rgb, RgbImage};
use proptest::prelude::*;

#[test]
fn extent_of_disks() {
    let stack = SaliencyParams::toronto().stack;
    let cases = [(1.0, 0), (12.0, 0), (36.0, 2)];
    for (r, want) in cases {
        let (img, p) = disk_image(r, 90.0, 50.0);
        let e = estimate_extent(&rgb_to_lab(&img).unwrap(), p, &stack).unwrap();
        assert_eq!(e.scale_index, want, "radius {r}");
        assert!(e.bbox.contains(p.0, p.1));
    }
    let (img, p) = disk_image(12.0, 90.0, 50.0);
    let e = estimate_extent(&rgb_to_lab(&img).unwrap(), p, &stack).unwrap();
    assert!(e.half_width().abs_diff(13) <= 2, "{}", e.half_width());
}

fn square_scene(squares: &[(usize, usize, usize, u8)]) -> RgbImage {
    RgbImage::from_fn(W as u32, H as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        for &(x0, y0, side, g) in squares {
            if (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y) {
                return Rgb([g, g, g]);
            }
        }
        Rgb([60, 60, 60])
    })
}

fn box_error(a: &BBox, b: &BBox) -> usize {
    [a.x0.abs_diff(b.x0), a.y0.abs_diff(b.y0), a.x1.abs_diff(b.x1), a.y1.abs_diff(b.y1)]
        .into_iter()
        .max()
        .unwrap()
}

#[test]
fn segmentation_recovers_square() {
    let stack = SaliencyParams::toronto().stack;
    let img = square_scene(&[(70, 50, 16, 220)]);
    let lab = rgb_to_lab(&img).unwrap();
    let p = (78, 58);
    let e = estimate_extent(&lab, p, &stack).unwrap();
    let s = refine_and_segment(&lab, p, &e.bbox, &stack).unwrap();
    assert!(!s.fallback);
    assert!(box_error(&s.bbox, &BBox::new(70, 50, 86, 66)) <= 2, "{:?}", s.bbox);
}

#[test]
fn segmentation_keeps_neighbor_out() {
    let stack = SaliencyParams::toronto().stack;
    let img = square_scene(&[(60, 50, 12, 220), (84, 50, 12, 220)]);
    let lab = rgb_to_lab(&img).unwrap();
    let p = (66, 56);
    let e = estimate_extent(&lab, p, &stack).unwrap();
    let bbox = e.bbox.intersection(&BBox::new(40, 30, 110, 90));
    let s = refine_and_segment(&lab, p, &bbox, &stack).unwrap();
    assert!(!s.fallback);
    assert!(s.bbox.x1 <= 84, "{:?}", s.bbox);
    assert!(s.bbox.contains(p.0, p.1));
}

#[test]
fn uniform_patch_falls_back() {
    let stack = SaliencyParams::toronto().stack;
    let lab = rgb_to_lab(&RgbImage::from_pixel(W as u32, H as u32, Rgb([100, 100, 100]))).unwrap();
    let b = BBox::new(60, 40, 100, 80);
    let s = refine_and_segment(&lab, (80, 60), &b, &stack).unwrap();
    assert!(s.fallback);
    assert_eq!(s.bbox, b);
    assert!(s.mask.data().iter().all(|&v| v == 1.0));
}

#[test]
fn single_object_and_blank() {
    let cfg = EngineConfig::default();
    let (img, p) = disk_image(7.0, 90.0, 45.0);
    let res = run_cycle(&img, &cfg).unwrap();
    assert_eq!(res.trace.fixations.len(), 1);
    assert_eq!(res.trace.stop_reason, StopReason::Featureless);
    let f = res.trace.fixations[0].point;
    assert!(f.0.abs_diff(p.0) <= 3 && f.1.abs_diff(p.1) <= 3);
    assert_eq!(res.trace.start, (85, 63));

    let blank = RgbImage::from_pixel(W as u32, H as u32, Rgb([128, 128, 128]));
    let res = run_cycle(&blank, &cfg).unwrap();
    assert!(res.trace.fixations.is_empty());
    assert_eq!(res.trace.stop_reason, StopReason::Featureless);
}

#[test]
fn descending_disks_in_order() {
    let sc = synthetic_scene(7);
    let res = run_cycle(&sc.image, &EngineConfig::default()).unwrap();
    let map = &res.map;
    // rank objects by the post-processed peak inside each
    let mut peaks: Vec<(usize, f64)> = sc
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let b = o.bbox();
            let mut m = 0.0f64;
            for y in b.y0..b.y1 {
                for x in b.x0..b.x1 {
                    m = m.max(map.values().get(x, y));
                }
            }
            (i, m)
        })
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let visited: Vec<usize> = res
        .trace
        .fixations
        .iter()
        .map(|f| {
            sc.objects
                .iter()
                .position(|o| o.distance(f.point.0 as f64, f.point.1 as f64) <= 3.0)
                .unwrap()
        })
        .collect();
    assert_eq!(visited, peaks.iter().map(|p| p.0).collect::<Vec<_>>());
}

#[test]
fn scan_frames_cover_patch() {
    let patch = RgbImage::from_fn(40, 30, |x, y| Rgb([x as u8, y as u8, 0]));
    let s = make_scan(&patch, PathKind::Zigzag, 5, 16).unwrap();
    assert_eq!(s.frames.len(), 5);
    assert!(s.frames.iter().all(|f| f.dimensions() == (16, 16)));
    assert_eq!(make_scan(&patch, PathKind::Zigzag, 5, 16).unwrap(), s);
    assert!(make_scan(&patch, PathKind::Circular, 5, 31).is_err());
}

#[test]
fn foveated_cycle_runs() {
    let cfg = EngineConfig {
        foveation: Some(FoveationParams::default()),
        ..Default::default()
    };
    let sc = synthetic_scene(3);
    let a = run_cycle(&sc.image, &cfg).unwrap();
    let b = run_cycle(&sc.image, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert!(!a.trace.fixations.is_empty());
}

fn random_peaks(seeds: &[(usize, usize, f64)]) -> SaliencyMap {
    let g = Grid::from_fn(W, H, |x, y| {
        seeds
            .iter()
            .map(|&(px, py, a)| {
                let d2 = (x as f64 - px as f64).powi(2) + (y as f64 - py as f64).powi(2);
                a * (-d2 / 50.0).exp()
            })
            .fold(0.0, f64::max)
    });
    SaliencyMap::new(g.normalized_by_max(), true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn no_revisit_and_progress(
        seeds in prop::collection::vec((10usize..160, 10usize..118, 0.3f64..1.0), 1..6),
        scene in 0u64..1000,
    ) {
        let cfg = EngineConfig::default();
        let working = synthetic_scene(scene).image;
        let res = run_cycle_on_map(&working, random_peaks(&seeds), &cfg).unwrap();
        let fx = &res.trace.fixations;
        for (i, a) in fx.iter().enumerate() {
            prop_assert!(a.extent.contains(a.point.0, a.point.1));
            prop_assert!(a.saliency_value >= cfg.theta);
            for b in &fx[i + 1..] {
                let d = ((a.point.0 as f64 - b.point.0 as f64).powi(2)
                    + (a.point.1 as f64 - b.point.1 as f64).powi(2)).sqrt();
                prop_assert!(d > a.fovea_radius);
            }
        }
        prop_assert!(fx.windows(2).all(|w| w[1].saliency_value < w[0].saliency_value));
        prop_assert!(res.trace.inhibition.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let again = run_cycle_on_map(&working, random_peaks(&seeds), &cfg).unwrap();
        prop_assert_eq!(&again.trace, &res.trace);
    }

    #[test]
    fn selection_matches_brute_force(seeds in prop::collection::vec((0usize..171, 0usize..128, 0.0f64..1.0), 1..6)) {
        let map = random_peaks(&seeds);
        let inh = Grid::from_fn(W, H, |x, y| ((x * 7 + y * 3) % 10) as f64 / 10.0 + 0.05);
        let got = next_fixation(&map, &inh, 0.01).unwrap();
        let mut best = ((0, 0), f64::MIN);
        for y in 0..H {
            for x in 0..W {
                let v = map.values().get(x, y) * inh.get(x, y);
                if v > best.1 {
                    best = ((x, y), v);
                }
            }
        }
        let expected = if best.1 >= 0.01 { Some(best) } else { None };
        prop_assert_eq!(got, expected);
    }
}
