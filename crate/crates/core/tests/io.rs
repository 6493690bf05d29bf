mod common;

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use common::*;
use gamma_saliency::io::manifest::{parse_fixations, parse_manifest};
use gamma_saliency::io::render::{LINE_COLOR, MARKER_COLOR, MARKER_RADIUS};
use gamma_saliency::io::tables::{format_eval_csv, format_model, format_trace, parse_eval_csv, parse_model, parse_trace};
use gamma_saliency::io::tensor::{decode_tensor, encode_tensor, HEADER_LEN};
use gamma_saliency::io::{
    load_manifest, read_feature_stack, read_tensor, render_trace, write_tensor, EvalRow, TraceRecord,
};
use gamma_saliency::metrics::EvalSettings;
use gamma_saliency::topdown::TopDownModel;
use gamma_saliency::{run_cycle, EngineConfig, Error, Grid, Metric, RunConfig, TensorError};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f32_grid(seed: u64, w: usize, h: usize) -> Grid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(w, h, |_, _| (rng.random::<f32>() * 100.0 - 50.0) as f64)
}

fn header(magic: &[u8; 4], version: u16, h: u32, w: u32, n: u32, dtype: u16) -> Vec<u8> {
    let mut b = magic.to_vec();
    b.extend(version.to_le_bytes());
    b.extend(h.to_le_bytes());
    b.extend(w.to_le_bytes());
    b.extend(n.to_le_bytes());
    b.extend(dtype.to_le_bytes());
    b
}

#[test]
fn tensor_layout_is_little_endian_row_major() {
    let g = Grid::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let bytes = encode_tensor(&[g.clone(), g.map(|v| -v)]).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 2 * 6 * 4);
    assert_eq!(&bytes[..HEADER_LEN], header(b"GSAL", 1, 2, 3, 2, 1).as_slice());
    assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 4], &1.0f32.to_le_bytes());
    let sixth = HEADER_LEN + 5 * 4;
    assert_eq!(&bytes[sixth..sixth + 4], &6.0f32.to_le_bytes());
    assert_eq!(&bytes[sixth + 4..sixth + 8], &(-1.0f32).to_le_bytes());
    assert_eq!(encode_tensor(&[Grid::zeros(1, 1)]).unwrap().len(), 24);
}

#[test]
fn large_tensor_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.gsal");
    let maps: Vec<Grid> = (0..512).map(|i| f32_grid(i, 64, 64)).collect();
    write_tensor(&path, &maps).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 64 * 64 * 512 * 4);
    let back = read_tensor(&path).unwrap();
    assert!(back == maps);
    let hash = |b: &[u8]| {
        let mut h = DefaultHasher::new();
        b.hash(&mut h);
        h.finish()
    };
    assert_eq!(hash(&encode_tensor(&back).unwrap()), hash(&bytes));
    let stack = read_feature_stack(&path, 4.0).unwrap();
    assert_eq!((stack.len(), stack.dims(), stack.image_dims()), (512, (64, 64), (256, 256)));
}

#[test]
fn tensor_errors_are_distinct() {
    let payload = vec![0u8; 8];
    let with = |mut h: Vec<u8>| {
        h.extend(&payload);
        decode_tensor(&h).unwrap_err()
    };
    assert!(matches!(with(header(b"GSAM", 1, 1, 2, 1, 1)), TensorError::BadMagic(m) if &m == b"GSAM"));
    assert_eq!(with(header(b"GSAL", 2, 1, 2, 1, 1)), TensorError::UnsupportedVersion(2));
    assert_eq!(with(header(b"GSAL", 1, 1, 2, 1, 2)), TensorError::UnsupportedDtype(2));
    assert!(matches!(with(header(b"GSAL", 1, 1, 2, 0, 1)), TensorError::ZeroDim { count: 0, .. }));
    assert!(matches!(with(header(b"GSAL", 1, 0, 2, 1, 1)), TensorError::ZeroDim { height: 0, .. }));
    assert!(matches!(with(header(b"GSAL", 1, 3, 2, 1, 1)), TensorError::Truncated { expected: 44, found: 28 }));
    assert_eq!(with(header(b"GSAL", 1, 1, 1, 1, 1)), TensorError::Trailing(4));
    assert!(matches!(decode_tensor(b"GSAL"), Err(TensorError::Truncated { .. })));
    assert!(encode_tensor(&[]).is_err());
    assert!(encode_tensor(&[Grid::zeros(2, 2), Grid::zeros(3, 2)]).is_err());

    let dir = tempfile::tempdir().unwrap();
    let err = read_tensor(dir.path().join("absent.gsal")).unwrap_err();
    assert!(matches!(err, Error::Io { .. } | Error::NotFound(_)), "{err:?}");
}

#[test]
fn trace_round_trip() {
    let sc = synthetic_scene(4);
    let res = run_cycle(&sc.image, &EngineConfig::default()).unwrap();
    assert!(!res.trace.fixations.is_empty());
    let rec = TraceRecord::from(&res.trace);
    let text = format_trace(&rec);
    assert_eq!(parse_trace(&text, Path::new("t.tsv")).unwrap(), rec);
    let broken = text.replace("# dims", "# nothing");
    assert!(parse_trace(&broken, Path::new("t.tsv")).is_err());
}

#[test]
fn model_round_trip() {
    let model = TopDownModel::new(
        vec!["cat".into(), "dog".into()],
        vec![vec![0.1, 2.5, 1.0 / 3.0], vec![7.0, 1e-6, 0.0]],
        5.0,
        feature_kernel(),
    )
    .unwrap();
    let back = parse_model(&format_model(&model), Path::new("m.tsv")).unwrap();
    assert_eq!(back.classes, model.classes);
    assert_eq!(back.weights, model.weights);
    assert_eq!(back.alpha, model.alpha);
    assert_eq!(back.stack.realized(), model.stack.realized());
}

#[test]
fn eval_csv_round_trip() {
    let rows = vec![
        EvalRow { image_id: "a".into(), metric: Metric::Judd, value: 0.8125, degenerate: false },
        EvalRow { image_id: "b".into(), metric: Metric::Nss, value: 0.0, degenerate: true },
    ];
    let text = format_eval_csv(&rows, &EvalSettings::default());
    assert_eq!(parse_eval_csv(&text, Path::new("e.csv")).unwrap(), rows);
}

#[test]
fn config_round_trip_and_errors() {
    let cfg = RunConfig::default();
    let text = cfg.dump();
    assert_eq!(RunConfig::parse(&text, Path::new("c.conf")).unwrap().dump(), text);
    let bad = format!("{text}\nno_such_key = 1\n");
    assert!(matches!(RunConfig::parse(&bad, Path::new("c.conf")), Err(Error::Parse { .. })));
}

fn touch(dir: &Path, name: &str) {
    fs::write(dir.join(name), b"").unwrap();
}

#[test]
fn manifest_entries_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# corpus\n@name toy\n@px_per_degree 38\n");
    for i in 0..120 {
        let img = format!("img{i:03}.png");
        touch(dir.path(), &img);
        if i % 3 == 0 {
            let fix = format!("img{i:03}.txt");
            touch(dir.path(), &fix);
            text.push_str(&format!("{img}\t{fix}\t1,2,10,12;3,3,5,5\tcat\n"));
        } else {
            text.push_str(&format!("{img}\n"));
        }
    }
    let path = dir.path().join("m.tsv");
    fs::write(&path, &text).unwrap();
    let m = load_manifest(&path).unwrap();
    assert_eq!(m.len(), 120);
    assert_eq!(m.name.as_deref(), Some("toy"));
    assert_eq!(m.px_per_degree, Some(38.0));
    assert!(m.entries.iter().enumerate().all(|(i, e)| e.id == format!("img{i:03}")));
    assert_eq!(m.entries[0].boxes.len(), 2);
    assert_eq!(m.entries[0].class.as_deref(), Some("cat"));
    assert!(m.entries[1].fixations.is_none());
    assert_eq!(m.entries[5].line, 9);
}

#[test]
fn manifest_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    touch(dir.path(), "a.png");
    touch(dir.path(), "b.png");
    let path = dir.path().join("m.tsv");
    let parse = |t: &str| parse_manifest(t, &path);

    match parse("a.png\n\nmissing.png\n").unwrap_err() {
        Error::ManifestMissing { line, path: p, .. } => {
            assert_eq!(line, 3);
            assert!(p.ends_with("missing.png"));
        }
        e => panic!("{e:?}"),
    }
    let e = parse("a.png\tnot_there.txt\n").unwrap_err();
    assert!(matches!(e, Error::ManifestMissing { line: 1, .. }));
    let e = parse("a.png\nb.png\t-\t1,2,3\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
    assert!(e.to_string().contains(":2:"));
    assert!(parse("a.png\nsub/../a.png\n").is_err());
    assert!(matches!(parse("@bogus 1\n").unwrap_err(), Error::Parse { line: 1, .. }));
    assert!(parse("@px_per_degree -3\n").is_err());
}

#[test]
fn fixation_file_parsing() {
    let pts = parse_fixations("# x y\n10.7 3.2\n0 0 obs1\n\n5 6 # note\n", Path::new("f")).unwrap();
    assert_eq!(pts, [(10, 3), (0, 0), (5, 6)]);
    assert!(parse_fixations("1\n", Path::new("f")).is_err());
    assert!(parse_fixations("1 -2\n", Path::new("f")).is_err());
}

#[test]
fn rendering_an_empty_trace_is_identity() {
    let blank = RgbImage::from_pixel(W as u32, H as u32, Rgb([128, 128, 128]));
    let res = run_cycle(&blank, &EngineConfig::default()).unwrap();
    assert!(res.trace.fixations.is_empty());
    assert_eq!(render_trace(&blank, &res.trace), blank);
}

#[test]
fn rendered_markers_and_lines() {
    let objects: Vec<Object> = [(40.0, 40.0, 200), (120.0, 50.0, 185), (80.0, 100.0, 172)]
        .iter()
        .map(|&(x, y, g)| Object { center: (x, y), radius: 6.0, shape: Shape::Disk, gray: g })
        .collect();
    let img = paint(60, &objects);
    let res = run_cycle(&img, &EngineConfig::default()).unwrap();
    let fx = &res.trace.fixations;
    assert_eq!(fx.len(), 3);
    let out = render_trace(&img, &res.trace);
    let markers = out.pixels().filter(|p| **p == MARKER_COLOR).count();
    let disc = (-MARKER_RADIUS..=MARKER_RADIUS)
        .flat_map(|dy| (-MARKER_RADIUS..=MARKER_RADIUS).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= MARKER_RADIUS * MARKER_RADIUS)
        .count();
    assert_eq!(markers, 3 * disc);
    for f in fx {
        assert_eq!(*out.get_pixel(f.point.0 as u32, f.point.1 as u32), MARKER_COLOR);
    }
    // the midpoint of each saccade is on a line, the midpoint of first and last is not
    let mid = |a: (usize, usize), b: (usize, usize)| (((a.0 + b.0) / 2) as u32, ((a.1 + b.1) / 2) as u32);
    for w in fx.windows(2) {
        let (x, y) = mid(w[0].point, w[1].point);
        let near = (-1i32..=1).flat_map(|d| [(d, 0), (0, d)]).any(|(dx, dy)| {
            *out.get_pixel((x as i32 + dx) as u32, (y as i32 + dy) as u32) == LINE_COLOR
        });
        assert!(near);
    }
    let lines = out.pixels().filter(|p| **p == LINE_COLOR).count();
    assert!(lines > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tensor_round_trips(seed in any::<u64>(), w in 1usize..20, h in 1usize..20, n in 1usize..5) {
        let maps: Vec<Grid> = (0..n as u64).map(|i| f32_grid(seed.wrapping_add(i), w, h)).collect();
        let bytes = encode_tensor(&maps).unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + w * h * n * 4);
        prop_assert_eq!(decode_tensor(&bytes).unwrap(), maps);
    }

    #[test]
    fn truncation_is_always_reported(seed in any::<u64>(), cut in 1usize..40) {
        let bytes = encode_tensor(&[f32_grid(seed, 3, 3)]).unwrap();
        let cut = cut.min(bytes.len());
        prop_assert!(decode_tensor(&bytes[..bytes.len() - cut]).is_err());
    }
}
