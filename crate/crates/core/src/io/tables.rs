//! Plain-text tables: fixation traces, top-down models and evaluation CSVs.
//! Floats are written with their shortest round-trip representation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fixation::{Fixation, FixationTrace, StopReason};
use crate::grid::BBox;
use crate::metrics::{EvalSettings, Metric};
use crate::topdown::TopDownModel;

/// A fixation trace as stored on disk (without the inhibition grid).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub dims: (usize, usize),
    pub start: (usize, usize),
    pub stop_reason: StopReason,
    pub fixations: Vec<Fixation>,
}

impl From<&FixationTrace> for TraceRecord {
    fn from(t: &FixationTrace) -> Self {
        Self {
            dims: t.dims(),
            start: t.start,
            stop_reason: t.stop_reason,
            fixations: t.fixations.clone(),
        }
    }
}

const TRACE_COLUMNS: &str = "index\tx\ty\tsaliency\tx0\ty0\tx1\ty1\tscale\tfovea_radius\tseg_x0\tseg_y0\tseg_x1\tseg_y1\tseg_fallback";

pub fn format_trace(t: &TraceRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# dims\t{}\t{}", t.dims.0, t.dims.1);
    let _ = writeln!(s, "# start\t{}\t{}", t.start.0, t.start.1);
    let _ = writeln!(s, "# stop\t{}", t.stop_reason);
    let _ = writeln!(s, "{TRACE_COLUMNS}");
    for (i, f) in t.fixations.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            f.point.0,
            f.point.1,
            f.saliency_value,
            f.extent.x0,
            f.extent.y0,
            f.extent.x1,
            f.extent.y1,
            f.scale_index,
            f.fovea_radius,
            f.segment.x0,
            f.segment.y0,
            f.segment.x1,
            f.segment.y1,
            u8::from(f.segment_fallback)
        );
    }
    s
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, v: Option<&str>, name: &str) -> Result<T> {
    v.and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::parse(path, line, format!("missing or invalid {name}")))
}

pub fn parse_trace(text: &str, path: &Path) -> Result<TraceRecord> {
    let (mut dims, mut start, mut stop) = (None, None, None);
    let mut fixations = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw == TRACE_COLUMNS {
            continue;
        }
        if let Some(meta) = raw.strip_prefix("# ") {
            let mut it = meta.split('\t');
            match it.next() {
                Some("dims") => dims = Some((field(path, line, it.next(), "width")?, field(path, line, it.next(), "height")?)),
                Some("start") => start = Some((field(path, line, it.next(), "x")?, field(path, line, it.next(), "y")?)),
                Some("stop") => stop = Some(field::<StopReason>(path, line, it.next(), "stop reason")?),
                _ => {}
            }
            continue;
        }
        let c: Vec<&str> = raw.split('\t').collect();
        if c.len() != 15 {
            return Err(Error::parse(path, line, format!("expected 15 columns, found {}", c.len())));
        }
        let u = |j: usize, name: &str| field::<usize>(path, line, Some(c[j]), name);
        let fallback: u8 = field(path, line, Some(c[14]), "seg_fallback")?;
        fixations.push(Fixation {
            point: (u(1, "x")?, u(2, "y")?),
            saliency_value: field(path, line, Some(c[3]), "saliency")?,
            extent: BBox::new(u(4, "x0")?, u(5, "y0")?, u(6, "x1")?, u(7, "y1")?),
            scale_index: u(8, "scale")?,
            fovea_radius: field(path, line, Some(c[9]), "fovea_radius")?,
            segment: BBox::new(u(10, "seg_x0")?, u(11, "seg_y0")?, u(12, "seg_x1")?, u(13, "seg_y1")?),
            segment_fallback: fallback != 0,
        });
    }
    let missing = |what: &str| Error::parse(path, 0, format!("trace header lacks `{what}`"));
    Ok(TraceRecord {
        dims: dims.ok_or_else(|| missing("dims"))?,
        start: start.ok_or_else(|| missing("start"))?,
        stop_reason: stop.ok_or_else(|| missing("stop"))?,
        fixations,
    })
}

pub fn write_trace(path: impl AsRef<Path>, trace: &TraceRecord) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_trace(trace)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn split_list<T: std::str::FromStr>(path: &Path, line: usize, s: &str, name: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} list `{s}`")))
}

pub fn format_model(m: &TopDownModel) -> String {
    let specs = m.stack.specs();
    let mut s = String::new();
    let _ = writeln!(s, "# top-down saliency model");
    let _ = writeln!(s, "alpha\t{}", m.alpha);
    let _ = writeln!(s, "orders\t{}", join(&specs.iter().map(|p| p.order()).collect::<Vec<_>>()));
    let _ = writeln!(s, "shapes\t{}", join(&specs.iter().map(|p| p.shape()).collect::<Vec<_>>()));
    let _ = writeln!(s, "supports\t{}", join(&specs.iter().map(|p| p.support_radius()).collect::<Vec<_>>()));
    let _ = writeln!(s, "maps\t{}", m.map_count());
    let _ = writeln!(s, "class\tmap\tweight");
    for (c, row) in m.classes.iter().zip(&m.weights) {
        for (n, w) in row.iter().enumerate() {
            let _ = writeln!(s, "{c}\t{n}\t{w}");
        }
    }
    s
}

pub fn parse_model(text: &str, path: &Path) -> Result<TopDownModel> {
    let (mut alpha, mut orders, mut shapes, mut supports, mut maps) = (None, None, None, None, None);
    let mut classes: Vec<String> = Vec::new();
    let mut weights: Vec<Vec<f64>> = Vec::new();
    let mut in_table = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let c: Vec<&str> = raw.split('\t').collect();
        if !in_table {
            match (c[0], c.get(1)) {
                ("class", _) => in_table = true,
                ("alpha", v) => alpha = Some(field::<f64>(path, line, v.copied(), "alpha")?),
                ("orders", Some(v)) => orders = Some(split_list::<u32>(path, line, v, "order")?),
                ("shapes", Some(v)) => shapes = Some(split_list::<f64>(path, line, v, "shape")?),
                ("supports", Some(v)) => supports = Some(split_list::<usize>(path, line, v, "support")?),
                ("maps", v) => maps = Some(field::<usize>(path, line, v.copied(), "maps")?),
                (k, _) => return Err(Error::parse(path, line, format!("unexpected header key `{k}`"))),
            }
            continue;
        }
        if c.len() != 3 {
            return Err(Error::parse(path, line, "expected `class<TAB>map<TAB>weight`"));
        }
        let n_maps = maps.ok_or_else(|| Error::parse(path, line, "`maps` must precede the weights"))?;
        let map: usize = field(path, line, Some(c[1]), "map index")?;
        let w: f64 = field(path, line, Some(c[2]), "weight")?;
        let idx = match classes.iter().position(|x| x == c[0]) {
            Some(i) => i,
            None => {
                classes.push(c[0].to_string());
                weights.push(vec![f64::NAN; n_maps]);
                classes.len() - 1
            }
        };
        if map >= n_maps {
            return Err(Error::parse(path, line, format!("map index {map} >= {n_maps}")));
        }
        weights[idx][map] = w;
    }
    if let Some((c, _)) = classes.iter().zip(&weights).find(|(_, r)| r.iter().any(|w| w.is_nan())) {
        return Err(Error::parse(path, 0, format!("class `{c}` is missing weights")));
    }
    let missing = |what: &str| Error::parse(path, 0, format!("model header lacks `{what}`"));
    let orders = orders.ok_or_else(|| missing("orders"))?;
    let shapes = shapes.ok_or_else(|| missing("shapes"))?;
    let supports = supports.ok_or_else(|| missing("supports"))?;
    if orders.len() != shapes.len() || orders.len() != supports.len() {
        return Err(Error::parse(path, 0, "kernel lists differ in length"));
    }
    let specs: Vec<(u32, f64, usize)> = orders
        .into_iter()
        .zip(shapes)
        .zip(supports)
        .map(|((k, mu), r)| (k, mu, r))
        .collect();
    let stack = TopDownModel::stack_from_specs(&specs)?;
    TopDownModel::new(classes, weights, alpha.ok_or_else(|| missing("alpha"))?, stack)
}

pub fn write_model(path: impl AsRef<Path>, model: &TopDownModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_model(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<TopDownModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

/// One evaluation result row.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub image_id: String,
    pub metric: Metric,
    pub value: f64,
    pub degenerate: bool,
}

const EVAL_COLUMNS: &str = "image_id,metric,value,flags";

pub fn format_eval_csv(rows: &[EvalRow], settings: &EvalSettings) -> String {
    let mut s = String::new();
    let ppd = settings
        .px_per_degree
        .map_or_else(|| "38*width/1920".to_string(), |v| v.to_string());
    let _ = writeln!(
        s,
        "# borji_splits={} seed={} density_sigma_px={ppd}",
        settings.borji_splits, settings.seed
    );
    let _ = writeln!(s, "{EVAL_COLUMNS}");
    for r in rows {
        let flags = if r.degenerate { "degenerate" } else { "" };
        let _ = writeln!(s, "{},{},{},{flags}", r.image_id, r.metric, r.value);
    }
    s
}

pub fn parse_eval_csv(text: &str, path: &Path) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.is_empty() || raw.starts_with('#') || raw == EVAL_COLUMNS {
            continue;
        }
        let c: Vec<&str> = raw.split(',').collect();
        if c.len() != 4 {
            return Err(Error::parse(path, i + 1, "expected 4 columns"));
        }
        rows.push(EvalRow {
            image_id: c[0].to_string(),
            metric: c[1].parse().map_err(|_| Error::parse(path, i + 1, "unknown metric"))?,
            value: field(path, i + 1, Some(c[2]), "value")?,
            degenerate: c[3] == "degenerate",
        });
    }
    Ok(rows)
}

pub fn format_roc_csv(curve: &[(f64, f64)]) -> String {
    let mut s = String::from("fpr,tpr\n");
    for (x, y) in curve {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelStack;

    fn trace() -> TraceRecord {
        TraceRecord {
            dims: (171, 128),
            start: (85, 63),
            stop_reason: StopReason::Featureless,
            fixations: vec![Fixation {
                point: (10, 20),
                saliency_value: 0.123_456_789_012_345_67,
                extent: BBox::new(0, 7, 24, 34),
                scale_index: 0,
                fovea_radius: 13.0,
                segment: BBox::new(4, 14, 17, 27),
                segment_fallback: true,
            }],
        }
    }

    #[test]
    fn trace_round_trip() {
        let t = trace();
        let text = format_trace(&t);
        assert_eq!(parse_trace(&text, Path::new("t")).unwrap(), t);
    }

    #[test]
    fn trace_requires_header() {
        assert!(parse_trace("index\n", Path::new("t")).is_err());
    }

    #[test]
    fn model_round_trip() {
        let stack = KernelStack::from_params(&[1, 6], &[1.0, 1.0], None).unwrap();
        let m = TopDownModel::new(
            vec!["bird".into(), "snake".into()],
            vec![vec![0.1, 2.5, 1.0 / 3.0], vec![1e-7, 0.0, 4.0]],
            2.0,
            stack,
        )
        .unwrap();
        let text = format_model(&m);
        let back = parse_model(&text, Path::new("m")).unwrap();
        assert_eq!(back.classes, m.classes);
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.alpha, m.alpha);
        assert_eq!(back.stack.realized(), m.stack.realized());
        assert_eq!(format_model(&back), text);
    }

    #[test]
    fn eval_round_trip() {
        let rows = vec![
            EvalRow { image_id: "a".into(), metric: Metric::Judd, value: 0.812_345, degenerate: false },
            EvalRow { image_id: "a".into(), metric: Metric::Nss, value: 0.0, degenerate: true },
        ];
        let text = format_eval_csv(&rows, &EvalSettings::default());
        assert_eq!(parse_eval_csv(&text, Path::new("e")).unwrap(), rows);
    }
}
