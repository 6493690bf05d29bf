//! Fixation-prediction metrics: AUC (Judd, Borji), SIM, CC, NSS, plus ROC export and box IoU.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{gaussian_blur, BBox, Grid};

/// Default number of random-negative splits for AUC-Borji.
pub const BORJI_SPLITS: usize = 100;
/// One degree of visual angle at 1920 px image width.
pub const PX_PER_DEGREE_AT_1920: f64 = 38.0;

/// A metric value with a flag for degenerate (constant) inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn ok(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    fn degenerate(value: f64) -> Self {
        Self {
            value,
            degenerate: true,
        }
    }
}

/// Human fixations on one image, in image pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct FixationSet {
    pub image_id: String,
    pub points: Vec<(usize, usize)>,
    pub width: usize,
    pub height: usize,
}

impl FixationSet {
    pub fn new(
        image_id: impl Into<String>,
        points: Vec<(usize, usize)>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if let Some(p) = points.iter().find(|(x, y)| *x >= width || *y >= height) {
            return Err(Error::invalid(format!(
                "fixation {p:?} outside {width}x{height} image"
            )));
        }
        Ok(Self {
            image_id: image_id.into(),
            points,
            width,
            height,
        })
    }

    /// Fixated pixels, each counted once, as a 0/1 mask.
    pub fn mask(&self) -> Grid {
        let mut g = Grid::zeros(self.width, self.height);
        for &(x, y) in &self.points {
            g.set(x, y, 1.0);
        }
        g
    }

    fn check(&self, map: &Grid) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid(format!("no fixations for `{}`", self.image_id)));
        }
        if map.dims() != (self.width, self.height) {
            return Err(Error::ShapeMismatch {
                expected: (self.width, self.height),
                found: map.dims(),
            });
        }
        Ok(())
    }

    /// Values at fixated pixels and at every other pixel.
    fn split(&self, map: &Grid) -> (Vec<f64>, Vec<f64>) {
        let mask = self.mask();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (v, m) in map.data().iter().zip(mask.data()) {
            if *m != 0.0 {
                pos.push(*v);
            } else {
                neg.push(*v);
            }
        }
        (pos, neg)
    }
}

/// Gaussian-blurred fixation histogram normalized to unit sum.
#[derive(Clone, Debug, PartialEq)]
pub struct FixationDensityMap {
    pub density: Grid,
    pub sigma: f64,
}

impl FixationDensityMap {
    /// `px_per_degree` sets the blur to one degree of visual angle; without it
    /// the blur is 38 px scaled by `width / 1920`.
    pub fn from_fixations(fix: &FixationSet, px_per_degree: Option<f64>) -> Result<Self> {
        if fix.points.is_empty() {
            return Err(Error::invalid(format!("no fixations for `{}`", fix.image_id)));
        }
        let sigma = match px_per_degree {
            Some(p) if p > 0.0 => p,
            Some(p) => return Err(Error::invalid(format!("px per degree must be positive, got {p}"))),
            None => PX_PER_DEGREE_AT_1920 * fix.width as f64 / 1920.0,
        };
        let mut hist = Grid::zeros(fix.width, fix.height);
        for &(x, y) in &fix.points {
            hist.set(x, y, hist.get(x, y) + 1.0);
        }
        let blurred = gaussian_blur(&hist, sigma);
        let total = blurred.sum();
        Ok(Self {
            density: blurred.map(|v| v / total),
            sigma,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RocMode {
    /// Every non-fixated pixel is a negative.
    Judd,
    /// As many uniformly drawn pixels as fixations are the negatives.
    Borji { seed: u64 },
}

fn is_constant(map: &Grid) -> bool {
    map.max() == map.min()
}

fn count_at_least(sorted_desc: &[f64], t: f64) -> usize {
    sorted_desc.partition_point(|&v| v >= t)
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// ROC points from (0, 0) to (1, 1), one per distinct threshold in `thresholds`.
fn roc_points(mut pos: Vec<f64>, mut neg: Vec<f64>, mut thresholds: Vec<f64>) -> Vec<(f64, f64)> {
    sort_desc(&mut pos);
    sort_desc(&mut neg);
    sort_desc(&mut thresholds);
    thresholds.dedup();
    let (np, nn) = (pos.len() as f64, neg.len().max(1) as f64);
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        pts.push((
            count_at_least(&neg, t) as f64 / nn,
            count_at_least(&pos, t) as f64 / np,
        ));
    }
    pts.push((1.0, 1.0));
    pts
}

/// Trapezoidal area under an ROC curve given as `(fpr, tpr)` points.
pub fn area_under(curve: &[(f64, f64)]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

fn borji_negatives(map: &Grid, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = map.data().len();
    (0..count).map(|_| map.data()[rng.random_range(0..n)]).collect()
}

pub fn roc_curve(map: &Grid, fix: &FixationSet, mode: RocMode) -> Result<Vec<(f64, f64)>> {
    fix.check(map)?;
    let (pos, neg) = fix.split(map);
    Ok(match mode {
        RocMode::Judd => {
            let thresholds = pos.clone();
            roc_points(pos, neg, thresholds)
        }
        RocMode::Borji { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let neg = borji_negatives(map, pos.len(), &mut rng);
            let thresholds = pos.iter().chain(&neg).copied().collect();
            roc_points(pos, neg, thresholds)
        }
    })
}

/// Thresholds at the map values of fixated pixels; negatives are all other pixels.
pub fn auc_judd(map: &Grid, fix: &FixationSet) -> Result<Score> {
    fix.check(map)?;
    if is_constant(map) {
        return Ok(Score::degenerate(0.5));
    }
    Ok(Score::ok(area_under(&roc_curve(map, fix, RocMode::Judd)?)))
}

/// Mean AUC over `splits` draws of uniformly sampled negatives, one per fixated pixel.
pub fn auc_borji(map: &Grid, fix: &FixationSet, splits: usize, seed: u64) -> Result<Score> {
    fix.check(map)?;
    if splits == 0 {
        return Err(Error::invalid("AUC-Borji needs at least one split"));
    }
    if is_constant(map) {
        return Ok(Score::degenerate(0.5));
    }
    let (pos, _) = fix.split(map);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..splits {
        let neg = borji_negatives(map, pos.len(), &mut rng);
        let thresholds = pos.iter().chain(&neg).copied().collect();
        total += area_under(&roc_points(pos.clone(), neg, thresholds));
    }
    Ok(Score::ok(total / splits as f64))
}

fn as_distribution(g: &Grid) -> Result<Grid> {
    if g.data().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("distribution maps must be finite and non-negative"));
    }
    let s = g.sum();
    if s <= 0.0 {
        return Err(Error::invalid("distribution map has zero mass"));
    }
    Ok(g.map(|v| v / s))
}

/// Histogram intersection of the two maps after each is scaled to unit sum.
pub fn similarity(a: &Grid, b: &Grid) -> Result<f64> {
    a.check_same_shape(b)?;
    let (a, b) = (as_distribution(a)?, as_distribution(b)?);
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.min(*y))
        .sum::<f64>()
        .min(1.0))
}

/// Pearson correlation; 0 (flagged) when either map is constant.
pub fn correlation(a: &Grid, b: &Grid) -> Result<Score> {
    a.check_same_shape(b)?;
    if is_constant(a) || is_constant(b) {
        return Ok(Score::degenerate(0.0));
    }
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok(Score::ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

/// Mean z-scored map value over fixated pixels (sample standard deviation).
pub fn nss(map: &Grid, fix: &FixationSet) -> Result<Score> {
    fix.check(map)?;
    if is_constant(map) {
        return Ok(Score::degenerate(0.0));
    }
    let n = map.data().len() as f64;
    let mean = map.mean();
    let var = map.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let (pos, _) = fix.split(map);
    Ok(Score::ok(
        pos.iter().map(|v| (v - mean) / sd).sum::<f64>() / pos.len() as f64,
    ))
}

/// Intersection area over union area; 0 when both boxes are empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).area() as f64;
    let union = (a.area() + b.area()) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Judd,
    Borji,
    Sim,
    Cc,
    Nss,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Judd, Metric::Borji, Metric::Sim, Metric::Cc, Metric::Nss];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Judd => "judd",
            Metric::Borji => "borji",
            Metric::Sim => "sim",
            Metric::Cc => "cc",
            Metric::Nss => "nss",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "judd" | "auc-judd" | "auc_judd" => Ok(Metric::Judd),
            "borji" | "auc-borji" | "auc_borji" => Ok(Metric::Borji),
            "sim" | "similarity" => Ok(Metric::Sim),
            "cc" | "correlation" => Ok(Metric::Cc),
            "nss" => Ok(Metric::Nss),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// Settings shared by every metric of one evaluation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSettings {
    pub borji_splits: usize,
    pub seed: u64,
    pub px_per_degree: Option<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            borji_splits: BORJI_SPLITS,
            seed: 0,
            px_per_degree: None,
        }
    }
}

/// Scores one map; the distribution metrics compare it with the blurred fixation density.
pub fn evaluate(map: &Grid, fix: &FixationSet, metric: Metric, settings: &EvalSettings) -> Result<Score> {
    match metric {
        Metric::Judd => auc_judd(map, fix),
        Metric::Borji => auc_borji(map, fix, settings.borji_splits, settings.seed),
        Metric::Nss => nss(map, fix),
        Metric::Sim | Metric::Cc => {
            fix.check(map)?;
            let density = FixationDensityMap::from_fixations(fix, settings.px_per_degree)?;
            if metric == Metric::Cc {
                correlation(map, &density.density)
            } else if map.sum() <= 0.0 {
                Ok(Score::degenerate(0.0))
            } else {
                similarity(map, &density.density).map(Score::ok)
            }
        }
    }
}
