//! Per-stage timing of the bottom-up pipeline.

use std::fmt::Write as _;
use std::time::Duration;

use image::RgbImage;

use crate::error::{Error, Result};
use crate::saliency::{compute_saliency_timed, SaliencyParams, StageTimes};

#[derive(Clone, Debug, PartialEq)]
pub struct StageStats {
    pub stage: &'static str,
    pub mean_s: f64,
    pub stddev_s: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub images: usize,
    pub repetitions: usize,
    /// Colorspace, convolution, post-processing, then the per-map total.
    pub stages: Vec<StageStats>,
}

fn stats(stage: &'static str, xs: &[f64]) -> StageStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    StageStats {
        stage,
        mean_s: mean,
        stddev_s: var.sqrt(),
        samples: xs.len(),
    }
}

/// Times every image `repetitions` times after one untimed warmup run.
pub fn run_bench(images: &[RgbImage], params: &SaliencyParams, repetitions: usize) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be >= 1"));
    }
    if images.is_empty() {
        return Err(Error::invalid("benchmark needs at least one image"));
    }
    compute_saliency_timed(&images[0], params)?;
    let mut times: Vec<StageTimes> = Vec::with_capacity(images.len() * repetitions);
    for img in images {
        for _ in 0..repetitions {
            times.push(compute_saliency_timed(img, params)?.1);
        }
    }
    let col = |f: fn(&StageTimes) -> Duration| times.iter().map(|t| f(t).as_secs_f64()).collect::<Vec<_>>();
    Ok(BenchReport {
        images: images.len(),
        repetitions,
        stages: vec![
            stats("colorspace", &col(|t| t.colorspace)),
            stats("convolution", &col(|t| t.convolution)),
            stats("post_process", &col(|t| t.post_process)),
            stats("total", &col(|t| t.total())),
        ],
    })
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,mean_s,stddev_s,samples\n");
        for st in &self.stages {
            let _ = writeln!(s, "{},{},{},{}", st.stage, st.mean_s, st.stddev_s, st.samples);
        }
        s
    }

    pub fn total(&self) -> &StageStats {
        self.stages.last().expect("total row")
    }

    pub fn summary(&self) -> String {
        let t = self.total();
        format!(
            "{} image(s) x {} repetition(s): {:.4} s per map (sd {:.4} s)",
            self.images, self.repetitions, t.mean_s, t.stddev_s
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_repetitions_rejected() {
        let img = RgbImage::new(171, 128);
        assert!(run_bench(&[img], &SaliencyParams::toronto(), 0).is_err());
        assert!(run_bench(&[], &SaliencyParams::toronto(), 1).is_err());
    }

    #[test]
    fn sample_stddev() {
        let s = stats("x", &[1.0, 3.0]);
        assert_eq!(s.mean_s, 2.0);
        assert!((s.stddev_s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(stats("x", &[4.0]).stddev_s, 0.0);
    }
}
