//! Flat `key = value` run configuration; lists are comma-separated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::convolve::ConvolutionMethod;
use crate::error::{Error, Result};
use crate::fixation::{EngineConfig, PathKind};
use crate::foveation::FoveationParams;
use crate::kernel::{
    KernelStack, NATURALISTIC_ORDERS, NATURALISTIC_SHAPES, NATURALISTIC_SUPPORT, TORONTO_ORDERS,
    TORONTO_SHAPES,
};
use crate::metrics::{EvalSettings, BORJI_SPLITS};
use crate::saliency::SaliencyParams;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub orders: Vec<u32>,
    pub shapes: Vec<f64>,
    /// Shared support radius; `None` uses each kernel's default.
    pub support: Option<usize>,
    pub alpha: f64,
    pub center_sigma_fraction: f64,
    pub blur_sigma_ref: f64,
    /// Working size as `(height, width)`.
    pub resize: Option<(usize, usize)>,
    pub stride: usize,
    pub method: ConvolutionMethod,
    pub theta: f64,
    pub max_fixations: usize,
    pub path_kind: PathKind,
    pub frame_count: usize,
    pub frame_size: usize,
    pub foveation: bool,
    pub foveation_levels: usize,
    pub foveation_kernel: usize,
    pub foveation_resolution: f64,
    pub seed: u64,
    pub borji_splits: usize,
    pub topdown_orders: Vec<u32>,
    pub topdown_shapes: Vec<f64>,
    pub topdown_support: Option<usize>,
    pub topdown_alpha: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fov = FoveationParams::default();
        Self {
            orders: TORONTO_ORDERS.to_vec(),
            shapes: TORONTO_SHAPES.to_vec(),
            support: None,
            alpha: 5.0,
            center_sigma_fraction: 0.25,
            blur_sigma_ref: 0.5,
            resize: Some((128, 171)),
            stride: 1,
            method: ConvolutionMethod::Auto,
            theta: 0.2,
            max_fixations: 30,
            path_kind: PathKind::Zigzag,
            frame_count: 5,
            frame_size: 16,
            foveation: false,
            foveation_levels: fov.levels,
            foveation_kernel: fov.blur_kernel_side,
            foveation_resolution: fov.resolution,
            seed: 0,
            borji_splits: BORJI_SPLITS,
            topdown_orders: NATURALISTIC_ORDERS.to_vec(),
            topdown_shapes: NATURALISTIC_SHAPES.to_vec(),
            topdown_support: Some(NATURALISTIC_SUPPORT),
            topdown_alpha: 5.0,
        }
    }
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), T::to_string)
}

fn method_name(m: ConvolutionMethod) -> &'static str {
    match m {
        ConvolutionMethod::Auto => "auto",
        ConvolutionMethod::Fft => "fft",
        ConvolutionMethod::Direct => "direct",
    }
}

impl RunConfig {
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("orders", list(&self.orders));
        kv("shapes", list(&self.shapes));
        kv("support", opt(&self.support, "auto"));
        kv("alpha", self.alpha.to_string());
        kv("center_sigma_fraction", self.center_sigma_fraction.to_string());
        kv("blur_sigma_ref", self.blur_sigma_ref.to_string());
        kv(
            "resize",
            self.resize
                .map_or_else(|| "none".to_string(), |(h, w)| format!("{h}x{w}")),
        );
        kv("stride", self.stride.to_string());
        kv("method", method_name(self.method).to_string());
        kv("theta", self.theta.to_string());
        kv("max_fixations", self.max_fixations.to_string());
        kv("path_kind", self.path_kind.to_string());
        kv("frame_count", self.frame_count.to_string());
        kv("frame_size", self.frame_size.to_string());
        kv("foveation", if self.foveation { "on" } else { "off" }.to_string());
        kv("foveation_levels", self.foveation_levels.to_string());
        kv("foveation_kernel", self.foveation_kernel.to_string());
        kv("foveation_resolution", self.foveation_resolution.to_string());
        kv("seed", self.seed.to_string());
        kv("borji_splits", self.borji_splits.to_string());
        kv("topdown_orders", list(&self.topdown_orders));
        kv("topdown_shapes", list(&self.topdown_shapes));
        kv("topdown_support", opt(&self.topdown_support, "auto"));
        kv("topdown_alpha", self.topdown_alpha.to_string());
        s
    }

    /// Parses a config; keys not present keep their defaults.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::parse(path, line, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(path, line, format!("duplicate key `{key}`")));
            }
            let bad = |what: &str| Error::parse(path, line, format!("invalid {what} `{value}` for `{key}`"));
            let num = |_: ()| value.parse::<f64>().map_err(|_| bad("number"));
            let int = |_: ()| value.parse::<usize>().map_err(|_| bad("integer"));
            let auto_int = |_: ()| match value {
                "auto" => Ok(None),
                v => v.parse::<usize>().map(Some).map_err(|_| bad("integer")),
            };
            let u32s = |_: ()| {
                value
                    .split(',')
                    .map(|v| v.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("integer list"))
            };
            let f64s = |_: ()| {
                value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("number list"))
            };
            match key {
                "orders" => c.orders = u32s(())?,
                "shapes" => c.shapes = f64s(())?,
                "support" => c.support = auto_int(())?,
                "alpha" => c.alpha = num(())?,
                "center_sigma_fraction" => c.center_sigma_fraction = num(())?,
                "blur_sigma_ref" => c.blur_sigma_ref = num(())?,
                "resize" => {
                    c.resize = match value {
                        "none" => None,
                        v => {
                            let (h, w) = v.split_once('x').ok_or_else(|| bad("size"))?;
                            let h = h.trim().parse().map_err(|_| bad("size"))?;
                            let w = w.trim().parse().map_err(|_| bad("size"))?;
                            Some((h, w))
                        }
                    }
                }
                "stride" => c.stride = int(())?,
                "method" => {
                    c.method = match value {
                        "auto" => ConvolutionMethod::Auto,
                        "fft" => ConvolutionMethod::Fft,
                        "direct" => ConvolutionMethod::Direct,
                        _ => return Err(bad("method")),
                    }
                }
                "theta" => c.theta = num(())?,
                "max_fixations" => c.max_fixations = int(())?,
                "path_kind" => c.path_kind = value.parse().map_err(|_| bad("path kind"))?,
                "frame_count" => c.frame_count = int(())?,
                "frame_size" => c.frame_size = int(())?,
                "foveation" => {
                    c.foveation = match value {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        _ => return Err(bad("switch")),
                    }
                }
                "foveation_levels" => c.foveation_levels = int(())?,
                "foveation_kernel" => c.foveation_kernel = int(())?,
                "foveation_resolution" => c.foveation_resolution = num(())?,
                "seed" => c.seed = value.parse().map_err(|_| bad("seed"))?,
                "borji_splits" => c.borji_splits = int(())?,
                "topdown_orders" => c.topdown_orders = u32s(())?,
                "topdown_shapes" => c.topdown_shapes = f64s(())?,
                "topdown_support" => c.topdown_support = auto_int(())?,
                "topdown_alpha" => c.topdown_alpha = num(())?,
                other => return Err(Error::parse(path, line, format!("unknown key `{other}`"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.dump()).map_err(|e| Error::io(path, e))
    }

    pub fn saliency_params(&self) -> Result<SaliencyParams> {
        if self.stride == 0 {
            return Err(Error::invalid("stride must be >= 1"));
        }
        if !(self.center_sigma_fraction > 0.0) || !(self.blur_sigma_ref > 0.0) {
            return Err(Error::invalid("sigmas must be positive"));
        }
        if let Some((h, w)) = self.resize {
            if h == 0 || w == 0 {
                return Err(Error::invalid("resize target must be non-empty"));
            }
        }
        Ok(SaliencyParams {
            stack: KernelStack::from_params(&self.orders, &self.shapes, self.support)?,
            alpha: self.alpha,
            center_sigma_fraction: self.center_sigma_fraction,
            blur_sigma_ref: self.blur_sigma_ref,
            resize: self.resize.map(|(h, w)| (w, h)),
            stride: self.stride,
            method: self.method,
        })
    }

    pub fn foveation_params(&self) -> Result<FoveationParams> {
        let p = FoveationParams {
            levels: self.foveation_levels,
            blur_kernel_side: self.foveation_kernel,
            resolution: self.foveation_resolution,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        let cfg = EngineConfig {
            theta: self.theta,
            max_fixations: self.max_fixations,
            path_kind: self.path_kind,
            frame_count: self.frame_count,
            frame_size: self.frame_size,
            foveation: if self.foveation {
                Some(self.foveation_params()?)
            } else {
                None
            },
            saliency: self.saliency_params()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn topdown_stack(&self) -> Result<KernelStack> {
        KernelStack::from_params(&self.topdown_orders, &self.topdown_shapes, self.topdown_support)
    }

    pub fn eval_settings(&self, px_per_degree: Option<f64>) -> EvalSettings {
        EvalSettings {
            borji_splits: self.borji_splits,
            seed: self.seed,
            px_per_degree,
        }
    }

    /// Checks every field with the owning module's rules.
    pub fn validate(&self) -> Result<()> {
        self.engine_config()?;
        self.foveation_params()?;
        self.topdown_stack()?;
        if !(self.topdown_alpha >= 1.0) {
            return Err(Error::invalid("topdown_alpha must be >= 1"));
        }
        if self.borji_splits == 0 {
            return Err(Error::invalid("borji_splits must be >= 1"));
        }
        crate::saliency::PostProcessParams::new(self.alpha, 1.0, 1.0)?;
        Ok(())
    }
}
