//! Gamma-kernel visual saliency, foveation, a fixation engine with inhibition
//! of return, top-down feature-map saliency and fixation-prediction metrics.

pub mod bench;
pub mod color;
pub mod config;
pub mod convolve;
pub mod error;
pub mod fixation;
pub mod foveation;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod saliency;
pub mod topdown;

pub use bench::{run_bench, BenchReport};
pub use color::{rgb_to_lab, LabImage};
pub use config::RunConfig;
pub use convolve::ConvolutionMethod;
pub use fixation::{run_cycle, EngineConfig, FixationTrace, PathKind, StopReason};
pub use foveation::{foveate, FoveationParams};
pub use error::{Error, Result, TensorError};
pub use grid::{BBox, Grid};
pub use kernel::{build_kernel, build_multiscale, GammaKernelSpec, KernelStack};
pub use saliency::{compute_saliency, post_process, PostProcessParams, SaliencyMap, SaliencyParams};
pub use metrics::{FixationSet, Metric, Score};
pub use topdown::{FeatureMapStack, TopDownModel};
