//! Files in and out: images, tensors, manifests, tables and renderings.

pub mod manifest;
pub mod render;
pub mod tables;
pub mod tensor;

use std::path::Path;

use image::RgbImage;

use crate::error::{Error, Result};

pub use manifest::{load_fixations, load_manifest, DatasetManifest, ManifestEntry};
pub use render::{render_heatmap, render_trace};
pub use tables::{read_model, read_trace, write_model, write_trace, EvalRow, TraceRecord};
pub use tensor::{read_feature_stack, read_saliency_map, read_tensor, write_tensor};

/// Loads a PNG, JPEG or BMP as 8-bit sRGB; grayscale is replicated to three channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    Ok(image::open(path)?.to_rgb8())
}

pub fn save_image(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    Ok(image.save(path.as_ref())?)
}
