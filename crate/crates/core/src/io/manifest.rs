//! Dataset manifests and fixation files.
//!
//! A manifest is tab-separated text, one entry per line:
//!
//! ```text
//! # comment
//! @name toronto
//! @px_per_degree 38
//! image.png<TAB>fixations.txt<TAB>x0,y0,x1,y1;x0,y0,x1,y1<TAB>class
//! ```
//!
//! Only the image column is required; `-` marks an absent field. Paths are
//! relative to the manifest. The entry id is the image file stem.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::BBox;
use crate::metrics::FixationSet;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub fixations: Option<PathBuf>,
    pub boxes: Vec<BBox>,
    pub class: Option<String>,
    /// 1-based line in the manifest.
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub name: Option<String>,
    pub px_per_degree: Option<f64>,
    /// Image pixels per feature-grid pixel for feature tensors.
    pub spatial_scale: Option<f64>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_box(s: &str) -> std::result::Result<BBox, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x0, y0, x1, y1] = parts.as_slice() else {
        return Err(format!("box `{s}` needs four comma-separated values"));
    };
    let n = |v: &str| v.parse::<usize>().map_err(|_| format!("bad box coordinate `{v}`"));
    let b = BBox::new(n(x0)?, n(y0)?, n(x1)?, n(y1)?);
    if b.x1 <= b.x0 || b.y1 <= b.y0 {
        return Err(format!("box `{s}` is degenerate"));
    }
    Ok(b)
}

fn positive(path: &Path, line: usize, key: &str, v: &str) -> Result<f64> {
    match v.trim().parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(Error::parse(path, line, format!("{key} must be a positive number, got `{v}`"))),
    }
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<DatasetManifest> {
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &str| base.join(p);
    let mut m = DatasetManifest::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(directive) = trimmed.strip_prefix('@') {
            let (key, value) = directive
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .unwrap_or((directive, ""));
            match key {
                "name" => m.name = Some(value.to_string()),
                "px_per_degree" => m.px_per_degree = Some(positive(path, line, key, value)?),
                "spatial_scale" => m.spatial_scale = Some(positive(path, line, key, value)?),
                other => return Err(Error::parse(path, line, format!("unknown directive `@{other}`"))),
            }
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() > 4 {
            return Err(Error::parse(path, line, format!("expected at most 4 fields, found {}", fields.len())));
        }
        let field = |i: usize| fields.get(i).copied().filter(|f| !f.is_empty() && *f != "-");
        let image = resolve(fields[0]);
        if !image.is_file() {
            return Err(Error::ManifestMissing {
                manifest: path.to_path_buf(),
                line,
                path: image,
            });
        }
        let fixations = field(1).map(resolve);
        if let Some(f) = &fixations {
            if !f.is_file() {
                return Err(Error::ManifestMissing {
                    manifest: path.to_path_buf(),
                    line,
                    path: f.clone(),
                });
            }
        }
        let boxes = match field(2) {
            Some(s) => s
                .split(';')
                .filter(|b| !b.trim().is_empty())
                .map(parse_box)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, line, e))?,
            None => Vec::new(),
        };
        let id = image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(Error::invalid(format!(
                "{}: duplicate image id `{id}` on lines {prev} and {line}",
                path.display()
            )));
        }
        m.entries.push(ManifestEntry {
            id,
            image,
            fixations,
            boxes,
            class: field(3).map(str::to_string),
            line,
        });
    }
    Ok(m)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

/// Parses `x y [observer]` lines; `#` starts a comment. Coordinates may be
/// fractional and are floored to the containing pixel.
pub fn parse_fixations(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(Error::parse(path, i + 1, "expected `x y [observer]`"));
        }
        let coord = |s: &str| match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(v.floor() as usize),
            _ => Err(Error::parse(path, i + 1, format!("bad coordinate `{s}`"))),
        };
        out.push((coord(parts[0])?, coord(parts[1])?));
    }
    Ok(out)
}

pub fn load_fixations(
    path: impl AsRef<Path>,
    id: &str,
    width: usize,
    height: usize,
) -> Result<FixationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FixationSet::new(id, parse_fixations(&text, path)?, width, height)
}
