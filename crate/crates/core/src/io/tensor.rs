//! Binary tensor interchange: a 20-byte header followed by little-endian `f32`s.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "GSAL"
//!      4     2  version (1)
//!      6     4  height
//!     10     4  width
//!     14     4  map count
//!     18     2  dtype (1 = f32)
//! ```
//!
//! The payload is row-major with the map index outermost. Writers need
//! exclusive access to their path; readers may run concurrently.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result, TensorError};
use crate::grid::Grid;
use crate::saliency::SaliencyMap;
use crate::topdown::FeatureMapStack;

pub const MAGIC: [u8; 4] = *b"GSAL";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u16 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorHeader {
    pub height: u32,
    pub width: u32,
    pub count: u32,
}

impl TensorHeader {
    pub fn payload_len(&self) -> std::result::Result<u64, TensorError> {
        let overflow = TensorError::DimOverflow {
            height: self.height,
            width: self.width,
            count: self.count,
        };
        let bytes = (self.height as u64)
            .checked_mul(self.width as u64)
            .and_then(|v| v.checked_mul(self.count as u64))
            .and_then(|v| v.checked_mul(4))
            .ok_or(overflow.clone())?;
        usize::try_from(bytes).map_err(|_| overflow)?;
        Ok(bytes)
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&MAGIC);
        h[4..6].copy_from_slice(&VERSION.to_le_bytes());
        h[6..10].copy_from_slice(&self.height.to_le_bytes());
        h[10..14].copy_from_slice(&self.width.to_le_bytes());
        h[14..18].copy_from_slice(&self.count.to_le_bytes());
        h[18..20].copy_from_slice(&DTYPE_F32.to_le_bytes());
        h
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, TensorError> {
        if bytes.len() < HEADER_LEN {
            return Err(TensorError::Truncated {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(TensorError::BadMagic(magic));
        }
        let version = u16_at(4);
        if version != VERSION {
            return Err(TensorError::UnsupportedVersion(version));
        }
        let dtype = u16_at(18);
        if dtype != DTYPE_F32 {
            return Err(TensorError::UnsupportedDtype(dtype));
        }
        let header = TensorHeader {
            height: u32_at(6),
            width: u32_at(10),
            count: u32_at(14),
        };
        if header.height == 0 || header.width == 0 || header.count == 0 {
            return Err(TensorError::ZeroDim {
                height: header.height,
                width: header.width,
                count: header.count,
            });
        }
        Ok(header)
    }
}

/// Serializes maps of one shape; values are stored as `f32`.
pub fn encode_tensor(maps: &[Grid]) -> Result<Vec<u8>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("tensor needs at least one map"))?;
    for m in maps {
        first.check_same_shape(m)?;
    }
    let (w, h) = first.dims();
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} exceeds u32")));
    let header = TensorHeader {
        height: dim(h)?,
        width: dim(w)?,
        count: dim(maps.len())?,
    };
    if w == 0 || h == 0 {
        return Err(TensorError::ZeroDim {
            height: header.height,
            width: header.width,
            count: header.count,
        }
        .into());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len()? as usize);
    out.extend_from_slice(&header.encode());
    for m in maps {
        for &v in m.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> std::result::Result<Vec<Grid>, TensorError> {
    let header = TensorHeader::decode(bytes)?;
    let expected = header.payload_len()?;
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < expected {
        return Err(TensorError::Truncated {
            expected: expected + HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if found > expected {
        return Err(TensorError::Trailing(found - expected));
    }
    let (w, h) = (header.width as usize, header.height as usize);
    let plane = w * h * 4;
    Ok(bytes[HEADER_LEN..]
        .chunks_exact(plane)
        .map(|chunk| {
            let data = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                .collect();
            Grid::from_vec(w, h, data).expect("plane size")
        })
        .collect())
}

pub fn write_tensor(path: impl AsRef<Path>, maps: &[Grid]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(maps)?).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Vec<Grid>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_tensor(&bytes)?)
}

pub fn read_feature_stack(path: impl AsRef<Path>, spatial_scale: f64) -> Result<FeatureMapStack> {
    let path = path.as_ref();
    FeatureMapStack::new(read_tensor(path)?, path.display().to_string(), spatial_scale)
}

/// Reads a single-map tensor as a post-processed saliency map.
pub fn read_saliency_map(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let path = path.as_ref();
    let mut maps = read_tensor(path)?;
    if maps.len() != 1 {
        return Err(Error::invalid(format!(
            "{} holds {} maps, expected one saliency map",
            path.display(),
            maps.len()
        )));
    }
    SaliencyMap::new(maps.remove(0), true)
}
