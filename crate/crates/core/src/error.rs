use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violated a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(
        "kernel support radius {radius} too small for order {order}, shape {shape}: \
         need at least {required}"
    )]
    KernelSupport {
        order: u32,
        shape: f64,
        radius: usize,
        required: usize,
    },

    #[error("kernel radius {radius} exceeds image {width}x{height}")]
    KernelTooLarge {
        radius: usize,
        width: usize,
        height: usize,
    },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("{}:{line}: file not found: {}", manifest.display(), path.display())]
    ManifestMissing {
        manifest: PathBuf,
        line: usize,
        path: PathBuf,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported tensor version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u16),
    #[error("tensor has a zero dimension ({height}x{width}x{count})")]
    ZeroDim { height: u32, width: u32, count: u32 },
    #[error("tensor dimensions overflow ({height}x{width}x{count})")]
    DimOverflow { height: u32, width: u32, count: u32 },
    #[error("truncated tensor: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing bytes after tensor payload: {0}")]
    Trailing(u64),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
