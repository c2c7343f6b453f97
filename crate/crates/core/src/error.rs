use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("tessellation {got} below minimum {min}")]
    TessellationTooLow { got: usize, min: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("scene has no geometry")]
    EmptyScene,
    #[error("duplicate or reserved object id {0}")]
    InvalidObjectId(u32),
    #[error("degenerate look-at: {0}")]
    DegenerateLookAt(&'static str),
    #[error("invalid depth {0} (must be > 0)")]
    InvalidDepth(f64),
    #[error("point at or behind the camera plane (z = {0})")]
    BehindCamera(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("pixel ({u}, {v}) is not on the target object")]
    PixelOffObject { u: usize, v: usize },
    #[error("pixel ({u}, {v}) has no valid depth or normal")]
    InvalidPixelGeometry { u: usize, v: usize },
    #[error("target object {0} is not visible in the view")]
    TargetAbsent(u32),
    #[error("segmentation mask is empty")]
    EmptyMask,
    #[error("no viable grasp pixel: every masked quality value is zero")]
    NoViablePixel,
    #[error("zero-length normal")]
    ZeroNormal,
    #[error("oracle predictor requires labels")]
    MissingLabels,
    #[error("malformed {format} data: {reason}")]
    Malformed {
        format: &'static str,
        reason: String,
    },
    #[error("label byte {0} is not one of 0, 128, 255")]
    InvalidLabelByte(u8),
    #[error("channel support violated: {0}")]
    ChannelSupport(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("view {index}: {source}")]
    View {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn malformed(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            format,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::MissingFile(_) | Error::Io { .. } => true,
            Error::View { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
