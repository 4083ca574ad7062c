//! On-disk dataset formats and loaders.
//!
//! * `*.cmask` (CMSK): one packed binary plane.
//! * `*.cstk` (CSTK): an ordered stack of packed planes, one per feature map.
//! * `*.pgm`: binary (P5) greymap import, any pixel `> 0` is set.
//! * `manifest.json`: scene classes, images, concept masks and predictions.

mod format;
mod manifest;
mod pgm;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mask::MaskError;

pub use format::{
    decode_bitmask, decode_feature_stack, encode_bitmask, encode_feature_stack,
    read_bitmask_header, read_stack_header, save_bitmask, save_feature_stack, FeatureMapStack,
    PlaneHeader, StackHeader, CMSK_MAGIC, CSTK_MAGIC, FORMAT_VERSION,
};
pub use manifest::{load_manifest, parse_manifest, DatasetManifest, ImageRecord, SceneClass};
pub use pgm::decode_pgm;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest parse failure: {0}")]
    Parse(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: Vec<u8> },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated {what}: expected {expected} bytes, found {actual}")]
    Truncated {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{extra} unexpected trailing bytes after payload")]
    TrailingData { extra: usize },
    #[error("zero dimensions {width}x{height}")]
    ZeroDimensions { width: u32, height: u32 },
    #[error("feature stack has no planes")]
    EmptyStack,
    #[error("duplicate scene label {0}")]
    DuplicateLabel(u32),
    #[error("scene labels must be contiguous from 0; label {0} missing")]
    NonContiguousLabels(u32),
    #[error("image {image_id} references unknown scene label {label}")]
    UnknownSceneLabel { image_id: String, label: u32 },
    #[error("duplicate image id {0}")]
    DuplicateImage(String),
    #[error("image {0} has an empty concept name")]
    EmptyConceptName(String),
    #[error("image {image_id} references missing file {path}")]
    DanglingReference { image_id: String, path: PathBuf },
    #[error("feature-map count mismatch for image {image_id}: manifest declares {expected}, stack has {actual}")]
    FeatureMapCount {
        image_id: String,
        expected: u32,
        actual: u32,
    },
    #[error("image {image_id}: {path} is {found_width}x{found_height}, expected {width}x{height}")]
    DimensionMismatch {
        image_id: String,
        path: PathBuf,
        width: u32,
        height: u32,
        found_width: u32,
        found_height: u32,
    },
    #[error("invalid PGM: {0}")]
    Pgm(String),
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
}

impl IngestError {
    /// Stable machine-readable code for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io",
            IngestError::Parse(_) => "parse",
            IngestError::BadMagic { .. } => "bad-magic",
            IngestError::UnsupportedVersion(_) => "unsupported-version",
            IngestError::Truncated { .. } => "truncated",
            IngestError::TrailingData { .. } => "trailing-data",
            IngestError::ZeroDimensions { .. } => "zero-dimensions",
            IngestError::EmptyStack => "empty-stack",
            IngestError::DuplicateLabel(_) => "duplicate-label",
            IngestError::NonContiguousLabels(_) => "non-contiguous-labels",
            IngestError::UnknownSceneLabel { .. } => "unknown-scene-label",
            IngestError::DuplicateImage(_) => "duplicate-image",
            IngestError::EmptyConceptName(_) => "empty-concept-name",
            IngestError::DanglingReference { .. } => "dangling-reference",
            IngestError::FeatureMapCount { .. } => "feature-map-count",
            IngestError::DimensionMismatch { .. } => "dimension-mismatch",
            IngestError::Pgm(_) => "pgm",
            IngestError::InFile { source, .. } => source.code(),
        }
    }

    /// Strips any file-context wrappers.
    pub fn root(&self) -> &IngestError {
        match self {
            IngestError::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> IngestError {
        match self {
            e @ (IngestError::Io { .. } | IngestError::InFile { .. }) => e,
            e => IngestError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by malformed input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self.root(), IngestError::Io { .. })
    }
}

impl From<MaskError> for IngestError {
    fn from(e: MaskError) -> Self {
        match e {
            MaskError::ZeroDimensions { width, height } => {
                IngestError::ZeroDimensions { width, height }
            }
            MaskError::PayloadLength { expected, actual } => IngestError::Truncated {
                what: "payload",
                expected,
                actual,
            },
            other => IngestError::Parse(other.to_string()),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a mask from disk, dispatching on content: CMSK magic or a P5 greymap.
pub fn load_bitmask(path: impl AsRef<Path>) -> Result<crate::Bitmask, IngestError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let decoded = if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else {
        decode_bitmask(&bytes)
    };
    decoded.map_err(|e| e.in_file(path))
}

pub fn load_feature_stack(path: impl AsRef<Path>) -> Result<FeatureMapStack, IngestError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    decode_feature_stack(&bytes).map_err(|e| e.in_file(path))
}
