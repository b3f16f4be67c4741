//! File formats and persistence.
//!
//! All binary formats are little-endian, magic-tagged, and versioned. Writes
//! go to a temporary file in the target directory and are renamed into place,
//! so readers never observe partial files.

mod config;
mod dict_file;
mod frame_file;
mod map_file;
mod pca_file;
mod ply;

pub use config::{EvalConfig, MapConfig, SceneConfig};
pub use dict_file::{read_dict, write_dict, DICT_MAGIC};
pub use frame_file::{read_frame, write_frame, FRAME_MAGIC};
pub use map_file::{read_map, write_map, MAP_MAGIC};
pub use pca_file::{read_pca, write_pca, PCA_MAGIC};
pub use ply::{category_color, write_ply, PlyPoint};

use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: bad magic, not a {expected} file")]
    BadMagic { path: String, expected: String },
    #[error("{path}: unsupported version {got} (expected {expected})")]
    BadVersion {
        path: String,
        got: u16,
        expected: u16,
    },
    #[error("{path}: truncated payload")]
    Truncated { path: String },
    #[error("{path}: {got} trailing bytes after the last record")]
    TrailingBytes { path: String, got: usize },
    #[error("{path}: non-finite value in record {record}")]
    NonFinite { path: String, record: usize },
    #[error("{path}: invalid field {field}: {reason}")]
    InvalidField {
        path: String,
        field: String,
        reason: String,
    },
    #[error("{path}:{line}: unknown key {key:?}")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: duplicate key {key:?}")]
    DuplicateKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: expected key = value")]
    MalformedLine { path: String, line: usize },
    #[error("{path}: missing required key {key:?}")]
    MissingKey { path: String, key: String },
    #[error("{path}:{line}: bad value for {key}: {reason}")]
    BadValue {
        path: String,
        line: usize,
        key: String,
        reason: String,
    },
    #[error("frame mixes points with and without the {field} field")]
    MixedOptionalField { field: String },
    #[error(transparent)]
    Map(#[from] crate::map::MapError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
    #[error(transparent)]
    Inference(#[from] crate::inference::InferenceError),
    #[error(transparent)]
    Pca(#[from] crate::pca::PcaError),
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn read_error(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::UnexpectedEof {
            Self::Truncated {
                path: path.display().to_string(),
            }
        } else {
            Self::io(path, source)
        }
    }
}

/// Writes `bytes` to `path` atomically: temp file in the same directory, then
/// rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{file_name}."))
        .suffix(".tmp")
        .tempfile_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(|e| FormatError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| FormatError::io(path, e))?;
    tmp.flush().map_err(|e| FormatError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| FormatError::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_all(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|e| FormatError::io(path, e))
}
