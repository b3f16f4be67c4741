pub mod build;
pub mod eval;
pub mod pca;
pub mod query;
pub mod synth;
pub mod uncertainty;

use crate::{CliError, CliResult};
use std::path::{Path, PathBuf};

/// Expands frame arguments: a single directory becomes its sorted `.lbkf`
/// files, explicit paths are sorted by name. Ingestion order is always
/// lexicographic.
pub fn expand_frame_paths(args: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    if args.len() == 1 && args[0].is_dir() {
        let entries = std::fs::read_dir(&args[0])
            .map_err(|e| CliError::Data(anyhow::anyhow!("reading {}: {e}", args[0].display())))?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::Data(e.into()))?;
            let path = entry.path();
            if path.extension().is_some_and(|ext| ext == "lbkf") {
                paths.push(path);
            }
        }
    } else {
        for p in args {
            if p.is_dir() {
                return Err(CliError::usage(format!(
                    "{} is a directory; pass either one directory or a list of files",
                    p.display()
                )));
            }
            paths.push(p.clone());
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn require_config(config: Option<&Path>) -> Result<&Path, CliError> {
    config.ok_or_else(|| CliError::usage("this command needs --config <file>"))
}

/// Formats a float the way every exporter here does: shortest round-trip.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}

pub fn write_text(path: &Path, text: &str) -> CliResult {
    lbkmap_core::io::atomic_write(path, text.as_bytes())?;
    Ok(())
}
