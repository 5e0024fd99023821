//! CSV tables and the per-run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::RunError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

/// Write rows as CSV with a header. An empty table still gets its header.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(io(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io(path))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

#[derive(Debug, Serialize)]
struct Versions {
    risnoma: &'static str,
    risnoma_core: &'static str,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    mc: bool,
    versions: Versions,
    outputs: Vec<String>,
    config: &'a ExperimentConfig,
}

/// Record what produced a run directory: command, seed, versions and the
/// full effective configuration.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    mc: bool,
    outputs: &[PathBuf],
) -> Result<(), RunError> {
    let manifest = Manifest {
        command,
        seed: cfg.seed,
        mc,
        versions: Versions {
            risnoma: env!("CARGO_PKG_VERSION"),
            risnoma_core: risnoma_core::VERSION,
        },
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect(),
        config: cfg,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}
