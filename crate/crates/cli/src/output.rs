//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Failure, EXIT_FAILURE};

/// Writes through a temporary file in the target directory, then renames, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `r.json` stays as is for a single cell; sweep cells become `r.03.json`,
/// or `dir/cell-03` for directory outputs.
pub fn cell_path(base: &Path, index: usize, cells: usize, is_dir: bool) -> PathBuf {
    if cells <= 1 {
        return base.to_path_buf();
    }
    let width = (cells - 1).to_string().len();
    if is_dir {
        return base.join(format!("cell-{index:0width$}"));
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{index:0width$}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{index:0width$}"),
    };
    base.with_file_name(name)
}
