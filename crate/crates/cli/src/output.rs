//! File writers shared by the subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(())
}

/// Header row plus float rows.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
    ensure_parent(path)?;
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt17(*x)))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

pub fn write_json_lines<T: Serialize>(path: &Path, values: &[T]) -> Result<PathBuf, CliError> {
    ensure_parent(path)?;
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for v in values {
        let line = serde_json::to_string(v)?;
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    Ok(path.to_path_buf())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}
