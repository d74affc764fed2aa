//! Writes the CSV table and the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::{Artifacts, Table};

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io(path))
}

/// Writes the artifacts into `dir` and returns the paths written.
pub fn write_artifacts(dir: &Path, cfg: &ExperimentConfig, a: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if let Some(t) = &a.table {
        let p = dir.join(cfg.output.csv.as_deref().unwrap_or("diagnostics.csv"));
        write_table(&p, t)?;
        written.push(p);
    }
    let p = dir.join(cfg.output.summary.as_deref().unwrap_or("summary.json"));
    let mut text = serde_json::to_string_pretty(&a.summary)?;
    text.push('\n');
    fs::write(&p, text).map_err(io(&p))?;
    written.push(p);
    Ok(written)
}
