//! CSV and JSON result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::sweep::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to regenerate a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Preset name, `sweep:<variable>` or `single`.
    pub run: String,
    pub seed: u64,
    pub config: SystemConfig,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub iterations: std::collections::BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(run: impl Into<String>, config: &SystemConfig, table: &ResultTable, started: SystemTime) -> Self {
        let now = SystemTime::now();
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            run: run.into(),
            seed: config.seed,
            config: config.clone(),
            started_unix_s: started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            wall_clock_s: now.duration_since(started).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            iterations: table.iterations.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonResults {
    pub manifest: RunManifest,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<crate::sweep::Cell>>,
}

/// Header plus one line per row, comma-separated, 17 significant digits.
pub fn write_csv<W: Write>(table: &ResultTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub fn to_csv_string(table: &ResultTable) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `table` to `path` (or stdout when `path` is `None`).
pub fn emit(table: &ResultTable, manifest: &RunManifest, format: Format, path: Option<&Path>) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::invalid("results", "nothing to write"));
    }
    let display: PathBuf = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let writer: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(table, writer).map_err(io_err(&display)),
        Format::Json => {
            let doc = JsonResults {
                manifest: manifest.clone(),
                columns: table.columns.clone(),
                rows: table.rows.clone(),
            };
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, &doc).map_err(|source| Error::Json {
                path: display.clone(),
                source,
            })?;
            writeln!(writer).and_then(|_| writer.flush()).map_err(io_err(&display))
        }
    }
}

/// Reads a JSON result file written by [`emit`].
pub fn read_json(path: &Path) -> Result<JsonResults> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
