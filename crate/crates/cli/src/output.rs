//! Long-format CSV files with a commented provenance header.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::Value;

use crate::config::{Resolved, Run};
use crate::error::CliResult;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// The `#` lines every output file starts with.
pub fn header_lines(resolved: &Resolved, run: &Run) -> Vec<String> {
    let mut lines = vec![format!("# ssep-lab {}", env!("CARGO_PKG_VERSION")), format!("# command = {}", resolved.command())];
    let echo = match resolved.echo() {
        Value::Object(map) => map,
        _ => Default::default(),
    };
    lines.extend(echo.iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| format!("# {k} = {}", scalar(v))));
    if !echo.contains_key("convention") {
        lines.push(format!("# convention = {}", resolved.convention()));
    }
    if !run.deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        lines.push(format!("# generated_unix = {now}"));
    }
    lines
}

pub struct CsvFile {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, resolved: &Resolved, run: &Run, columns: &str) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut inner = BufWriter::new(File::create(&path)?);
        for line in header_lines(resolved, run) {
            writeln!(inner, "{line}")?;
        }
        writeln!(inner, "{columns}")?;
        Ok(Self { path, inner })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        writeln!(self.inner, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.inner.flush()?;
        Ok(self.path)
    }
}
