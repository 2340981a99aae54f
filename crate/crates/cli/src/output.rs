//! Rendering and writing of CSV and JSON results.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Bumped whenever a JSON field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

/// Relative `--output` paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "RUDVALIS_OUTPUT_DIR";

/// Float in scientific notation with 17 significant digits, which
/// round-trips every `f64` and does not depend on locale.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A CSV table under construction.
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell {
    Int(u64),
    Float(f64),
    Empty,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match cell {
                Cell::Int(k) => write!(self.text, "{k}").unwrap(),
                Cell::Float(x) => self.text.push_str(&float(*x)),
                Cell::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// JSON document carrying the schema version and the resolved configuration.
pub fn envelope<C: Serialize>(
    command: &str,
    config: &C,
    warnings: &[String],
    result: Value,
) -> String {
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "warnings": warnings,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Where `--output` actually points once the environment default is applied.
pub fn resolve_output(path: Option<&Path>) -> Option<PathBuf> {
    let path = path?;
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Some(Path::new(&dir).join(path)),
        _ => Some(path.to_path_buf()),
    }
}

/// Writes to the resolved file, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match resolve_output(path) {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, text)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
