//! Machine-readable output helpers: versioned JSON documents and plain
//! CSV tables with deterministic formatting.

use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Version stamp carried by every emitted document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub payload: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(command: &'static str, payload: T) -> Self {
        Document { schema_version: SCHEMA_VERSION, command, payload }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }
}

/// Write a CSV table. Floats use Rust's shortest round-trip formatting,
/// which is deterministic for identical inputs.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn fmt_f(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_c(v: num_complex::Complex64) -> (String, String) {
    (format!("{}", v.re), format!("{}", v.im))
}
