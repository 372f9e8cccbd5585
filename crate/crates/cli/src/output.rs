//! CSV files, number formatting and the run manifest.

use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::CliError;

pub const TOOL_VERSION: &str = concat!("dryland ", env!("CARGO_PKG_VERSION"));

/// 15 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0.00000000000000e0".into()
    } else {
        format!("{x:.14e}")
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Creates the output directory and checks that it is writable.
pub fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"").map_err(|e| CliError::Usage(format!("output directory {} not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

pub fn write_manifest(dir: &Path, command: &str, cfg: &Config, files: &[PathBuf]) -> Result<PathBuf, CliError> {
    let mut text = format!("tool = {TOOL_VERSION}\ncommand = {command}\n[config]\n");
    text.push_str(&cfg.to_text());
    text.push_str("[outputs]\n");
    for f in files {
        if let Some(name) = f.file_name() {
            text.push_str(&format!("{}\n", name.to_string_lossy()));
        }
    }
    let path = dir.join("manifest.txt");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(num(0.187), "1.87000000000000e-1");
        assert_eq!(num(-3.84), "-3.84000000000000e0");
        assert_eq!(num(0.0), "0.00000000000000e0");
        assert_eq!(num(f64::NAN), "nan");
        for x in [0.187, 1.0 / 3.0, 1e-300, 123456.789] {
            let y: f64 = num(x).parse().unwrap();
            assert!((y - x).abs() <= 1e-14 * x.abs());
        }
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let dir = std::env::temp_dir().join(format!("dryland-out-{}", std::process::id()));
        prepare_out(&dir).unwrap();
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![num(1.0), num(2.0)]);
        let p = dir.join("t.csv");
        t.write(&p).unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        assert_eq!(s, "x,y\n1.00000000000000e0,2.00000000000000e0\n");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
