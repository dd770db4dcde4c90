//! Output files: pretty JSON at full precision, CSV at six significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// `x` rounded to six significant digits.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Shortest text that parses back to `x`, in exponent form for extreme magnitudes.
pub fn format_value(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Rows already rounded with [`round6`]; written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().copied().map(round6).collect());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
        w.write_record(&self.header).map_err(|e| CliError::io(path, e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))
                .map_err(|e| CliError::io(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    #[cfg(test)]
    pub fn read(path: &Path) -> Result<Self, String> {
        let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
        let header = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| {
                let rec = rec.map_err(|e| e.to_string())?;
                rec.iter()
                    .map(|f| f.parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_six_digits() {
        assert_eq!(round6(3.125), 3.125);
        assert_eq!(round6(3.1234567), 3.12346);
        assert_eq!(round6(1.234567e-7), 1.23457e-7);
        assert_eq!(round6(0.0), 0.0);
        assert_eq!(round6(98765432.1), 98765400.0);
        assert_eq!(format_value(round6(-1.1934912e-15)), "-1.19349e-15");
        assert_eq!(format_value(0.25), "0.25");
    }

    #[test]
    fn table_round_trip() {
        let dir = std::env::temp_dir().join(format!("aoi-table-{}", std::process::id()));
        ensure_dir(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut t = Table::new(&["x", "y"]);
        for i in 0..50 {
            let x = i as f64 * 0.37;
            t.push(&[x, (-x).exp() / 3.0]);
        }
        t.write(&path).unwrap();
        assert_eq!(Table::read(&path).unwrap(), t);
        fs::remove_dir_all(dir).unwrap();
    }
}
