//! CSV emission: UTF-8, LF line endings, `.` decimal, fixed significant
//! digits, and a leading comment line recording the config hash and the
//! effective parameters so every file is traceable to its run.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::Result;

/// Hex SHA-256 of the raw config file contents.
pub fn config_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("write to string");
    }
    out
}

/// Format with `sig` significant digits; integers in the grid columns stay
/// readable, everything else is scientific.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{:.*e}", sig.saturating_sub(1), x)
}

/// Accumulates one CSV table: comment line, header, rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    precision: usize,
    lines: Vec<String>,
}

impl CsvTable {
    /// `params` is the free-form parameter record echoed in the comment line.
    pub fn new(columns: &[&str], config_sha: &str, params: &str, precision: usize) -> Self {
        let comment = format!("# config_sha256={config_sha} {params}");
        let header = columns.join(",");
        Self {
            precision,
            lines: vec![comment, header],
        }
    }

    pub fn row(&mut self, values: &[CsvValue]) {
        let line = values
            .iter()
            .map(|v| match v {
                CsvValue::Real(x) => fmt_sig(*x, self.precision),
                CsvValue::Int(i) => i.to_string(),
                CsvValue::Text(s) => s.clone(),
            })
            .collect::<Vec<_>>()
            .join(",");
        self.lines.push(line);
    }

    pub fn to_string(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_string().as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum CsvValue {
    Real(f64),
    Int(i64),
    Text(String),
}

/// Destination directory helper: `<out>/<name>.csv`.
pub fn csv_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(format!("{name}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_hex() {
        let h = config_hash("abc");
        assert_eq!(h.len(), 64);
        assert_eq!(
            h,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sig_digit_formatting() {
        assert_eq!(fmt_sig(0.0, 12), "0");
        let s = fmt_sig(1.0 / 3.0, 12);
        assert_eq!(s, "3.33333333333e-1");
        assert_eq!(fmt_sig(322.85, 6), "3.22850e2");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(&["t_ps", "p1"], "deadbeef", "command=evolve gamma=1", 6);
        t.row(&[CsvValue::Real(0.002), CsvValue::Real(0.99)]);
        t.row(&[CsvValue::Int(3), CsvValue::Text("x".into())]);
        let s = t.to_string();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("# config_sha256=deadbeef"));
        assert_eq!(lines[1], "t_ps,p1");
        assert_eq!(lines[2], "2.00000e-3,9.90000e-1");
        assert_eq!(lines[3], "3,x");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn write_creates_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = csv_path(&dir.path().join("nested"), "table");
        let t = CsvTable::new(&["a"], "00", "p", 12);
        t.write_to(&path).unwrap();
        assert!(path.exists());
    }
}
