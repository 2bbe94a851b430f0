//! CSV emission and the run manifest.
//!
//! Dialect: comma separated, `.` decimal point, one header row, LF line
//! endings, floats at 17 significant digits. The manifest lists every file
//! the run produced with its SHA-256, so a consumer can check completeness.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// 17 significant digits; round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }


    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write a CSV file: header plus rows of preformatted cells.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{}", header.join(","));
        for row in rows {
            let _ = writeln!(text, "{}", row.join(","));
        }
        self.write(name, &text)
    }

    /// Emit the manifest last: config echo, version, timestamp and a
    /// checksum line per produced file.
    pub fn write_manifest(&mut self, kind: &str, echo: &[(String, String)]) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "experiment = {kind}");
        let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(text, "created_unix = {timestamp}");
        let _ = writeln!(text, "[config]");
        for (k, v) in echo {
            let _ = writeln!(text, "{k} = {v}");
        }
        let _ = writeln!(text, "[outputs]");
        for name in &self.files.clone() {
            let bytes = fs::read(self.root.join(name))?;
            let digest = Sha256::digest(&bytes);
            let mut hex = String::with_capacity(64);
            for b in digest {
                let _ = write!(hex, "{b:02x}");
            }
            let _ = writeln!(text, "{name} sha256={hex} bytes={}", bytes.len());
        }
        let path = self.root.join("manifest.txt");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let x = 0.971635406f64;
        let parsed: f64 = fmt_f64(x).parse().unwrap();
        assert_eq!(parsed, x);
    }
}
