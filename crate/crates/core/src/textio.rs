//! Small helpers shared by the CSV readers and writers.

use std::path::Path;

use crate::error::{Error, Result};

/// 17 significant digits: enough for a lossless `f64` round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses one comma-separated numeric row, rejecting non-finite values.
pub fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            let v = f.trim().parse::<f64>().map_err(|e| Error::parse(lineno, format!("`{}`: {e}", f.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Data(format!("non-finite value `{}` at line {lineno}", f.trim())))
            }
        })
        .collect()
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
