//! Design/response table.
//!
//! On disk: `# key=value` metadata lines, a header `mu_1..mu_m` followed by
//! the output names, then one comma-separated row per design with 17
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::textio;

/// Required output columns, in surrogate order.
pub const OUTPUT_NAMES: [&str; 4] = ["kt", "eta", "pmax", "fmax"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Surrogate,
    Ingested,
}

impl DataSource {
    fn tag(self) -> &'static str {
        match self {
            DataSource::Surrogate => "surrogate",
            DataSource::Ingested => "ingested",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    output_names: Vec<String>,
    source: DataSource,
    metadata: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DMatrix<f64>,
        output_names: Vec<String>,
        source: DataSource,
        metadata: Vec<(String, String)>,
    ) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Shape { expected: x.nrows(), found: y.nrows() });
        }
        if y.ncols() != output_names.len() {
            return Err(Error::Shape { expected: y.ncols(), found: output_names.len() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        for name in OUTPUT_NAMES {
            if !output_names.iter().any(|n| n == name) {
                return Err(Error::Schema(format!("missing output column `{name}`")));
            }
        }
        Ok(Self { x, y, output_names, source, metadata })
    }

    /// `n x m` normalized designs.
    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `n x k` outputs.
    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn source(&self) -> DataSource {
        self.source
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
        self
    }

    pub fn output(&self, name: &str) -> Result<DVector<f64>> {
        let j = self
            .output_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("no output column `{name}`")))?;
        Ok(self.y.column(j).into_owned())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# source={}", self.source.tag());
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        let header: Vec<String> =
            (1..=self.n_params()).map(|i| format!("mu_{i}")).chain(self.output_names.iter().cloned()).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for i in 0..self.n_samples() {
            let row: Vec<String> =
                self.x.row(i).iter().chain(self.y.row(i).iter()).map(|&v| textio::fmt17(v)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses a dataset file. Files without a `source=surrogate` line are
    /// tagged as ingested.
    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut source = DataSource::Ingested;
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(meta) = trimmed.strip_prefix('#') {
                if header.is_none() {
                    if let Some((k, v)) = meta.split_once('=') {
                        let (k, v) = (k.trim(), v.trim());
                        if k == "source" {
                            source = if v == "surrogate" { DataSource::Surrogate } else { DataSource::Ingested };
                        } else {
                            metadata.push((k.to_string(), v.to_string()));
                        }
                    }
                }
                continue;
            }
            match &header {
                None => header = Some(trimmed.split(',').map(|f| f.trim().to_string()).collect()),
                Some(h) => {
                    let row = textio::parse_row(trimmed, lineno)?;
                    if row.len() != h.len() {
                        return Err(Error::parse(lineno, format!("expected {} values, found {}", h.len(), row.len())));
                    }
                    rows.push(row);
                }
            }
        }
        let header = header.ok_or_else(|| Error::Schema("missing header line".into()))?;
        let m = header.iter().take_while(|h| h.starts_with("mu_")).count();
        for (i, h) in header[..m].iter().enumerate() {
            if *h != format!("mu_{}", i + 1) {
                return Err(Error::Schema(format!("expected column `mu_{}`, found `{h}`", i + 1)));
            }
        }
        if m == 0 {
            return Err(Error::Schema("no input columns `mu_1..`".into()));
        }
        let names: Vec<String> = header[m..].to_vec();
        if let Some(bad) = names.iter().find(|n| n.starts_with("mu_")) {
            return Err(Error::Schema(format!("input column `{bad}` after output columns")));
        }
        let n = rows.len();
        let x = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        let y = DMatrix::from_fn(n, names.len(), |i, j| rows[i][m + j]);
        Self::new(x, y, names, source, metadata)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write(path, self.to_csv())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&textio::read_to_string(path)?)
    }
}
