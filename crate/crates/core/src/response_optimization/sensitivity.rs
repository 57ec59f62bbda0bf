//! Four-class sensitivity table from leading eigenvector weights.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensitivity {
    Dominant,
    Strong,
    Weak,
    Negligible,
}

impl Sensitivity {
    pub fn symbol(self) -> &'static str {
        match self {
            Sensitivity::Dominant => "++",
            Sensitivity::Strong => "+",
            Sensitivity::Weak => "+-",
            Sensitivity::Negligible => "-",
        }
    }
}

/// Lower edges of the `++`, `+` and `+-` classes on `|w_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub dominant: f64,
    pub strong: f64,
    pub weak: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { dominant: 0.30, strong: 0.15, weak: 0.05 }
    }
}

impl Thresholds {
    pub fn classify(&self, w: f64) -> Sensitivity {
        let a = w.abs();
        if a >= self.dominant {
            Sensitivity::Dominant
        } else if a >= self.strong {
            Sensitivity::Strong
        } else if a >= self.weak {
            Sensitivity::Weak
        } else {
            Sensitivity::Negligible
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable {
    pub outputs: Vec<String>,
    pub labels: Vec<String>,
    /// `classes[i][k]`: parameter `i`, output `k`.
    pub classes: Vec<Vec<Sensitivity>>,
    /// Outputs whose vector had to be normalized.
    pub renormalized: Vec<String>,
}

/// Classifies each output's leading eigenvector. Vectors that are not unit
/// length are normalized first, with a warning.
pub fn sensitivity_table(
    vectors: &[(String, DVector<f64>)],
    labels: &[String],
    thresholds: &Thresholds,
) -> Result<SensitivityTable> {
    let m = labels.len();
    let mut renormalized = Vec::new();
    let mut unit = Vec::with_capacity(vectors.len());
    for (name, v) in vectors {
        if v.len() != m {
            return Err(Error::Shape { expected: m, found: v.len() });
        }
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::Data(format!("eigenvector for `{name}` is zero")));
        }
        if (norm - 1.0).abs() > 1e-9 {
            log::warn!("eigenvector for `{name}` has norm {norm}; normalizing");
            renormalized.push(name.clone());
        }
        unit.push(v / norm);
    }
    let classes = (0..m).map(|i| unit.iter().map(|v| thresholds.classify(v[i])).collect()).collect();
    Ok(SensitivityTable {
        outputs: vectors.iter().map(|(n, _)| n.clone()).collect(),
        labels: labels.to_vec(),
        classes,
        renormalized,
    })
}

impl SensitivityTable {
    /// Aligned text; a blank line separates the pitch and camber blocks.
    pub fn to_text(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(9);
        let mut s = format!("{:<width$}", "parameter");
        for o in &self.outputs {
            let _ = write!(s, "  {o:>6}");
        }
        s.push('\n');
        let mut last_block = None;
        for (label, row) in self.labels.iter().zip(&self.classes) {
            let block = label.split(" - ").next().unwrap_or("");
            if last_block.is_some_and(|b| b != block) {
                s.push('\n');
            }
            last_block = Some(block);
            let _ = write!(s, "{label:<width$}");
            for c in row {
                let _ = write!(s, "  {:>6}", c.symbol());
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("parameter,{}\n", self.outputs.join(","));
        for (label, row) in self.labels.iter().zip(&self.classes) {
            let cells: Vec<&str> = row.iter().map(|c| c.symbol()).collect();
            let _ = writeln!(s, "{label},{}", cells.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(m: usize) -> Vec<String> {
        (1..=m / 2).map(|i| format!("pitch - {i}")).chain((1..=m / 2).map(|i| format!("camber - {i}"))).collect()
    }

    #[test]
    fn unit_vector() {
        let mut w = DVector::zeros(20);
        w[0] = 1.0;
        let t = sensitivity_table(&[("pmax".into(), w)], &labels(20), &Thresholds::default()).unwrap();
        assert_eq!(t.classes[0][0], Sensitivity::Dominant);
        assert!(t.classes[1..].iter().all(|r| r[0] == Sensitivity::Negligible));
        assert!(t.renormalized.is_empty());
    }

    #[test]
    fn thresholds_apply() {
        let mut w: DVector<f64> = DVector::from_vec(vec![0.6, 0.2, 0.1, 0.02, 0.0, 0.0]);
        let rest = (1.0 - w.norm_squared()).sqrt();
        w[4] = -0.03;
        w[5] = (rest * rest - 0.03 * 0.03).sqrt();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let t = sensitivity_table(&[("kt".into(), w)], &labels(6), &Thresholds::default()).unwrap();
        let symbols: Vec<&str> = t.classes.iter().map(|r| r[0].symbol()).collect();
        assert_eq!(&symbols[..5], &["++", "+", "+-", "-", "-"]);
        let th = Thresholds::default();
        assert_eq!(th.classify(0.30), Sensitivity::Dominant);
        assert_eq!(th.classify(-0.15), Sensitivity::Strong);
        assert_eq!(th.classify(0.05), Sensitivity::Weak);
    }

    #[test]
    fn table_layout_and_normalization() {
        let names = ["kt", "eta", "pmax", "fmax"];
        let vectors: Vec<(String, DVector<f64>)> = names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.to_string(), DVector::from_fn(20, |i, _| ((i + k) % 7) as f64 + 0.5)))
            .collect();
        let t = sensitivity_table(&vectors, &labels(20), &Thresholds::default()).unwrap();
        assert_eq!(t.renormalized.len(), 4);
        assert_eq!(t.classes.len(), 20);
        assert!(t.classes.iter().all(|r| r.len() == 4));
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 22);
        assert!(lines[1].starts_with("pitch - 1 "));
        assert!(lines[11].is_empty());
        assert!(lines[12].starts_with("camber - 1 "));
        assert!(lines[21].starts_with("camber - 10"));
        assert_eq!(t.to_csv().lines().count(), 21);
        assert!(sensitivity_table(&[("x".into(), DVector::zeros(20))], &labels(20), &Thresholds::default()).is_err());
    }
}
