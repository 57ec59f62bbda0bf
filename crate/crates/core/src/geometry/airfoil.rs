//! Chord-normalized airfoil sections stored as camber line plus half
//! thickness.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilSection {
    stations: Vec<f64>,
    camber: Vec<f64>,
    half_thickness: Vec<f64>,
}

impl AirfoilSection {
    pub fn new(stations: Vec<f64>, camber: Vec<f64>, half_thickness: Vec<f64>) -> Result<Self> {
        let n = stations.len();
        if n < 2 || camber.len() != n || half_thickness.len() != n {
            return Err(Error::InvalidAirfoil(format!(
                "need matching station/camber/thickness columns of length >= 2 (got {n}, {}, {})",
                camber.len(),
                half_thickness.len()
            )));
        }
        if stations.iter().chain(&camber).chain(&half_thickness).any(|v| !v.is_finite()) {
            return Err(Error::InvalidAirfoil("non-finite value".into()));
        }
        if stations[0] != 0.0 || stations[n - 1] != 1.0 {
            return Err(Error::InvalidAirfoil("stations must start at 0 and end at 1".into()));
        }
        if stations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidAirfoil("stations must be strictly increasing".into()));
        }
        if half_thickness.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidAirfoil("negative half thickness".into()));
        }
        if camber[0] != 0.0 {
            return Err(Error::InvalidAirfoil("camber must vanish at the leading edge".into()));
        }
        Ok(Self { stations, camber, half_thickness })
    }

    /// NACA four-digit section on `n_points` cosine-spaced stations. For
    /// cambered codes the station nearest the camber peak is moved onto it.
    pub fn naca4(code: &str, n_points: usize) -> Result<Self> {
        let digits: Vec<u32> = code.chars().filter_map(|c| c.to_digit(10)).collect();
        if code.len() != 4 || digits.len() != 4 {
            return Err(Error::Parse { line: None, message: format!("NACA code `{code}` is not four digits") });
        }
        if n_points < 20 {
            return Err(Error::InvalidAirfoil(format!("n_points = {n_points} below 20")));
        }
        let m = digits[0] as f64 / 100.0;
        let p = digits[1] as f64 / 10.0;
        let t = (digits[2] * 10 + digits[3]) as f64 / 100.0;
        if p == 0.0 && m != 0.0 {
            return Err(Error::InvalidAirfoil(format!("NACA `{code}`: camber without a camber position")));
        }
        let mut stations: Vec<f64> =
            (0..n_points).map(|i| 0.5 * (1.0 - (PI * i as f64 / (n_points - 1) as f64).cos())).collect();
        if m > 0.0 {
            let nearest = (1..n_points - 1)
                .min_by(|&a, &b| (stations[a] - p).abs().total_cmp(&(stations[b] - p).abs()))
                .unwrap_or(1);
            stations[nearest] = p;
        }
        let camber = stations.iter().map(|&x| naca4_camber(x, m, p)).collect();
        let half_thickness = stations.iter().map(|&x| naca4_half_thickness(x, t)).collect();
        Self::new(stations, camber, half_thickness)
    }

    /// Whitespace-separated `x camber half_thickness` rows; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cols = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|e| Error::parse(lineno + 1, format!("`{f}`: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(Error::parse(lineno + 1, format!("expected 3 columns, found {}", vals.len())));
            }
            cols.0.push(vals[0]);
            cols.1.push(vals[1]);
            cols.2.push(vals[2]);
        }
        Self::new(cols.0, cols.1, cols.2)
    }

    /// Several sections separated by blank lines.
    pub fn parse_many(text: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let mut block = String::new();
        for line in text.lines().chain(std::iter::once("")) {
            if line.trim().is_empty() {
                if block.lines().any(|l| !l.split('#').next().unwrap_or("").trim().is_empty()) {
                    out.push(Self::parse(&block)?);
                }
                block.clear();
            } else {
                block.push_str(line);
                block.push('\n');
            }
        }
        Ok(out)
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn camber(&self) -> &[f64] {
        &self.camber
    }

    pub fn half_thickness(&self) -> &[f64] {
        &self.half_thickness
    }

    /// Largest camber-line deflection magnitude.
    pub fn max_camber(&self) -> f64 {
        self.camber.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    /// Copy whose camber line is rescaled so its peak deflection is `target`.
    pub fn scale_max_camber(&self, target: f64) -> Result<Self> {
        if !(target >= 0.0) || !target.is_finite() {
            return Err(Error::InvalidAirfoil(format!("camber target {target} must be nonnegative")));
        }
        let current = self.max_camber();
        if target == current {
            return Ok(self.clone());
        }
        if current == 0.0 {
            if target == 0.0 {
                return Ok(self.clone());
            }
            return Err(Error::CannotScale { target });
        }
        let factor = target / current;
        Ok(Self {
            stations: self.stations.clone(),
            camber: self.camber.iter().map(|c| c * factor).collect(),
            half_thickness: self.half_thickness.clone(),
        })
    }

    /// Closed outline as `(x, y)` pairs: lower surface trailing edge to
    /// leading edge, then upper surface back to the trailing edge. Surfaces are
    /// `camber -/+ half_thickness`.
    pub fn surface_points(&self) -> Vec<[f64; 2]> {
        let n = self.stations.len();
        let mut pts = Vec::with_capacity(2 * n - 1);
        for i in (0..n).rev() {
            pts.push([self.stations[i], self.camber[i] - self.half_thickness[i]]);
        }
        for i in 1..n {
            pts.push([self.stations[i], self.camber[i] + self.half_thickness[i]]);
        }
        pts
    }
}

pub fn naca4_camber(x: f64, m: f64, p: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else if x < p {
        m / (p * p) * (2.0 * p * x - x * x)
    } else {
        m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x)
    }
}

pub fn naca4_half_thickness(x: f64, t: f64) -> f64 {
    5.0 * t * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1015 * x.powi(4))
}
