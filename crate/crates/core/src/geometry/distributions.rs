//! Radial distribution curves of a blade and the tabulated baseline they are
//! fitted from.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spline::{BSplineCurve, SplineFit};

/// Bundled five-blade baseline table.
pub const BUNDLED_BASELINE: &str = include_str!("../../data/baseline_blade.txt");

/// Tabulated blade: columns `r/R chord/D P/D skew/D rake/D max_camber/chord`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub r_over_r: Vec<f64>,
    pub chord: Vec<f64>,
    pub pitch: Vec<f64>,
    pub skew: Vec<f64>,
    pub rake: Vec<f64>,
    pub max_camber: Vec<f64>,
}

impl BaselineTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cols: [Vec<f64>; 6] = Default::default();
        for (lineno, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let vals: Vec<f64> = body
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|e| Error::parse(lineno + 1, format!("`{f}`: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 6 {
                return Err(Error::parse(lineno + 1, format!("expected 6 columns, found {}", vals.len())));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(lineno + 1, "non-finite value"));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        let [r_over_r, chord, pitch, skew, rake, max_camber] = cols;
        if r_over_r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema("r/R column must be strictly increasing".into()));
        }
        if r_over_r.first().is_some_and(|&x| x <= 0.0) || r_over_r.last().is_some_and(|&x| x > 1.0) {
            return Err(Error::Schema("r/R values must lie in (0, 1]".into()));
        }
        Ok(Self { r_over_r, chord, pitch, skew, rake, max_camber })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_BASELINE).expect("bundled baseline table is valid")
    }

    pub fn len(&self) -> usize {
        self.r_over_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_over_r.is_empty()
    }

    /// Fits all five curves with the same spline settings.
    pub fn fit(&self, fit: &SplineFit, diameter: f64, n_blades: usize) -> Result<RadialDistributions> {
        let x = &self.r_over_r;
        RadialDistributions::new(
            fit.fit(x, &self.chord)?,
            fit.fit(x, &self.pitch)?,
            fit.fit(x, &self.skew)?,
            fit.fit(x, &self.rake)?,
            fit.fit(x, &self.max_camber)?,
            diameter / 2.0,
            n_blades,
        )
    }
}

/// Chord, pitch, skew and rake (all per unit diameter) and maximum camber
/// (per unit chord) as functions of `r/R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDistributions {
    pub chord: BSplineCurve,
    pub pitch: BSplineCurve,
    pub skew: BSplineCurve,
    pub rake: BSplineCurve,
    pub max_camber: BSplineCurve,
    radius: f64,
    n_blades: usize,
}

const CURVE_NAMES: [&str; 5] = ["chord", "pitch", "skew", "rake", "max_camber"];

impl RadialDistributions {
    pub fn new(
        chord: BSplineCurve,
        pitch: BSplineCurve,
        skew: BSplineCurve,
        rake: BSplineCurve,
        max_camber: BSplineCurve,
        radius: f64,
        n_blades: usize,
    ) -> Result<Self> {
        let d = Self { chord, pitch, skew, rake, max_camber, radius, n_blades };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || self.n_blades == 0 {
            return Err(Error::Geometry("radius and blade count must be positive".into()));
        }
        let domain = self.chord.domain();
        for c in self.curves() {
            if c.dim() != 1 {
                return Err(Error::Geometry("radial distributions must be scalar curves".into()));
            }
            if c.domain() != domain {
                return Err(Error::Geometry("radial distributions must share one parameter domain".into()));
            }
        }
        if !(domain.0 > 0.0) || domain.1 > 1.0 + 1e-12 {
            return Err(Error::Geometry(format!("domain [{}, {}] is not a hub-to-tip r/R range", domain.0, domain.1)));
        }
        for k in 0..=200 {
            let x = domain.0 + (domain.1 - domain.0) * k as f64 / 200.0;
            let c = self.chord.eval1(x)?;
            if !(c > 0.0) {
                return Err(Error::Geometry(format!("chord {c} <= 0 at r/R = {x:.4}")));
            }
        }
        Ok(())
    }

    pub fn curves(&self) -> [&BSplineCurve; 5] {
        [&self.chord, &self.pitch, &self.skew, &self.rake, &self.max_camber]
    }

    /// Blade tip radius `R` (m).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn hub_radius(&self) -> f64 {
        self.chord.domain().0 * self.radius
    }

    pub fn n_blades(&self) -> usize {
        self.n_blades
    }

    /// `[r_hub/R, 1]` parameter domain.
    pub fn domain(&self) -> (f64, f64) {
        self.chord.domain()
    }

    pub fn with_pitch(&self, pitch: BSplineCurve) -> Result<Self> {
        Self::new(
            self.chord.clone(),
            pitch,
            self.skew.clone(),
            self.rake.clone(),
            self.max_camber.clone(),
            self.radius,
            self.n_blades,
        )
    }

    pub fn with_max_camber(&self, max_camber: BSplineCurve) -> Result<Self> {
        Self::new(
            self.chord.clone(),
            self.pitch.clone(),
            self.skew.clone(),
            self.rake.clone(),
            max_camber,
            self.radius,
            self.n_blades,
        )
    }

    /// Text form: a short header followed by one spline record per curve,
    /// each introduced by a `curve,<name>` line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "radius,{:?}", self.radius);
        let _ = writeln!(s, "n_blades,{}", self.n_blades);
        for (name, c) in CURVE_NAMES.iter().zip(self.curves()) {
            let _ = writeln!(s, "curve,{name}");
            s.push_str(&c.to_record());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut radius = None;
        let mut n_blades = None;
        let mut blocks: Vec<(String, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if let Some(v) = trimmed.strip_prefix("radius,") {
                radius = Some(v.trim().parse::<f64>().map_err(|e| Error::parse(lineno + 1, e.to_string()))?);
            } else if let Some(v) = trimmed.strip_prefix("n_blades,") {
                n_blades = Some(v.trim().parse::<usize>().map_err(|e| Error::parse(lineno + 1, e.to_string()))?);
            } else if let Some(name) = trimmed.strip_prefix("curve,") {
                blocks.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = blocks.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Err(Error::parse(lineno + 1, format!("unexpected line `{trimmed}`")));
            }
        }
        let mut curves = Vec::with_capacity(5);
        for name in CURVE_NAMES {
            let body = blocks
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b)
                .ok_or_else(|| Error::Schema(format!("missing curve `{name}`")))?;
            curves.push(BSplineCurve::from_record(body)?);
        }
        let mut it = curves.into_iter();
        let mut next = || it.next().expect("five curves");
        Self::new(
            next(),
            next(),
            next(),
            next(),
            next(),
            radius.ok_or_else(|| Error::Schema("missing radius".into()))?,
            n_blades.ok_or_else(|| Error::Schema("missing n_blades".into()))?,
        )
    }
}
