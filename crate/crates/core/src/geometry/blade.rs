//! Placement of planar sections on coaxial cylinders, lofting and blade
//! replication. The propeller axis is `x`; a section at radius `r` is wrapped
//! onto the cylinder `y^2 + z^2 = r^2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::airfoil::AirfoilSection;
use crate::geometry::distributions::RadialDistributions;

pub type Point3 = [f64; 3];

/// Pitch angle of the helix with pitch length `pitch` at radius `r`.
pub fn pitch_angle(pitch: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { value: r, lo: 0.0, hi: f64::INFINITY });
    }
    Ok((pitch / (2.0 * PI * r)).atan())
}

/// Dimensional placement of one section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPlacement {
    pub radius: f64,
    pub chord: f64,
    pub pitch: f64,
    pub skew: f64,
    pub rake: f64,
}

/// Scale by chord about mid-chord, translate by skew, rotate by the pitch
/// angle, offset axially by rake, then wrap the chordwise coordinate onto the
/// cylinder as arc length.
pub fn place_section(section: &AirfoilSection, at: &SectionPlacement) -> Result<Vec<Point3>> {
    let SectionPlacement { radius: r, chord, pitch, skew, rake } = *at;
    if !(r > 0.0) {
        return Err(Error::Geometry(format!("section radius {r} must be positive")));
    }
    if !(chord > 0.0) {
        return Err(Error::Geometry(format!("chord {chord} must be positive at r = {r}")));
    }
    if !((skew + chord).abs() < 2.0 * PI * r) {
        return Err(Error::Geometry(format!(
            "section at r = {r} wraps more than one turn (skew {skew}, chord {chord})"
        )));
    }
    let phi = pitch_angle(pitch, r)?;
    let (s, c) = phi.sin_cos();
    Ok(section
        .surface_points()
        .into_iter()
        .map(|[x, y]| {
            let xi = (x - 0.5) * chord + skew;
            let eta = y * chord;
            let u = xi * c - eta * s;
            let v = xi * s + eta * c;
            let theta = u / r;
            [rake + v, r * theta.cos(), r * theta.sin()]
        })
        .collect())
}

/// Structured blade surface: rows run root to tip, columns follow the section
/// outline.
#[derive(Debug, Clone, PartialEq)]
pub struct BladeGeometry {
    pub grid: Vec<Vec<Point3>>,
    pub section_radii: Vec<f64>,
}

impl BladeGeometry {
    pub fn n_radial(&self) -> usize {
        self.grid.len()
    }

    pub fn n_chordwise(&self) -> usize {
        self.grid.first().map_or(0, Vec::len)
    }

    pub fn n_points(&self) -> usize {
        self.grid.iter().map(Vec::len).sum()
    }

    /// Rotation by `angle` about the propeller axis.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            grid: self
                .grid
                .iter()
                .map(|row| row.iter().map(|&[x, y, z]| [x, y * c - z * s, y * s + z * c]).collect())
                .collect(),
            section_radii: self.section_radii.clone(),
        }
    }

    /// Largest `|y^2 + z^2 - r^2|` over all rows.
    pub fn cylinder_residual(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.section_radii)
            .flat_map(|(row, &r)| row.iter().map(move |p| (p[1] * p[1] + p[2] * p[2] - r * r).abs()))
            .fold(0.0, f64::max)
    }
}

/// Base profile(s) for lofting.
#[derive(Debug, Clone)]
pub enum SectionSource {
    Single(AirfoilSection),
    PerStation(Vec<AirfoilSection>),
}

impl SectionSource {
    fn at(&self, k: usize) -> &AirfoilSection {
        match self {
            SectionSource::Single(s) => s,
            SectionSource::PerStation(v) => &v[k],
        }
    }
}

/// `r/R` values of `n_radial` uniformly spaced stations, root to tip.
pub fn station_fractions(dist: &RadialDistributions, n_radial: usize) -> Vec<f64> {
    let (lo, hi) = dist.domain();
    (0..n_radial)
        .map(|k| if k + 1 == n_radial { hi } else { lo + (hi - lo) * k as f64 / (n_radial - 1) as f64 })
        .collect()
}

/// Dimensional placement of the station at `x = r/R`.
pub fn placement_at(dist: &RadialDistributions, x: f64) -> Result<SectionPlacement> {
    let d = dist.diameter();
    Ok(SectionPlacement {
        radius: x * dist.radius(),
        chord: dist.chord.eval1(x)? * d,
        pitch: dist.pitch.eval1(x)? * d,
        skew: dist.skew.eval1(x)? * d,
        rake: dist.rake.eval1(x)? * d,
    })
}

pub fn loft_blade(dist: &RadialDistributions, sections: &SectionSource, n_radial: usize) -> Result<BladeGeometry> {
    if n_radial < 2 {
        return Err(Error::Geometry(format!("n_radial = {n_radial} below 2")));
    }
    if let SectionSource::PerStation(v) = sections {
        if v.len() != n_radial {
            return Err(Error::Shape { expected: n_radial, found: v.len() });
        }
    }
    let mut grid = Vec::with_capacity(n_radial);
    let mut radii = Vec::with_capacity(n_radial);
    for (k, x) in station_fractions(dist, n_radial).into_iter().enumerate() {
        let at = placement_at(dist, x)?;
        if !(at.chord > 0.0) {
            return Err(Error::Geometry(format!("chord {} <= 0 at r/R = {x:.4}", at.chord)));
        }
        let camber = dist.max_camber.eval1(x)?;
        let section = sections.at(k).scale_max_camber(camber)?;
        grid.push(place_section(&section, &at)?);
        radii.push(at.radius);
    }
    Ok(BladeGeometry { grid, section_radii: radii })
}

/// Blade `k` is blade 0 rotated by `2 pi k / n_blades` about the axis.
pub fn replicate_propeller(blade: &BladeGeometry, n_blades: usize) -> Result<Vec<BladeGeometry>> {
    if n_blades == 0 {
        return Err(Error::Geometry("n_blades must be at least 1".into()));
    }
    Ok((0..n_blades)
        .map(|k| if k == 0 { blade.clone() } else { blade.rotated(2.0 * PI * k as f64 / n_blades as f64) })
        .collect())
}
