//! Pipeline settings: built-in defaults, overridden by a flat `key = value`
//! TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::active_subspace::{ActiveDim, GradientMethod};
use crate::error::{Error, Result};
use crate::evaluation::{BemSettings, OperatingPoint};
use crate::geometry::SurfaceFormat;
use crate::textio;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BLADEOPT_OUT";
pub const DEFAULT_OUT_DIR: &str = "bladeopt-out";

/// `auto` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Fixed(T),
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            Ok(Auto::Auto)
        } else {
            s.trim().parse().map(Auto::Fixed).map_err(|_| format!("expected `auto` or a number, got `{s}`"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientChoice {
    LocalLinear,
    GlobalLinear,
}

impl FromStr for GradientChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "local-linear" => Ok(GradientChoice::LocalLinear),
            "global-linear" => Ok(GradientChoice::GlobalLinear),
            other => Err(format!("unknown gradient method `{other}` (local-linear | global-linear)")),
        }
    }
}

pub fn parse_format(s: &str) -> std::result::Result<SurfaceFormat, String> {
    match s.trim() {
        "stl" => Ok(SurfaceFormat::Stl),
        "csv" => Ok(SurfaceFormat::GridCsv),
        other => Err(format!("unknown surface format `{other}` (stl | csv)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Baseline table; `None` uses the bundled blade.
    pub baseline: Option<PathBuf>,
    /// Section coordinate file; `None` uses the NACA section below.
    pub airfoil: Option<PathBuf>,
    pub naca: String,
    pub airfoil_points: usize,
    pub out_dir: PathBuf,
    pub m: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub diameter: f64,
    pub n_blades: usize,
    pub va: f64,
    pub n_rps: f64,
    pub rho: f64,
    pub stations: usize,
    pub pitch_scale: Auto<f64>,
    pub camber_scale: Auto<f64>,
    pub calibration_draws: usize,
    pub calibration_target: f64,
    pub gradient: GradientChoice,
    pub k_neighbors: Auto<usize>,
    pub active_dim: Auto<usize>,
    pub rs_degree: Auto<usize>,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub objective: String,
    pub kt_tolerance: f64,
    pub eta_constraint: bool,
    pub n_grid: usize,
    pub n_radial: usize,
    pub surface_format: SurfaceFormat,
    pub svg: bool,
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            baseline: None,
            airfoil: None,
            naca: "4412".into(),
            airfoil_points: 41,
            out_dir: std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from),
            m: 20,
            n_samples: 1100,
            seed: 42,
            diameter: 0.25,
            n_blades: 5,
            va: 5.095,
            n_rps: 20.0,
            rho: 1025.0,
            stations: 40,
            pitch_scale: Auto::Auto,
            camber_scale: Auto::Auto,
            calibration_draws: 2000,
            calibration_target: 0.5,
            gradient: GradientChoice::LocalLinear,
            k_neighbors: Auto::Auto,
            active_dim: Auto::Auto,
            rs_degree: Auto::Fixed(4),
            train_fraction: 0.8,
            split_seed: 7,
            objective: "pmax".into(),
            kt_tolerance: 0.01,
            eta_constraint: true,
            n_grid: 2001,
            n_radial: 50,
            surface_format: SurfaceFormat::Stl,
            svg: true,
            jobs: 0,
        }
    }
}

/// Numbers and strings as they appear in the file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Int(v) => v.to_string(),
            Scalar::Float(v) => format!("{v:?}"),
            Scalar::Bool(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| Error::Config(format!("`{key}`: {e}")))
}

impl PipelineConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "baseline" => self.baseline = Some(PathBuf::from(raw)),
            "airfoil" => self.airfoil = Some(PathBuf::from(raw)),
            "naca" => self.naca = raw.to_string(),
            "airfoil_points" => self.airfoil_points = parse_value(key, raw)?,
            "out_dir" => self.out_dir = PathBuf::from(raw),
            "m" => self.m = parse_value(key, raw)?,
            "n_samples" => self.n_samples = parse_value(key, raw)?,
            "seed" => self.seed = parse_value(key, raw)?,
            "diameter" => self.diameter = parse_value(key, raw)?,
            "n_blades" => self.n_blades = parse_value(key, raw)?,
            "va" => self.va = parse_value(key, raw)?,
            "n_rps" => self.n_rps = parse_value(key, raw)?,
            "rho" => self.rho = parse_value(key, raw)?,
            "stations" => self.stations = parse_value(key, raw)?,
            "pitch_scale" => self.pitch_scale = parse_value(key, raw)?,
            "camber_scale" => self.camber_scale = parse_value(key, raw)?,
            "calibration_draws" => self.calibration_draws = parse_value(key, raw)?,
            "calibration_target" => self.calibration_target = parse_value(key, raw)?,
            "gradient" => self.gradient = parse_value(key, raw)?,
            "k_neighbors" => self.k_neighbors = parse_value(key, raw)?,
            "active_dim" => self.active_dim = parse_value(key, raw)?,
            "rs_degree" => self.rs_degree = parse_value(key, raw)?,
            "train_fraction" => self.train_fraction = parse_value(key, raw)?,
            "split_seed" => self.split_seed = parse_value(key, raw)?,
            "objective" => self.objective = raw.to_string(),
            "kt_tolerance" => self.kt_tolerance = parse_value(key, raw)?,
            "eta_constraint" => self.eta_constraint = parse_value(key, raw)?,
            "n_grid" => self.n_grid = parse_value(key, raw)?,
            "n_radial" => self.n_radial = parse_value(key, raw)?,
            "surface_format" => self.surface_format = parse_format(raw).map_err(Error::Config)?,
            "svg" => self.svg = parse_value(key, raw)?,
            "jobs" => self.jobs = parse_value(key, raw)?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Overlays a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = textio::read_to_string(path)?;
        let table: std::collections::BTreeMap<String, Scalar> =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for (key, value) in table {
            let mut raw = value.text();
            if matches!(key.as_str(), "baseline" | "airfoil" | "out_dir") && Path::new(&raw).is_relative() {
                raw = dir.join(raw).to_string_lossy().into_owned();
            }
            self.set(&key, &raw)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for p in [&self.baseline, &self.airfoil].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        if self.m < 8 || !self.m.is_multiple_of(2) {
            return bad(format!("m = {} must be even and at least 8", self.m));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        OperatingPoint::new(self.va, self.n_rps, self.diameter, self.rho)?;
        if self.n_blades == 0 || self.stations < 10 || self.n_radial < 2 || self.airfoil_points < 20 {
            return bad("n_blades >= 1, stations >= 10, n_radial >= 2 and airfoil_points >= 20 required".into());
        }
        for (name, s) in [("pitch_scale", self.pitch_scale), ("camber_scale", self.camber_scale)] {
            if let Auto::Fixed(v) = s {
                if !(v > 0.0 && v <= 1.0) {
                    return bad(format!("{name} = {v} outside (0, 1]"));
                }
            }
        }
        if self.calibration_draws == 0 || !(self.calibration_target > 0.0 && self.calibration_target <= 1.0) {
            return bad("calibration_draws > 0 and calibration_target in (0, 1] required".into());
        }
        if let Auto::Fixed(k) = self.k_neighbors {
            if k < self.m + 1 {
                return bad(format!("k_neighbors = {k} below m + 1 = {}", self.m + 1));
            }
        }
        if let Auto::Fixed(k) = self.active_dim {
            if !(1..self.m).contains(&k) {
                return bad(format!("active_dim = {k} outside [1, {}]", self.m - 1));
            }
        }
        if let Auto::Fixed(d) = self.rs_degree {
            if d < 1 {
                return bad("rs_degree must be at least 1".into());
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction = {} outside (0, 1)", self.train_fraction));
        }
        if !crate::evaluation::OUTPUT_NAMES.contains(&self.objective.as_str()) {
            return bad(format!("objective `{}` is not one of kt, eta, pmax, fmax", self.objective));
        }
        if !(self.kt_tolerance >= 0.0) {
            return bad("kt_tolerance must be nonnegative".into());
        }
        if self.n_grid < 100 {
            return bad(format!("n_grid = {} below 100", self.n_grid));
        }
        Ok(())
    }

    pub fn operating_point(&self) -> Result<OperatingPoint> {
        OperatingPoint::new(self.va, self.n_rps, self.diameter, self.rho)
    }

    pub fn bem_settings(&self) -> BemSettings {
        BemSettings { stations: self.stations, ..BemSettings::default() }
    }

    pub fn gradient_method(&self) -> GradientMethod {
        match (self.gradient, self.k_neighbors) {
            (GradientChoice::GlobalLinear, _) => GradientMethod::GlobalLinear,
            (GradientChoice::LocalLinear, Auto::Auto) => GradientMethod::local_default(self.m),
            (GradientChoice::LocalLinear, Auto::Fixed(k)) => GradientMethod::LocalLinear { k },
        }
    }

    pub fn active_dim_choice(&self) -> ActiveDim {
        match self.active_dim {
            Auto::Auto => ActiveDim::Auto,
            Auto::Fixed(k) => ActiveDim::Fixed(k),
        }
    }
}
