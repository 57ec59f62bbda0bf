//! Normalized design space over pitch and camber control-point displacements.
//!
//! A design `mu` lives in `[-1, 1]^m`. The first half of its entries displace
//! the pitch control points root to tip, the second half the maximum-camber
//! control points. A unit entry moves its control point by the family bound:
//! a fraction of the baseline curve maximum (15 % for pitch, 20 % for camber),
//! optionally shrunk by a per-family smoothness scale.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::RadialDistributions;
use crate::spline::{BSplineCurve, INFLECTION_TOLERANCE};
use crate::textio;

pub const PITCH_FRACTION: f64 = 0.15;
pub const CAMBER_FRACTION: f64 = 0.20;

/// Parameter-domain samples used when scanning for inflections.
pub const SMOOTHNESS_SCAN: usize = 200;

/// Rejection sampling gives up once this many draws have been made with an
/// acceptance rate below [`MIN_ACCEPTANCE`].
pub const MAX_SAMPLING_DRAWS: u64 = 1_000_000;
pub const MIN_ACCEPTANCE: f64 = 0.01;

/// One normalized design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSample(Vec<f64>);

impl DesignSample {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = mu.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(Error::Bounds { index, value });
        }
        Ok(Self(mu))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Second-derivative samples of a curve family as a linear map of its
/// control values, plus the baseline inflection count.
#[derive(Debug, Clone)]
struct CurvatureScan {
    /// `SMOOTHNESS_SCAN x n_ctrl`, row-major.
    operator: Vec<f64>,
    n_ctrl: usize,
    baseline_values: Vec<f64>,
    baseline_inflections: usize,
}

impl CurvatureScan {
    fn new(curve: &BSplineCurve) -> Result<Self> {
        let n_ctrl = curve.n_ctrl();
        let (lo, hi) = curve.domain();
        let mut operator = vec![0.0; SMOOTHNESS_SCAN * n_ctrl];
        for i in 0..n_ctrl {
            let mut unit = vec![0.0; n_ctrl];
            unit[i] = 1.0;
            let e = BSplineCurve::from_values(curve.degree(), curve.knots().to_vec(), unit)?;
            for k in 0..SMOOTHNESS_SCAN {
                let t = lo + (hi - lo) * k as f64 / (SMOOTHNESS_SCAN - 1) as f64;
                operator[k * n_ctrl + i] = e.derivative(t, 2)?[0];
            }
        }
        Ok(Self {
            operator,
            n_ctrl,
            baseline_values: curve.coords().to_vec(),
            baseline_inflections: curve.count_inflections(SMOOTHNESS_SCAN)?,
        })
    }

    /// Whether baseline + `scale * mu` has no more inflections than the
    /// baseline.
    fn passes(&self, mu: &[f64], scale: f64) -> bool {
        let mut last = 0.0_f64;
        let mut changes = 0;
        for row in self.operator.chunks_exact(self.n_ctrl) {
            let d2: f64 = row.iter().zip(&self.baseline_values).zip(mu).map(|((a, b), m)| a * (b + scale * m)).sum();
            if d2.abs() < INFLECTION_TOLERANCE {
                continue;
            }
            let sign = d2.signum();
            if last != 0.0 && sign != last {
                changes += 1;
                if changes > self.baseline_inflections {
                    return false;
                }
            }
            last = sign;
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct ParameterSpace {
    baseline: RadialDistributions,
    pitch_max: f64,
    camber_max: f64,
    pitch_scale: f64,
    camber_scale: f64,
    pitch_scan: CurvatureScan,
    camber_scan: CurvatureScan,
}

/// Outcome of bound calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub pitch_scale: f64,
    pub camber_scale: f64,
    pub pitch_acceptance: f64,
    pub camber_acceptance: f64,
}

#[derive(Debug, Clone)]
pub struct SampleSet {
    pub designs: Vec<DesignSample>,
    pub draws: u64,
    pub rejected: u64,
}

impl ParameterSpace {
    /// Design space over every pitch and camber control point of `baseline`
    /// with the nominal bounds.
    pub fn new(baseline: RadialDistributions) -> Result<Self> {
        let max_of = |c: &BSplineCurve| -> Result<f64> {
            let (lo, hi) = c.domain();
            let mut best = f64::NEG_INFINITY;
            for k in 0..=1000 {
                best = best.max(c.eval1(lo + (hi - lo) * k as f64 / 1000.0)?);
            }
            Ok(best)
        };
        let pitch_max = max_of(&baseline.pitch)?;
        let camber_max = max_of(&baseline.max_camber)?;
        if !(pitch_max > 0.0) || !(camber_max > 0.0) {
            return Err(Error::Config("baseline pitch and camber maxima must be positive".into()));
        }
        if baseline.pitch.degree() < 2 || baseline.max_camber.degree() < 2 {
            return Err(Error::Config("pitch and camber curves need degree >= 2".into()));
        }
        Ok(Self {
            pitch_scan: CurvatureScan::new(&baseline.pitch)?,
            camber_scan: CurvatureScan::new(&baseline.max_camber)?,
            baseline,
            pitch_max,
            camber_max,
            pitch_scale: 1.0,
            camber_scale: 1.0,
        })
    }

    /// Same space with the family bounds multiplied by the given scales.
    pub fn with_bound_scales(mut self, pitch_scale: f64, camber_scale: f64) -> Result<Self> {
        if !(pitch_scale > 0.0 && pitch_scale <= 1.0) || !(camber_scale > 0.0 && camber_scale <= 1.0) {
            return Err(Error::Config(format!("bound scales must lie in (0, 1] (got {pitch_scale}, {camber_scale})")));
        }
        self.pitch_scale = pitch_scale;
        self.camber_scale = camber_scale;
        Ok(self)
    }

    pub fn baseline(&self) -> &RadialDistributions {
        &self.baseline
    }

    pub fn n_pitch(&self) -> usize {
        self.baseline.pitch.n_ctrl()
    }

    pub fn n_camber(&self) -> usize {
        self.baseline.max_camber.n_ctrl()
    }

    pub fn dim(&self) -> usize {
        self.n_pitch() + self.n_camber()
    }

    /// Pitch displacement per unit parameter, in units of `P/D`.
    pub fn pitch_bound(&self) -> f64 {
        PITCH_FRACTION * self.pitch_max * self.pitch_scale
    }

    /// Camber displacement per unit parameter, in units of `f/c`.
    pub fn camber_bound(&self) -> f64 {
        CAMBER_FRACTION * self.camber_max * self.camber_scale
    }

    pub fn bound_scales(&self) -> (f64, f64) {
        (self.pitch_scale, self.camber_scale)
    }

    pub fn baseline_inflections(&self) -> (usize, usize) {
        (self.pitch_scan.baseline_inflections, self.camber_scan.baseline_inflections)
    }

    /// `pitch - 1 .. pitch - n`, `camber - 1 .. camber - n`.
    pub fn labels(&self) -> Vec<String> {
        (1..=self.n_pitch())
            .map(|i| format!("pitch - {i}"))
            .chain((1..=self.n_camber()).map(|i| format!("camber - {i}")))
            .collect()
    }

    fn check_dim(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), found: mu.len() });
        }
        Ok(())
    }

    /// Deformed radial distributions for design `mu`.
    pub fn apply(&self, mu: &[f64]) -> Result<RadialDistributions> {
        self.check_dim(mu)?;
        if let Some((index, &value)) = mu.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(Error::Bounds { index, value });
        }
        let np = self.n_pitch();
        let pitch_idx: Vec<usize> = (0..np).collect();
        let camber_idx: Vec<usize> = (0..self.n_camber()).collect();
        let dp: Vec<f64> = mu[..np].iter().map(|m| m * self.pitch_bound()).collect();
        let dc: Vec<f64> = mu[np..].iter().map(|m| m * self.camber_bound()).collect();
        let pitch = self.baseline.pitch.displace_control_points(&pitch_idx, &dp)?;
        let camber = self.baseline.max_camber.displace_control_points(&camber_idx, &dc)?;
        self.baseline.with_pitch(pitch)?.with_max_camber(camber)
    }

    /// True when neither deformed curve gains inflections over the baseline.
    pub fn smoothness_filter(&self, mu: &[f64]) -> Result<bool> {
        self.check_dim(mu)?;
        let np = self.n_pitch();
        Ok(self.pitch_scan.passes(&mu[..np], self.pitch_bound())
            && self.camber_scan.passes(&mu[np..], self.camber_bound()))
    }

    /// `n` uniform designs that pass the smoothness filter, drawn from a
    /// ChaCha stream seeded with `seed`.
    pub fn sample_designs(&self, n: usize, seed: u64) -> Result<SampleSet> {
        let m = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut designs = Vec::with_capacity(n);
        let mut draws = 0u64;
        let mut mu = vec![0.0; m];
        while designs.len() < n {
            if draws == MAX_SAMPLING_DRAWS && (designs.len() as f64) < MIN_ACCEPTANCE * draws as f64 {
                return Err(Error::Sampling { draws, accepted: designs.len() as u64 });
            }
            for v in mu.iter_mut() {
                *v = rng.gen_range(-1.0..=1.0);
            }
            draws += 1;
            if self.smoothness_filter(&mu)? {
                designs.push(DesignSample(mu.clone()));
            }
        }
        let rejected = draws - n as u64;
        if rejected > 0 {
            log::info!("smoothness filter rejected {rejected} of {draws} draws");
        }
        Ok(SampleSet { designs, draws, rejected })
    }

    /// Shrinks each family's bound by powers of two until at least
    /// `target_acceptance` of `pilot` uniform draws keep that curve free of
    /// new inflections.
    pub fn calibrate_bounds(&self, seed: u64, pilot: usize, target_acceptance: f64) -> Result<(Self, Calibration)> {
        if pilot == 0 || !(target_acceptance > 0.0 && target_acceptance <= 1.0) {
            return Err(Error::Config("calibration needs pilot > 0 and target in (0, 1]".into()));
        }
        let family = |scan: &CurvatureScan, nominal: f64, stream: u64| -> Result<(f64, f64)> {
            let mut scale = 1.0;
            for _ in 0..40 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                let mut mu = vec![0.0; scan.n_ctrl];
                let mut accepted = 0;
                for _ in 0..pilot {
                    for v in mu.iter_mut() {
                        *v = rng.gen_range(-1.0..=1.0);
                    }
                    accepted += usize::from(scan.passes(&mu, nominal * scale));
                }
                let rate = accepted as f64 / pilot as f64;
                if rate >= target_acceptance {
                    return Ok((scale, rate));
                }
                scale *= 0.5;
            }
            Err(Error::Sampling { draws: pilot as u64, accepted: 0 })
        };
        let (ps, pa) = family(&self.pitch_scan, PITCH_FRACTION * self.pitch_max, 1)?;
        let (cs, ca) = family(&self.camber_scan, CAMBER_FRACTION * self.camber_max, 2)?;
        let space = self.clone().with_bound_scales(ps, cs)?;
        Ok((space, Calibration { pitch_scale: ps, camber_scale: cs, pitch_acceptance: pa, camber_acceptance: ca }))
    }
}

/// Metadata stored next to a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMetadata {
    pub seed: u64,
    pub pitch_bound: f64,
    pub camber_bound: f64,
    pub pitch_scale: f64,
    pub camber_scale: f64,
    pub draws: u64,
    pub rejected: u64,
    pub baseline_sha256: String,
}

impl DesignMetadata {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "pitch_bound={}", textio::fmt17(self.pitch_bound));
        let _ = writeln!(s, "camber_bound={}", textio::fmt17(self.camber_bound));
        let _ = writeln!(s, "pitch_scale={}", textio::fmt17(self.pitch_scale));
        let _ = writeln!(s, "camber_scale={}", textio::fmt17(self.camber_scale));
        let _ = writeln!(s, "draws={}", self.draws);
        let _ = writeln!(s, "rejected={}", self.rejected);
        let _ = writeln!(s, "baseline_sha256={}", self.baseline_sha256);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let get = |key: &str| -> Result<&str> {
            text.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
                .ok_or_else(|| Error::Schema(format!("design metadata missing `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?.parse().map_err(|e| Error::Schema(format!("design metadata `{key}`: {e}")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?.parse().map_err(|e| Error::Schema(format!("design metadata `{key}`: {e}")))
        };
        Ok(Self {
            seed: int("seed")?,
            pitch_bound: num("pitch_bound")?,
            camber_bound: num("camber_bound")?,
            pitch_scale: num("pitch_scale")?,
            camber_scale: num("camber_scale")?,
            draws: int("draws")?,
            rejected: int("rejected")?,
            baseline_sha256: get("baseline_sha256")?.to_string(),
        })
    }
}

/// Design matrix CSV: header `mu_1..mu_m`, one row per design.
pub fn designs_csv(designs: &[DesignSample], m: usize) -> String {
    let mut s = (1..=m).map(|i| format!("mu_{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for d in designs {
        let row: Vec<String> = d.as_slice().iter().map(|&v| textio::fmt17(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_designs_csv(text: &str) -> Result<Vec<DesignSample>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Schema("empty design file".into()))?;
    let m = header.split(',').count();
    for (i, name) in header.split(',').enumerate() {
        if name.trim() != format!("mu_{}", i + 1) {
            return Err(Error::Schema(format!("expected column `mu_{}`, found `{}`", i + 1, name.trim())));
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let row = textio::parse_row(line, lineno + 1)?;
        if row.len() != m {
            return Err(Error::parse(lineno + 1, format!("expected {m} values, found {}", row.len())));
        }
        out.push(DesignSample::new(row)?);
    }
    Ok(out)
}

pub fn write_designs(path: &Path, designs: &[DesignSample], m: usize, meta: &DesignMetadata) -> Result<()> {
    textio::write(path, designs_csv(designs, m))?;
    textio::write(&sidecar_path(path), meta.to_text())
}

pub fn read_designs(path: &Path) -> Result<Vec<DesignSample>> {
    parse_designs_csv(&textio::read_to_string(path)?)
}

/// `<file>.meta` next to a design matrix.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    s.into()
}
