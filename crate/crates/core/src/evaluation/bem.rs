//! Blade-element momentum surrogate.
//!
//! Each station carries a thin section with lift slope `2 pi`, a camber
//! offset of `2 f/c` and a fixed quadratic drag polar. Axial and tangential
//! induction come from momentum balance on an annulus, solved by damped
//! fixed-point iteration. Prandtl's tip factor multiplies the blade loading.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::coefficients::{efficiency, hydrodynamic_coefficients, OperatingPoint, PerformanceOutputs};
use crate::evaluation::dataset::{DataSource, Dataset, OUTPUT_NAMES};
use crate::geometry::{pitch_angle, RadialDistributions};
use crate::parameterization::{DesignSample, ParameterSpace};
use crate::textio::fmt17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemSettings {
    pub stations: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relaxation: f64,
}

impl Default for BemSettings {
    fn default() -> Self {
        Self { stations: 40, tolerance: 1e-8, max_iterations: 200, relaxation: 0.3 }
    }
}

/// Local blade data: radius (m), chord (m), geometric pitch angle (rad) and
/// maximum camber ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BladeStation {
    pub r: f64,
    pub chord: f64,
    pub pitch_angle: f64,
    pub camber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationSolution {
    pub r: f64,
    pub a: f64,
    pub a_prime: f64,
    pub beta: f64,
    pub alpha: f64,
    pub cl: f64,
    pub cd: f64,
    pub w: f64,
    pub tip_loss: f64,
    pub gamma: f64,
    pub dt_dr: f64,
    pub dq_dr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BemSolution {
    pub stations: Vec<StationSolution>,
    pub thrust: f64,
    pub torque: f64,
}

/// Uniformly spaced stations from hub to tip.
pub fn bem_stations(dist: &RadialDistributions, n: usize) -> Result<Vec<BladeStation>> {
    if n < 10 {
        return Err(Error::Config(format!("at least 10 BEM stations required, got {n}")));
    }
    let (lo, hi) = dist.domain();
    let d = dist.diameter();
    (0..n)
        .map(|k| {
            let x = if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            let r = x * dist.radius();
            Ok(BladeStation {
                r,
                chord: dist.chord.eval1(x)? * d,
                pitch_angle: pitch_angle(dist.pitch.eval1(x)? * d, r)?,
                camber: dist.max_camber.eval1(x)?,
            })
        })
        .collect()
}

fn tip_factor(n_blades: f64, tip: f64, r: f64, beta: f64) -> f64 {
    let s = beta.sin();
    if !(s > 0.0) {
        return 1.0;
    }
    let f = n_blades * (tip - r) / (2.0 * r * s);
    2.0 / PI * (-f).exp().clamp(0.0, 1.0).acos()
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Damped fixed-point iteration on the axial and tangential induction
/// factors from `start`. Gives up on non-physical states (reversed inflow).
fn iterate_induction(
    st: &BladeStation,
    sigma: f64,
    omega: f64,
    va: f64,
    start: (f64, f64),
    settings: &BemSettings,
) -> Option<(f64, f64)> {
    let (mut a, mut ap) = start;
    for _ in 0..settings.max_iterations {
        let beta = (va * (1.0 + a)).atan2(omega * st.r * (1.0 - ap));
        let cl = 2.0 * PI * (st.pitch_angle - beta + 2.0 * st.camber);
        let cd = 0.008 + 0.01 * cl * cl;
        let (s, c) = beta.sin_cos();
        let k = sigma * (cl * c - cd * s) / (4.0 * s * s);
        let kp = sigma * (cl * s + cd * c) / (4.0 * s * c);
        let (a_new, ap_new) = (k / (1.0 - k), kp / (1.0 + kp));
        let next_a = a + settings.relaxation * (a_new - a);
        let next_ap = ap + settings.relaxation * (ap_new - ap);
        if !(next_a > -1.0 && next_ap < 1.0 && next_a.is_finite() && next_ap.is_finite()) {
            return None;
        }
        let done = (next_a - a).abs() < settings.tolerance && (next_ap - ap).abs() < settings.tolerance;
        a = next_a;
        ap = next_ap;
        if done {
            return Some((a, ap));
        }
    }
    None
}

pub fn solve_stations(
    stations: &[BladeStation],
    op: &OperatingPoint,
    n_blades: usize,
    tip_radius: f64,
    settings: &BemSettings,
) -> Result<BemSolution> {
    op.validate()?;
    if !(op.va > 0.0) {
        return Err(Error::Config("the BEM surrogate needs a positive advance speed".into()));
    }
    let b = n_blades as f64;
    let omega = 2.0 * PI * op.n_rps;
    let mut out = Vec::with_capacity(stations.len());
    let mut warm = (0.0, 0.0);
    for (index, st) in stations.iter().enumerate() {
        let sigma = b * st.chord / (2.0 * PI * st.r);
        let (a, ap) = iterate_induction(st, sigma, omega, op.va, warm, settings)
            .or_else(|| iterate_induction(st, sigma, omega, op.va, (0.0, 0.0), settings))
            .ok_or(Error::Convergence { station: index, radius: st.r })?;
        warm = (a, ap);
        let ua = op.va * (1.0 + a);
        let ut = omega * st.r * (1.0 - ap);
        let beta = ua.atan2(ut);
        let alpha = st.pitch_angle - beta;
        let cl = 2.0 * PI * (alpha + 2.0 * st.camber);
        let cd = 0.008 + 0.01 * cl * cl;
        let w = ua.hypot(ut);
        let f = tip_factor(b, tip_radius, st.r, beta);
        let q = 0.5 * op.rho * w * w * st.chord;
        let (s, c) = beta.sin_cos();
        out.push(StationSolution {
            r: st.r,
            a,
            a_prime: ap,
            beta,
            alpha,
            cl,
            cd,
            w,
            tip_loss: f,
            gamma: 0.5 * st.chord * cl * w * f,
            dt_dr: f * b * q * (cl * c - cd * s),
            dq_dr: f * b * q * (cl * s + cd * c) * st.r,
        });
    }
    let r: Vec<f64> = out.iter().map(|s| s.r).collect();
    let thrust = trapezoid(&r, &out.iter().map(|s| s.dt_dr).collect::<Vec<_>>());
    let torque = trapezoid(&r, &out.iter().map(|s| s.dq_dr).collect::<Vec<_>>());
    Ok(BemSolution { stations: out, thrust, torque })
}

/// Derivative of `y(x)` at each sample: one-sided at the ends, the
/// three-point non-uniform formula inside.
fn gradient(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (y[1] - y[0]) / (x[1] - x[0])
            } else if i == n - 1 {
                (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2])
            } else {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                (h0 * h0 * y[i + 1] - h1 * h1 * y[i - 1] + (h1 * h1 - h0 * h0) * y[i]) / (h0 * h1 * (h0 + h1))
            }
        })
        .collect()
}

pub fn bem_evaluate(
    dist: &RadialDistributions,
    op: &OperatingPoint,
    settings: &BemSettings,
) -> Result<PerformanceOutputs> {
    if (op.diameter - dist.diameter()).abs() > 1e-9 * dist.diameter() {
        return Err(Error::Config(format!(
            "operating-point diameter {} differs from blade diameter {}",
            op.diameter,
            dist.diameter()
        )));
    }
    let stations = bem_stations(dist, settings.stations)?;
    let tip = dist.radius();
    let sol = solve_stations(&stations, op, dist.n_blades(), tip, settings)?;
    let coeffs = hydrodynamic_coefficients(sol.thrust, sol.torque, op)?;
    let eta = efficiency(coeffs.j, coeffs.kt, coeffs.kq)
        .ok_or_else(|| Error::Data(format!("non-positive torque coefficient {:e}; efficiency undefined", coeffs.kq)))?;

    let r: Vec<f64> = sol.stations.iter().map(|s| s.r).collect();
    let gamma: Vec<f64> = sol.stations.iter().map(|s| s.gamma).collect();
    let dgamma = gradient(&r, &gamma);
    let w_tip = sol.stations.last().map_or(0.0, |s| s.w);
    let outer =
        dgamma.iter().zip(&r).filter(|(_, &ri)| ri >= 0.9 * tip - 1e-12).map(|(g, _)| g.abs()).fold(0.0, f64::max);
    let gamma_max = gamma.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if !(gamma_max > 0.0) {
        return Err(Error::Data("blade carries no circulation".into()));
    }
    let gamma_tip = gamma[gamma.len() - 2].abs();
    Ok(PerformanceOutputs {
        j: coeffs.j,
        kt: coeffs.kt,
        kq: coeffs.kq,
        eta,
        pmax: op.rho * w_tip * outer,
        fmax: dist.n_blades() as f64 * op.n_rps * (1.0 + gamma_tip / gamma_max),
    })
}

/// Evaluates every design on a pool of `jobs` workers (0 = rayon default).
/// Rows keep the order of `designs`.
pub fn evaluate_designs(
    space: &ParameterSpace,
    designs: &[DesignSample],
    op: &OperatingPoint,
    settings: &BemSettings,
    jobs: usize,
) -> Result<Dataset> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<[f64; 4]> = pool.install(|| {
        designs
            .par_iter()
            .map(|d| bem_evaluate(&space.apply(d.as_slice())?, op, settings).map(|p| p.row()))
            .collect::<Result<_>>()
    })?;
    let m = space.dim();
    let x = nalgebra::DMatrix::from_fn(designs.len(), m, |i, j| designs[i].as_slice()[j]);
    let y = nalgebra::DMatrix::from_fn(rows.len(), OUTPUT_NAMES.len(), |i, j| rows[i][j]);
    let (ps, cs) = space.bound_scales();
    let metadata = vec![
        ("pitch_bound".to_string(), fmt17(space.pitch_bound())),
        ("camber_bound".to_string(), fmt17(space.camber_bound())),
        ("pitch_scale".to_string(), fmt17(ps)),
        ("camber_scale".to_string(), fmt17(cs)),
        ("va".to_string(), fmt17(op.va)),
        ("n_rps".to_string(), fmt17(op.n_rps)),
        ("diameter".to_string(), fmt17(op.diameter)),
        ("rho".to_string(), fmt17(op.rho)),
        ("stations".to_string(), settings.stations.to_string()),
    ];
    Dataset::new(x, y, OUTPUT_NAMES.iter().map(|s| s.to_string()).collect(), DataSource::Surrogate, metadata)
}
