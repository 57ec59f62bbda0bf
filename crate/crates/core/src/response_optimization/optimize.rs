//! Grid search on the shared active variable and back-mapping to a design.

use std::fmt::Write as _;

use crate::active_subspace::ActiveSubspace;
use crate::error::{Error, Result};
use crate::parameterization::ParameterSpace;
use crate::response_optimization::surface::ResponseSurface;
use crate::textio::fmt17;

pub const DEFAULT_GRID: usize = 2001;
/// Relative objective change above which back-mapping is reported.
pub const BACKMAP_WARNING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Le(f64),
    Ge(f64),
    /// `|value - center| <= tolerance`.
    Within {
        center: f64,
        tolerance: f64,
    },
}

impl Relation {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Relation::Le(b) => v <= b,
            Relation::Ge(b) => v >= b,
            Relation::Within { center, tolerance } => (v - center).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub surface: ResponseSurface,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub mu_active: f64,
    pub value: f64,
    pub binding: Vec<String>,
    pub feasible_points: usize,
}

/// Grid points over `domain`, plus `extra` if it lies inside.
fn grid(domain: (f64, f64), n: usize, extra: Option<f64>) -> Vec<f64> {
    let (lo, hi) = domain;
    let mut g: Vec<f64> =
        (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect();
    if let Some(x) = extra.filter(|x| (lo..=hi).contains(x)) {
        let pos = g.partition_point(|&v| v < x);
        if g.get(pos) != Some(&x) {
            g.insert(pos, x);
        }
    }
    g
}

/// Minimizes `objective` over a uniform grid of `n_grid` points on the
/// intersection of all surface domains. `anchor` (typically the baseline
/// active coordinate) is added to the grid when it falls inside.
pub fn grid_minimize(
    objective: &ResponseSurface,
    constraints: &[Constraint],
    n_grid: usize,
    anchor: Option<f64>,
) -> Result<GridOptimum> {
    if n_grid < 100 {
        return Err(Error::Config(format!("grid needs at least 100 points, got {n_grid}")));
    }
    let mut domain = objective.domain();
    for c in constraints {
        domain = (domain.0.max(c.surface.domain().0), domain.1.min(c.surface.domain().1));
    }
    if !(domain.0 <= domain.1) {
        return Err(Error::Config("response surfaces share no common domain".into()));
    }
    let xs = grid(domain, n_grid, anchor);
    let feasible: Vec<bool> =
        xs.iter().map(|&x| constraints.iter().all(|c| c.relation.holds(c.surface.value(x)))).collect();
    let n_feasible = feasible.iter().filter(|&&f| f).count();
    let best = xs
        .iter()
        .enumerate()
        .filter(|(i, _)| feasible[*i])
        .map(|(i, &x)| (i, objective.value(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let Some((i, value)) = best else {
        let never: Vec<String> = constraints
            .iter()
            .filter(|c| !xs.iter().any(|&x| c.relation.holds(c.surface.value(x))))
            .map(|c| c.name.clone())
            .collect();
        let binding = if never.is_empty() { constraints.iter().map(|c| c.name.clone()).collect() } else { never };
        return Err(Error::Infeasible { binding });
    };
    let mut binding = Vec::new();
    for j in [i.checked_sub(1), Some(i + 1)].into_iter().flatten().filter(|&j| j < xs.len()) {
        if objective.value(xs[j]) < value {
            for c in constraints {
                if !c.relation.holds(c.surface.value(xs[j])) && !binding.contains(&c.name) {
                    binding.push(c.name.clone());
                }
            }
        }
    }
    Ok(GridOptimum { mu_active: xs[i], value, binding, feasible_points: n_feasible })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackMapped {
    /// Minimum-norm preimage before clamping.
    pub raw: Vec<f64>,
    /// Clamped to `[-1, 1]^m`.
    pub design: Vec<f64>,
    pub clamped: bool,
    pub smooth: bool,
    /// `W1^T design`.
    pub projected: f64,
    /// `|W1^T design - mu_M*|`.
    pub deviation: f64,
    /// Relative change of the predicted objective at `projected` versus at
    /// the optimum.
    pub objective_change: f64,
    pub warning: bool,
}

pub fn back_map(
    subspace: &ActiveSubspace,
    space: &ParameterSpace,
    objective: &ResponseSurface,
    mu_active: f64,
) -> Result<BackMapped> {
    if subspace.active_dim() != 1 {
        return Err(Error::Config(format!(
            "back-mapping needs a one-dimensional active subspace, got M = {}",
            subspace.active_dim()
        )));
    }
    if subspace.dim() != space.dim() {
        return Err(Error::Shape { expected: space.dim(), found: subspace.dim() });
    }
    let raw: Vec<f64> = subspace.reconstruct(&[mu_active], None)?.iter().copied().collect();
    let design: Vec<f64> = raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let clamped = design != raw;
    let smooth = space.smoothness_filter(&design)?;
    let projected = subspace.project(&design)?[0];
    let at_opt = objective.value(mu_active);
    let at_design = objective.value(projected);
    let objective_change =
        if at_opt != 0.0 { ((at_design - at_opt) / at_opt).abs() } else { (at_design - at_opt).abs() };
    let warning = !smooth || objective_change > BACKMAP_WARNING;
    if warning {
        log::warn!(
            "back-mapped design changes the predicted objective by {:.2}% (smooth: {smooth}, clamped: {clamped})",
            100.0 * objective_change
        );
    }
    Ok(BackMapped {
        deviation: (projected - mu_active).abs(),
        raw,
        design,
        clamped,
        smooth,
        projected,
        objective_change,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub objective: String,
    pub optimum: GridOptimum,
    pub back_mapped: BackMapped,
    /// Predicted outputs at the optimum, `(name, value, extrapolated)`.
    pub predictions: Vec<(String, f64, bool)>,
    /// Predicted outputs at the baseline design.
    pub baseline: Vec<(String, f64)>,
}

impl OptimizationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let o = &self.optimum;
        let b = &self.back_mapped;
        let _ = writeln!(s, "objective: minimize {}", self.objective);
        let _ = writeln!(s, "active variable optimum: {:.6}", o.mu_active);
        let _ = writeln!(s, "predicted objective: {:.6e}", o.value);
        let _ = writeln!(s, "feasible grid points: {}", o.feasible_points);
        let binding = if o.binding.is_empty() { "none".to_string() } else { o.binding.join(", ") };
        let _ = writeln!(s, "binding constraints: {binding}");
        let _ = writeln!(s, "predicted outputs (baseline -> optimum):");
        for ((name, v, extra), (_, base)) in self.predictions.iter().zip(&self.baseline) {
            let flag = if *extra { " (extrapolated)" } else { "" };
            let _ = writeln!(s, "  {name:<5} {base:.6e} -> {v:.6e}{flag}");
        }
        let _ = writeln!(s, "back-mapped design: clamped {}, smooth {}", b.clamped, b.smooth);
        let _ = writeln!(
            s,
            "  projected active variable {:.6} (deviation {:.3e}), objective change {:.3}%",
            b.projected,
            b.deviation,
            100.0 * b.objective_change
        );
        if b.warning {
            let _ = writeln!(s, "  warning: back-mapped design departs from the optimum");
        }
        s
    }

    /// `key,value` rows followed by `mu_i,value` rows of the design.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        let o = &self.optimum;
        let b = &self.back_mapped;
        let _ = writeln!(s, "mu_active,{}", fmt17(o.mu_active));
        let _ = writeln!(s, "objective,{}", self.objective);
        let _ = writeln!(s, "objective_value,{}", fmt17(o.value));
        for (name, v, _) in &self.predictions {
            let _ = writeln!(s, "predicted_{name},{}", fmt17(*v));
        }
        for (name, v) in &self.baseline {
            let _ = writeln!(s, "baseline_{name},{}", fmt17(*v));
        }
        let _ = writeln!(s, "binding,{}", o.binding.join(";"));
        let _ = writeln!(s, "clamped,{}", b.clamped);
        let _ = writeln!(s, "smooth,{}", b.smooth);
        let _ = writeln!(s, "projected_active,{}", fmt17(b.projected));
        let _ = writeln!(s, "deviation,{}", fmt17(b.deviation));
        let _ = writeln!(s, "objective_change,{}", fmt17(b.objective_change));
        let _ = writeln!(s, "warning,{}", b.warning);
        for (i, v) in b.design.iter().enumerate() {
            let _ = writeln!(s, "mu_{},{}", i + 1, fmt17(*v));
        }
        s
    }
}

/// Minimizes `objective` under `constraints` and maps the optimum back to a
/// design. `outputs` lists every surface to report, by name.
pub fn constrained_optimize(
    objective: (&str, &ResponseSurface),
    constraints: &[Constraint],
    outputs: &[(String, ResponseSurface)],
    space: &ParameterSpace,
    subspace: &ActiveSubspace,
    n_grid: usize,
) -> Result<OptimizationReport> {
    let optimum = grid_minimize(objective.1, constraints, n_grid, Some(0.0))?;
    let back_mapped = back_map(subspace, space, objective.1, optimum.mu_active)?;
    Ok(OptimizationReport {
        objective: objective.0.to_string(),
        predictions: outputs
            .iter()
            .map(|(n, s)| {
                let p = s.predict(optimum.mu_active);
                (n.clone(), p.value, p.extrapolated)
            })
            .collect(),
        baseline: outputs.iter().map(|(n, s)| (n.clone(), s.value(0.0))).collect(),
        optimum,
        back_mapped,
    })
}

/// `r/R, baseline, optimized` samples of the pitch and camber curves.
pub fn deformed_curves_csv(space: &ParameterSpace, design: &[f64], samples: usize) -> Result<(String, String)> {
    let deformed = space.apply(design)?;
    let base = space.baseline();
    let (lo, hi) = base.domain();
    let mut pitch = String::from("r_over_r,baseline_pitch,optimized_pitch\n");
    let mut camber = String::from("r_over_r,baseline_camber,optimized_camber\n");
    for k in 0..samples.max(2) {
        let x = if k + 1 == samples.max(2) { hi } else { lo + (hi - lo) * k as f64 / (samples.max(2) - 1) as f64 };
        let _ = writeln!(pitch, "{},{},{}", fmt17(x), fmt17(base.pitch.eval1(x)?), fmt17(deformed.pitch.eval1(x)?));
        let _ = writeln!(
            camber,
            "{},{},{}",
            fmt17(x),
            fmt17(base.max_camber.eval1(x)?),
            fmt17(deformed.max_camber.eval1(x)?)
        );
    }
    Ok((pitch, camber))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BaselineTable;
    use crate::spline::SplineFit;
    use nalgebra::{DMatrix, DVector};

    fn parabola() -> ResponseSurface {
        // (x - 0.3)^2 + 1
        ResponseSurface::from_coefficients(vec![1.09, -0.6, 1.0], (-1.0, 1.0)).unwrap()
    }

    fn line() -> ResponseSurface {
        ResponseSurface::from_coefficients(vec![0.0, 1.0], (-1.0, 1.0)).unwrap()
    }

    #[test]
    fn unconstrained_vertex() {
        let o = grid_minimize(&parabola(), &[], DEFAULT_GRID, None).unwrap();
        assert!((o.mu_active - 0.3).abs() < 1e-12);
        assert!((o.value - 1.0).abs() < 1e-12);
        assert!(o.binding.is_empty());
    }

    #[test]
    fn boundary_optimum_matches_fine_scan() {
        let c = Constraint { name: "mu_M".into(), surface: line(), relation: Relation::Le(0.1) };
        let o = grid_minimize(&parabola(), &[c], DEFAULT_GRID, None).unwrap();
        // Independent scan at ten times the resolution.
        let fine = (0..=20_000)
            .map(|k| -1.0 + 2.0 * k as f64 / 20_000.0)
            .filter(|&x| x <= 0.1)
            .map(|x| (x, (x - 0.3) * (x - 0.3) + 1.0))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((o.mu_active - fine.0).abs() <= 2.0 / 2000.0);
        assert!((o.mu_active - 0.1).abs() <= 1e-3 + 1e-12);
        assert_eq!(o.binding, vec!["mu_M".to_string()]);
        let free = grid_minimize(&parabola(), &[], DEFAULT_GRID, None).unwrap();
        assert!(o.value >= free.value);
    }

    #[test]
    fn contradictory_constraints() {
        let cs = [
            Constraint { name: "high".into(), surface: line(), relation: Relation::Ge(1.0) },
            Constraint { name: "low".into(), surface: line(), relation: Relation::Le(0.0) },
        ];
        match grid_minimize(&parabola(), &cs, DEFAULT_GRID, None) {
            Err(Error::Infeasible { binding }) => assert_eq!(binding, vec!["high".to_string(), "low".to_string()]),
            other => panic!("{other:?}"),
        }
        let never = [Constraint { name: "above".into(), surface: line(), relation: Relation::Ge(2.0) }];
        assert!(matches!(
            grid_minimize(&parabola(), &never, DEFAULT_GRID, None),
            Err(Error::Infeasible { binding }) if binding == vec!["above".to_string()]
        ));
        assert!(grid_minimize(&parabola(), &[], 50, None).is_err());
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn grid_agrees_with_golden_section() {
        for (coef, dom) in [
            (vec![0.2, -0.7, 0.1, 0.4, 0.3], (-1.5, 1.2)),
            (vec![1.0, 0.35, 2.0], (-2.0, 2.0)),
            (vec![0.0, -1.0, 0.0, 0.0, 1.0], (0.0, 2.0)),
        ] {
            let s = ResponseSurface::from_coefficients(coef, dom).unwrap();
            let o = grid_minimize(&s, &[], 1001, None).unwrap();
            let gs = golden_section(|x| s.value(x), dom.0, dom.1);
            assert!((o.mu_active - gs).abs() <= (dom.1 - dom.0) / 1000.0 + 1e-12);
        }
    }

    #[test]
    fn anchor_joins_grid() {
        let s = ResponseSurface::from_coefficients(vec![0.0, 0.0, 1.0], (-1.0, 1.0 / 3.0)).unwrap();
        let o = grid_minimize(&s, &[], 100, Some(0.0)).unwrap();
        assert_eq!(o.mu_active, 0.0);
    }

    #[test]
    fn back_mapping() {
        let space = ParameterSpace::new(BaselineTable::bundled().fit(&SplineFit::default(), 0.25, 5).unwrap())
            .unwrap()
            .with_bound_scales(0.02, 0.05)
            .unwrap();
        let a = DVector::from_fn(20, |i, _| if i < 10 { 1.0 } else { 0.2 }).normalize();
        let c = &a * a.transpose();
        let sub = ActiveSubspace::from_covariance(
            &(&c + DMatrix::identity(20, 20) * 1e-6),
            crate::active_subspace::ActiveDim::Fixed(1),
        )
        .unwrap();
        let obj = parabola();
        let inside = back_map(&sub, &space, &obj, 0.3).unwrap();
        assert!(!inside.clamped && inside.smooth);
        assert!(inside.deviation < 1e-12);
        assert!(!inside.warning);
        let outside = back_map(&sub, &space, &obj, 4.0).unwrap();
        assert!(outside.clamped);
        assert!(outside.design.iter().all(|v| v.abs() <= 1.0));
        assert!(outside.deviation > 0.0);
        assert!((outside.projected - (sub.project(&outside.design).unwrap()[0])).abs() < 1e-15);
        let (p, cam) = deformed_curves_csv(&space, &inside.design, 11).unwrap();
        assert_eq!(p.lines().count(), 12);
        assert!(cam.starts_with("r_over_r,baseline_camber"));
    }
}
