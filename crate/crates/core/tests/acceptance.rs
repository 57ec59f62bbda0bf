//! Acceptance criteria 1-9. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (bypassing output capture) before asserting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bladeopt::active_subspace::{ActiveDim, ActiveSubspace, GradientMethod, GradientSet};
use bladeopt::cli::commands::pipeline;
use bladeopt::cli::PipelineConfig;
use bladeopt::evaluation::{efficiency, hydrodynamic_coefficients, OperatingPoint};
use bladeopt::geometry::{loft_blade, replicate_propeller, AirfoilSection, BaselineTable, SectionSource};
use bladeopt::parameterization::ParameterSpace;
use bladeopt::response_optimization::{grid_minimize, Constraint, Relation, ResponseSurface};
use bladeopt::spline::{BSplineCurve, SplineFit};
use bladeopt::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} ({detail})");
    assert!(pass, "criterion {n} failed: {detail}");
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..=1.0))
}

#[test]
fn criterion_1_efficiency_closure() {
    let start = Instant::now();
    let (j, kt, kq) = (1.019, 0.3835, 0.098875);
    let op = OperatingPoint::new(5.095, 20.0, 0.25, 1025.0).unwrap();
    let thrust = kt * op.rho * op.n_rps.powi(2) * op.diameter.powi(4);
    let torque = kq * op.rho * op.n_rps.powi(2) * op.diameter.powi(5);
    let c = hydrodynamic_coefficients(thrust, torque, &op).unwrap();
    let eta = c.eta.unwrap();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let (j, kt, kq) = (rng.gen_range(0.01..2.0), rng.gen_range(-0.5..1.0), rng.gen_range(1e-3..0.3));
        let e = efficiency(j, kt, kq).unwrap();
        let scale = (j * kt).abs().max(1e-300);
        worst = worst.max((e * 2.0 * PI * kq - j * kt).abs() / scale.max(1.0));
    }
    let elapsed = start.elapsed();
    report(
        1,
        (c.j - j).abs() < 1e-12 && (eta - 0.629).abs() < 1e-3 && worst < 1e-12 && elapsed < Duration::from_secs(1),
        format!("eta = {eta:.6}, identity residual {worst:.2e}, {elapsed:.2?}"),
    );
}

fn random_curve(rng: &mut ChaCha8Rng) -> BSplineCurve {
    let degree = rng.gen_range(1..=5);
    let n_ctrl = rng.gen_range(degree + 1..=degree + 12);
    let (lo, hi) = (rng.gen_range(-2.0..0.0), rng.gen_range(0.5..3.0));
    let mut interior: Vec<f64> = (0..n_ctrl - degree - 1).map(|_| rng.gen_range(lo..hi)).collect();
    interior.sort_by(f64::total_cmp);
    let mut knots = vec![lo; degree + 1];
    knots.extend(interior);
    knots.extend(vec![hi; degree + 1]);
    let values = (0..n_ctrl).map(|_| rng.gen_range(-5.0..5.0)).collect();
    BSplineCurve::from_values(degree, knots, values).unwrap()
}

#[test]
fn criterion_2_spline_kernel() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut unity, mut ends, mut support, mut deriv): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..100 {
        let c = random_curve(&mut rng);
        let (lo, hi) = c.domain();
        for _ in 0..100 {
            let t = rng.gen_range(lo..=hi);
            unity = unity.max((c.basis_values(t).unwrap().iter().sum::<f64>() - 1.0).abs());
        }
        ends = ends
            .max((c.eval1(lo).unwrap() - c.control_point(0)[0]).abs())
            .max((c.eval1(hi).unwrap() - c.control_point(c.n_ctrl() - 1)[0]).abs());

        let i = rng.gen_range(0..c.n_ctrl());
        let moved = c.displace_control_points(&[i], &[1.0]).unwrap();
        let (a, b) = (c.knots()[i], c.knots()[i + c.degree() + 1]);
        for k in 0..=200 {
            let t = (lo + (hi - lo) * k as f64 / 200.0).min(hi);
            if t < a || t > b {
                support = support.max((moved.eval1(t).unwrap() - c.eval1(t).unwrap()).abs());
            }
        }

        let span = hi - lo;
        for _ in 0..50 {
            let t = rng.gen_range(lo + 0.01 * span..hi - 0.01 * span);
            // central differences straddling a knot of a low-degree curve are not smooth
            if c.knots().iter().any(|&k| (k - t).abs() < 1e-4 * span) {
                continue;
            }
            let h = 1e-6 * span;
            let fd = (c.eval1(t + h).unwrap() - c.eval1(t - h).unwrap()) / (2.0 * h);
            let d = c.derivative(t, 1).unwrap()[0];
            deriv = deriv.max((d - fd).abs() / d.abs().max(1.0));
        }
    }
    let t: Vec<f64> = (0..40).map(|k| (k as f64 / 39.0).powf(1.3)).collect();
    let y: Vec<f64> = t.iter().map(|x| 2.0 * x.powi(3) - x * x + 0.3 * x - 0.1).collect();
    let fit = SplineFit::new(3, 8, true).fit(&t, &y).unwrap();
    let residual = t.iter().zip(&y).map(|(&x, &v)| (fit.eval1(x).unwrap() - v).abs()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    report(
        2,
        unity <= 1e-12 && ends <= 1e-14 && support == 0.0 && deriv <= 1e-5 && residual < 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "unity {unity:.1e}, endpoints {ends:.1e}, off-support change {support:.1e}, derivative {deriv:.1e}, cubic fit {residual:.1e}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_3_ridge_recovery() {
    let start = Instant::now();
    let (n, m) = (1100, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let a_hat = a.normalize();

    let g = DMatrix::from_fn(n, m, |_, j| a[j]);
    let exact = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Auto).unwrap();
    let cos_exact = exact.eigenvectors().column(0).dot(&a_hat).abs();
    let ratio = exact.eigenvalues()[1] / exact.eigenvalues()[0];

    let x = uniform(&mut rng, n, m);
    let f = DVector::from_fn(n, |i, _| (x.row(i) * &a)[0].sin());
    let est = GradientSet::estimate(&x, &f, GradientMethod::local_default(m)).unwrap();
    let sub = ActiveSubspace::compute(&est, ActiveDim::Auto).unwrap();
    let cos_sin = sub.eigenvectors().column(0).dot(&a_hat).abs();
    let elapsed = start.elapsed();
    report(
        3,
        cos_exact > 1.0 - 1e-12
            && ratio < 1e-12
            && cos_sin > 0.99
            && sub.active_dim() == 1
            && elapsed < Duration::from_secs(60),
        format!(
            "linear: 1-cos {:.1e}, lambda2/lambda1 {ratio:.1e}; sin: cos {cos_sin:.4}, M = {}; {elapsed:.2?}",
            1.0 - cos_exact,
            sub.active_dim()
        ),
    );
}

#[test]
fn criterion_4_projection_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 20;
    let mut round_trip: f64 = 0.0;
    let mut min_norm_violations = 0;
    for case in 0..10 {
        let g = uniform(&mut rng, 200, m) * DMatrix::from_diagonal(&DVector::from_fn(m, |j, _| 0.5f64.powi(j as i32)));
        let sub = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Fixed(1 + case % 4)).unwrap();
        for _ in 0..1000 {
            let mu: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = sub.project(&mu).unwrap();
            let z = sub.inactive(&mu).unwrap();
            let back = sub.reconstruct(y.as_slice(), Some(z.as_slice())).unwrap();
            round_trip = round_trip.max(back.iter().zip(&mu).map(|(b, u)| (b - u).abs()).fold(0.0, f64::max));
        }
        let y: Vec<f64> = (0..sub.active_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = sub.reconstruct(&y, None).unwrap();
        let w2 = sub.w2();
        for _ in 0..10_000 {
            let zeta = DVector::from_fn(w2.ncols(), |_, _| rng.gen_range(-1.0..1.0));
            let pre = &base + &w2 * zeta;
            if pre.norm() < base.norm() - 1e-12 {
                min_norm_violations += 1;
            }
        }
    }
    report(
        4,
        round_trip <= 1e-12 && min_norm_violations == 0,
        format!("round trip {round_trip:.1e} over 10^4 vectors, {min_norm_violations} shorter preimages of 10^5"),
    );
}

#[test]
fn criterion_5_response_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..1100).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let parabola: Vec<f64> = x.iter().map(|t| 3.0 * t * t - 2.0 * t + 0.5).collect();
    let rs = ResponseSurface::fit(&x, &parabola, 2, 7).unwrap();
    let r2 = rs.metrics().validation_r2;
    let (n_train, n_val) = (rs.train_indices().len(), rs.validation_indices().len());

    let quartic: Vec<f64> =
        x.iter().map(|t| t.powi(4) - 0.8 * t.powi(3) + 0.2 * t * t + t + 0.05 * rng.gen_range(-1.0..1.0)).collect();
    let noisy = ResponseSurface::fit(&x, &quartic, 4, 7).unwrap().metrics().validation_r2;
    report(
        5,
        (r2 - 1.0).abs() <= 1e-10 && n_train == 880 && n_val == 220 && noisy >= 0.99,
        format!("parabola R2 - 1 = {:.1e}, split {n_train}/{n_val}, noisy quartic R2 {noisy:.5}", r2 - 1.0),
    );
}

#[test]
fn criterion_6_constrained_optimization() {
    let n_grid = 2001;
    let cell = 2.0 / (n_grid - 1) as f64;
    let objective = ResponseSurface::from_coefficients(vec![1.09, -0.6, 1.0], (-1.0, 1.0)).unwrap();
    let free = grid_minimize(&objective, &[], n_grid, None).unwrap();

    let line = ResponseSurface::from_coefficients(vec![0.0, 1.0], (-1.0, 1.0)).unwrap();
    let cap = Constraint { name: "mu".into(), surface: line.clone(), relation: Relation::Le(0.1) };
    let capped = grid_minimize(&objective, &[cap], n_grid, None).unwrap();
    // oracle: 10^6-point scan of the same problem
    let oracle = (0..=1_000_000)
        .map(|k| -1.0 + 2.0 * k as f64 / 1e6)
        .filter(|&t| t <= 0.1)
        .min_by(|a, b| ((a - 0.3).powi(2) + 1.0).total_cmp(&((b - 0.3).powi(2) + 1.0)))
        .unwrap();

    let contradictory = [
        Constraint { name: "ge".into(), surface: line.clone(), relation: Relation::Ge(1.0 + 1e-9) },
        Constraint { name: "le".into(), surface: line, relation: Relation::Le(0.0) },
    ];
    let infeasible = matches!(grid_minimize(&objective, &contradictory, n_grid, None), Err(Error::Infeasible { .. }));
    report(
        6,
        (free.mu_active - 0.3).abs() <= cell
            && (free.value - 1.0).abs() <= cell * cell
            && (capped.mu_active - oracle).abs() <= cell
            && infeasible,
        format!(
            "vertex {:.4}, capped {:.4} vs oracle {oracle:.4}, infeasible error {infeasible}",
            free.mu_active, capped.mu_active
        ),
    );
}

#[test]
fn criterion_7_geometry_invariants() {
    let dist = BaselineTable::bundled().fit(&SplineFit::new(3, 10, true), 0.25, 5).unwrap();
    let section = AirfoilSection::naca4("4412", 41).unwrap();
    let blade = loft_blade(&dist, &SectionSource::Single(section.clone()), 50).unwrap();
    let shape = (blade.grid.len(), blade.grid[0].len());
    let mut cylinder: f64 = 0.0;
    for (row, &r) in blade.grid.iter().zip(&blade.section_radii) {
        for p in row {
            cylinder = cylinder.max((p[1] * p[1] + p[2] * p[2] - r * r).abs());
        }
    }

    let scaled = section.scale_max_camber(0.031).unwrap();
    let camber_err = (scaled.max_camber() - 0.031).abs();
    let thickness_same = scaled.half_thickness() == section.half_thickness();

    let blades = replicate_propeller(&blade, 5).unwrap();
    let mut symmetry: f64 = 0.0;
    for k in 0..5 {
        let turned = blades[k].rotated(2.0 * PI / 5.0);
        for (a, b) in turned.grid.iter().flatten().zip(blades[(k + 1) % 5].grid.iter().flatten()) {
            symmetry = symmetry.max((0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max));
        }
    }

    let space = ParameterSpace::new(dist.clone()).unwrap();
    let zero = loft_blade(&space.apply(&vec![0.0; space.dim()]).unwrap(), &SectionSource::Single(section), 50).unwrap();
    let identity = zero
        .grid
        .iter()
        .flatten()
        .zip(blade.grid.iter().flatten())
        .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    report(
        7,
        cylinder < 1e-9 && camber_err <= 1e-12 && thickness_same && symmetry <= 1e-12 && identity <= 1e-9,
        format!(
            "{}x{} grid, cylinder {cylinder:.1e}, camber {camber_err:.1e}, rotation {symmetry:.1e}, zero design {identity:.1e}",
            shape.0, shape.1
        ),
    );
}

fn read_key_values(path: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once(',').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn run_pipeline(dir: &Path) -> Duration {
    let cfg = PipelineConfig { out_dir: dir.to_path_buf(), ..PipelineConfig::default() };
    let start = Instant::now();
    pipeline(&cfg).unwrap();
    start.elapsed()
}

#[test]
fn criterion_8_surrogate_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let elapsed = run_pipeline(dir.path());
    let kt = ActiveSubspace::read(&dir.path().join("analysis/subspace_kt.csv")).unwrap();
    let gap = kt.eigenvalues()[0] / kt.eigenvalues()[1];
    let data = std::fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let rows = data.lines().filter(|l| !l.starts_with('#')).count() - 1;
    let rep = read_key_values(&dir.path().join("optimization/report.csv"));
    let value = |k: &str| rep[k].parse::<f64>().unwrap();
    let (opt, base) = (value("predicted_pmax"), value("baseline_pmax"));
    report(
        8,
        rows == 1100 && gap >= 10.0 && opt <= base && elapsed < Duration::from_secs(300),
        format!("{rows} designs, kt lambda1/lambda2 = {gap:.3e}, predicted pmax {opt:.6e} vs baseline {base:.6e}, {elapsed:.2?}"),
    );
}

fn artifacts(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "stl")) {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_9_io_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(a.path());
    run_pipeline(b.path());
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    let differing: Vec<String> =
        fa.iter().filter(|(k, v)| fb.get(*k) != Some(v)).map(|(k, _)| k.display().to_string()).collect();
    report(
        9,
        fa.len() == fb.len() && fa.len() > 20 && differing.is_empty(),
        format!("{} CSV/STL artifacts compared, {} differ {:?}", fa.len(), differing.len(), differing),
    );
}
