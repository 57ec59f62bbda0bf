//! Subcommand bodies. Each reads and writes files only; `pipeline` chains
//! them over the standard output layout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::active_subspace::{ActiveDim, ActiveSubspace, GradientSet};
use crate::cli::config::{Auto, PipelineConfig};
use crate::cli::svg::{self, Mark, Series};
use crate::error::{Error, Result};
use crate::evaluation::{bem_evaluate, evaluate_designs, DataSource, Dataset, OUTPUT_NAMES};
use crate::geometry::{
    distributions::BUNDLED_BASELINE, export_surface, loft_blade, replicate_propeller, AirfoilSection, BaselineTable,
    RadialDistributions, SectionSource, SurfaceFormat,
};
use crate::parameterization::{
    read_designs, sidecar_path, write_designs, DesignMetadata, DesignSample, ParameterSpace,
};
use crate::response_optimization::{
    constrained_optimize, deformed_curves_csv, sensitivity_table, Constraint, Relation, ResponseSurface, Thresholds,
};
use crate::spline::SplineFit;
use crate::textio::{self, fmt17};

/// Standard file names under the output directory.
pub mod layout {
    pub const BASELINE: &str = "baseline.txt";
    pub const DESIGNS: &str = "designs.csv";
    pub const DATASET: &str = "dataset.csv";
    pub const ANALYSIS: &str = "analysis";
    pub const SHARED_SUBSPACE: &str = "analysis/subspace_shared.csv";
    pub const OPTIMIZATION: &str = "optimization";
    pub const OPTIMIZED_DESIGN: &str = "optimization/optimized_design.csv";
    pub const GEOMETRY: &str = "geometry";
}

fn table_text(cfg: &PipelineConfig) -> Result<String> {
    match &cfg.baseline {
        Some(p) => textio::read_to_string(p),
        None => Ok(BUNDLED_BASELINE.to_string()),
    }
}

pub fn baseline_distributions(cfg: &PipelineConfig) -> Result<RadialDistributions> {
    let fit = SplineFit::new(3, cfg.m / 2, true);
    BaselineTable::parse(&table_text(cfg)?)?.fit(&fit, cfg.diameter, cfg.n_blades)
}

fn section(cfg: &PipelineConfig) -> Result<AirfoilSection> {
    match &cfg.airfoil {
        Some(p) => AirfoilSection::parse(&textio::read_to_string(p)?),
        None => AirfoilSection::naca4(&cfg.naca, cfg.airfoil_points),
    }
}

/// Parameter space with explicit scales, or the configured ones (calibrating
/// any family set to `auto`).
pub fn parameter_space(cfg: &PipelineConfig, scales: Option<(f64, f64)>) -> Result<ParameterSpace> {
    let space = ParameterSpace::new(baseline_distributions(cfg)?)?;
    if let Some((p, c)) = scales {
        return space.with_bound_scales(p, c);
    }
    let (p, c) = match (cfg.pitch_scale, cfg.camber_scale) {
        (Auto::Fixed(p), Auto::Fixed(c)) => (p, c),
        (ps, cs) => {
            let (_, cal) = space.calibrate_bounds(cfg.seed, cfg.calibration_draws, cfg.calibration_target)?;
            log::info!(
                "calibrated bound scales: pitch {} (acceptance {:.3}), camber {} (acceptance {:.3})",
                cal.pitch_scale,
                cal.pitch_acceptance,
                cal.camber_scale,
                cal.camber_acceptance
            );
            let pick = |a: Auto<f64>, auto: f64| match a {
                Auto::Auto => auto,
                Auto::Fixed(v) => v,
            };
            (pick(ps, cal.pitch_scale), pick(cs, cal.camber_scale))
        }
    };
    space.with_bound_scales(p, c)
}

fn read_meta(designs: &Path) -> Result<Option<DesignMetadata>> {
    let side = sidecar_path(designs);
    if side.exists() {
        Ok(Some(DesignMetadata::parse(&textio::read_to_string(&side)?)?))
    } else {
        Ok(None)
    }
}

fn meta_f64(data: &Dataset, key: &str) -> Option<f64> {
    data.meta(key).and_then(|v| v.parse().ok())
}

fn write_svg(cfg: &PipelineConfig, path: &Path, svg: String) -> Result<()> {
    if cfg.svg {
        textio::write(path, svg)?;
    }
    Ok(())
}

/// Fitted radial curves plus a table/fit comparison CSV next to them.
pub fn fit_baseline(cfg: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let table = BaselineTable::parse(&table_text(cfg)?)?;
    let dist = table.fit(&SplineFit::new(3, cfg.m / 2, true), cfg.diameter, cfg.n_blades)?;
    textio::write(out, dist.to_text())?;
    let mut s = String::from(
        "r_over_r,chord,chord_fit,pitch,pitch_fit,skew,skew_fit,rake,rake_fit,max_camber,max_camber_fit\n",
    );
    for i in 0..table.len() {
        let x = table.r_over_r[i];
        let _ = write!(s, "{}", fmt17(x));
        let cols = [&table.chord, &table.pitch, &table.skew, &table.rake, &table.max_camber];
        for (col, curve) in cols.iter().zip(dist.curves()) {
            let _ = write!(s, ",{},{}", fmt17(col[i]), fmt17(curve.eval1(x)?));
        }
        s.push('\n');
    }
    let stem = out.file_stem().map_or("baseline".into(), |s| s.to_string_lossy().into_owned());
    let fit_csv = out.with_file_name(format!("{stem}_fit.csv"));
    textio::write(&fit_csv, s)?;
    Ok(vec![out.to_path_buf(), fit_csv])
}

pub fn sample(cfg: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let space = parameter_space(cfg, None)?;
    let set = space.sample_designs(cfg.n_samples, cfg.seed)?;
    let (ps, cs) = space.bound_scales();
    let meta = DesignMetadata {
        seed: cfg.seed,
        pitch_bound: space.pitch_bound(),
        camber_bound: space.camber_bound(),
        pitch_scale: ps,
        camber_scale: cs,
        draws: set.draws,
        rejected: set.rejected,
        baseline_sha256: textio::sha256_hex(table_text(cfg)?.as_bytes()),
    };
    write_designs(out, &set.designs, space.dim(), &meta)?;
    Ok(vec![out.to_path_buf(), sidecar_path(out)])
}

fn space_for_designs(cfg: &PipelineConfig, designs: &Path) -> Result<(ParameterSpace, Option<DesignMetadata>)> {
    let meta = read_meta(designs)?;
    if let Some(m) = &meta {
        let sha = textio::sha256_hex(table_text(cfg)?.as_bytes());
        if m.baseline_sha256 != sha {
            log::warn!("designs were sampled from a different baseline table");
        }
    }
    let space = parameter_space(cfg, meta.as_ref().map(|m| (m.pitch_scale, m.camber_scale)))?;
    Ok((space, meta))
}

pub fn evaluate(cfg: &PipelineConfig, designs: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let (space, meta) = space_for_designs(cfg, designs)?;
    let list = read_designs(designs)?;
    if list.first().is_some_and(|d| d.len() != space.dim()) {
        return Err(Error::Shape { expected: space.dim(), found: list[0].len() });
    }
    let mut data = evaluate_designs(&space, &list, &cfg.operating_point()?, &cfg.bem_settings(), cfg.jobs)?;
    if let Some(m) = meta {
        data = data.with_meta("seed", m.seed.to_string()).with_meta("baseline_sha256", m.baseline_sha256);
    }
    data.write(out)?;
    Ok(vec![out.to_path_buf()])
}

pub fn ingest(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let data = Dataset::read(input)?;
    log::info!("ingested {} samples x {} parameters", data.n_samples(), data.n_params());
    data.write(out)?;
    Ok(vec![out.to_path_buf()])
}

fn parameter_labels(m: usize) -> Vec<String> {
    (1..=m / 2).map(|i| format!("pitch - {i}")).chain((1..=m - m / 2).map(|i| format!("camber - {i}"))).collect()
}

fn eigen_files(
    cfg: &PipelineConfig,
    dir: &Path,
    name: &str,
    sub: &ActiveSubspace,
    labels: &[String],
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let p = dir.join(format!("subspace_{name}.csv"));
    sub.write(&p)?;
    written.push(p);
    let mut ev = String::from("index,eigenvalue\n");
    for (i, l) in sub.eigenvalues().iter().enumerate() {
        let _ = writeln!(ev, "{},{}", i + 1, fmt17(*l));
    }
    let p = dir.join(format!("eigenvalues_{name}.csv"));
    textio::write(&p, ev)?;
    written.push(p);
    let bars = sub.eigenvector_bars(0)?;
    let mut wv = String::from("index,parameter,weight\n");
    for ((i, w), label) in bars.iter().zip(labels) {
        let _ = writeln!(wv, "{i},{label},{}", fmt17(*w));
    }
    let p = dir.join(format!("eigenvector_{name}.csv"));
    textio::write(&p, wv)?;
    written.push(p);
    let pts: Vec<(f64, f64)> = sub.eigenvalues().iter().enumerate().map(|(i, &l)| ((i + 1) as f64, l)).collect();
    write_svg(
        cfg,
        &dir.join(format!("eigenvalues_{name}.svg")),
        svg::chart(
            &format!("eigenvalues ({name})"),
            "index",
            "eigenvalue",
            &[Series { name, points: &pts, mark: Mark::Dots }],
            true,
        ),
    )?;
    let bar_vals: Vec<(String, f64)> = bars.iter().zip(labels).map(|((_, w), l)| (l.clone(), *w)).collect();
    write_svg(
        cfg,
        &dir.join(format!("eigenvector_{name}.svg")),
        svg::bars(&format!("first eigenvector ({name})"), &bar_vals),
    )
}

pub fn analyze(cfg: &PipelineConfig, dataset: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data = Dataset::read(dataset)?;
    let m = data.n_params();
    let labels = parameter_labels(m);
    let method = PipelineConfig { m, ..cfg.clone() }.gradient_method();
    let mut written = Vec::new();
    let mut summary = String::from("output,active_dim,lambda1,lambda2,gap_ratio,ambiguous,fallbacks\n");
    let mut covs = Vec::new();
    let mut leading = Vec::new();
    for name in OUTPUT_NAMES {
        let g = GradientSet::from_dataset(&data, name, method)?;
        let sub = ActiveSubspace::compute(&g, cfg.active_dim_choice())?;
        let l = sub.eigenvalues();
        let ratio = if l[1] > 0.0 { l[0] / l[1] } else { f64::INFINITY };
        let _ = writeln!(
            summary,
            "{name},{},{},{},{},{},{}",
            sub.active_dim(),
            fmt17(l[0]),
            fmt17(l[1]),
            fmt17(ratio),
            sub.is_ambiguous(),
            g.fallbacks()
        );
        eigen_files(cfg, out_dir, name, &sub, &labels, &mut written)?;

        let w = sub.eigenvectors().column(0).into_owned();
        let y = data.output(name)?;
        let pts: Vec<(f64, f64)> =
            (0..data.n_samples()).map(|i| (data.inputs().row(i).transpose().dot(&w), y[i])).collect();
        let mut s = format!("mu_active,{name}\n");
        for (t, v) in &pts {
            let _ = writeln!(s, "{},{}", fmt17(*t), fmt17(*v));
        }
        let p = out_dir.join(format!("summary_{name}.csv"));
        textio::write(&p, s)?;
        written.push(p);
        write_svg(
            cfg,
            &out_dir.join(format!("summary_{name}.svg")),
            svg::chart(
                &format!("{name} vs active variable"),
                "mu_M",
                name,
                &[Series { name, points: &pts, mark: Mark::Dots }],
                false,
            ),
        )?;
        covs.push(g.covariance());
        leading.push((name.to_string(), w));
    }
    let shared = ActiveSubspace::shared(&covs, cfg.active_dim_choice())?;
    eigen_files(cfg, out_dir, "shared", &shared, &labels, &mut written)?;
    let l = shared.eigenvalues();
    let _ = writeln!(
        summary,
        "shared,{},{},{},{},{},0",
        shared.active_dim(),
        fmt17(l[0]),
        fmt17(l[1]),
        fmt17(if l[1] > 0.0 { l[0] / l[1] } else { f64::INFINITY }),
        shared.is_ambiguous()
    );
    let p = out_dir.join("analysis_summary.csv");
    textio::write(&p, summary)?;
    written.push(p);

    let table = sensitivity_table(&leading, &labels, &Thresholds::default())?;
    for (file, body) in [("sensitivity.txt", table.to_text()), ("sensitivity.csv", table.to_csv())] {
        let p = out_dir.join(file);
        textio::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

fn fit_surface(cfg: &PipelineConfig, t: &[f64], y: &[f64]) -> Result<ResponseSurface> {
    match cfg.rs_degree {
        Auto::Auto => ResponseSurface::fit_auto(t, y, cfg.split_seed, cfg.train_fraction),
        Auto::Fixed(d) => ResponseSurface::fit_split(t, y, d, cfg.split_seed, cfg.train_fraction),
    }
}

pub fn optimize(cfg: &PipelineConfig, dataset: &Path, subspace: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data = Dataset::read(dataset)?;
    let mut sub = ActiveSubspace::read(subspace)?;
    if sub.dim() != data.n_params() {
        return Err(Error::Shape { expected: data.n_params(), found: sub.dim() });
    }
    if sub.active_dim() != 1 {
        log::warn!("optimizing over the leading direction only (subspace has M = {})", sub.active_dim());
        sub = sub.with_active_dim(ActiveDim::Fixed(1))?;
    }
    let scales = match (meta_f64(&data, "pitch_scale"), meta_f64(&data, "camber_scale")) {
        (Some(p), Some(c)) => Some((p, c)),
        _ => None,
    };
    let mut cfg = cfg.clone();
    cfg.m = data.n_params();
    let space = parameter_space(&cfg, scales)?;

    let w = sub.eigenvectors().column(0).into_owned();
    let t: Vec<f64> = (0..data.n_samples()).map(|i| data.inputs().row(i).transpose().dot(&w)).collect();
    let mut surfaces = Vec::new();
    let mut written = Vec::new();
    let mut table = String::from(
        "output,degree,train_r2,validation_r2,train_rmse,validation_rmse,domain_lo,domain_hi,coefficients\n",
    );
    for name in OUTPUT_NAMES {
        let y: Vec<f64> = data.output(name)?.iter().copied().collect();
        let rs = fit_surface(&cfg, &t, &y)?;
        let mt = rs.metrics();
        let coef: Vec<String> = rs.coefficients().iter().map(|c| fmt17(*c)).collect();
        let _ = writeln!(
            table,
            "{name},{},{},{},{},{},{},{},{}",
            rs.degree(),
            fmt17(mt.train_r2),
            fmt17(mt.validation_r2),
            fmt17(mt.train_rmse),
            fmt17(mt.validation_rmse),
            fmt17(rs.domain().0),
            fmt17(rs.domain().1),
            coef.join(";")
        );
        let mut s = format!("mu_active,{name},set\n");
        let mut train_pts = Vec::new();
        let mut val_pts = Vec::new();
        let train: std::collections::HashSet<usize> = rs.train_indices().iter().copied().collect();
        for (i, (&ti, &yi)) in t.iter().zip(&y).enumerate() {
            let set = if train.contains(&i) { "train" } else { "validation" };
            let _ = writeln!(s, "{},{},{set}", fmt17(ti), fmt17(yi));
            if train.contains(&i) {
                train_pts.push((ti, yi))
            } else {
                val_pts.push((ti, yi))
            }
        }
        let p = out_dir.join(format!("response_{name}.csv"));
        textio::write(&p, s)?;
        written.push(p);
        let (lo, hi) = rs.domain();
        let curve: Vec<(f64, f64)> =
            (0..=200).map(|k| lo + (hi - lo) * k as f64 / 200.0).map(|x| (x, rs.value(x))).collect();
        let mut s = format!("mu_active,{name}_predicted\n");
        for (x, v) in &curve {
            let _ = writeln!(s, "{},{}", fmt17(*x), fmt17(*v));
        }
        let p = out_dir.join(format!("response_{name}_curve.csv"));
        textio::write(&p, s)?;
        written.push(p);
        write_svg(
            &cfg,
            &out_dir.join(format!("response_{name}.svg")),
            svg::chart(
                &format!("response surface: {name}"),
                "mu_M",
                name,
                &[
                    Series { name: "train", points: &train_pts, mark: Mark::Dots },
                    Series { name: "validation", points: &val_pts, mark: Mark::Dots },
                    Series { name: "fit", points: &curve, mark: Mark::Line },
                ],
                false,
            ),
        )?;
        surfaces.push((name.to_string(), rs));
    }
    let p = out_dir.join("surfaces.csv");
    textio::write(&p, table)?;
    written.push(p);

    let get = |n: &str| surfaces.iter().find(|(k, _)| k == n).map(|(_, s)| s.clone()).expect("all outputs fitted");
    let kt = get("kt");
    let kt0 = kt.value(0.0);
    let mut constraints = vec![Constraint {
        name: "kt".into(),
        relation: Relation::Within { center: kt0, tolerance: cfg.kt_tolerance * kt0.abs() },
        surface: kt,
    }];
    if cfg.eta_constraint {
        let eta = get("eta");
        constraints.push(Constraint { name: "eta".into(), relation: Relation::Ge(eta.value(0.0)), surface: eta });
    }
    let objective = get(&cfg.objective);
    let report = constrained_optimize((&cfg.objective, &objective), &constraints, &surfaces, &space, &sub, cfg.n_grid)?;

    let mut text = report.to_text();
    let mut verify = String::from("output,baseline,optimized\n");
    if data.source() == DataSource::Surrogate {
        let op = cfg.operating_point()?;
        let base = bem_evaluate(space.baseline(), &op, &cfg.bem_settings())?;
        let opt = bem_evaluate(&space.apply(&report.back_mapped.design)?, &op, &cfg.bem_settings())?;
        let _ = writeln!(text, "surrogate evaluation (baseline -> back-mapped design):");
        for (k, name) in OUTPUT_NAMES.iter().enumerate() {
            let (b, o) = (base.row()[k], opt.row()[k]);
            let _ = writeln!(text, "  {name:<5} {b:.6e} -> {o:.6e}");
            let _ = writeln!(verify, "{name},{},{}", fmt17(b), fmt17(o));
        }
        let p = out_dir.join("verification.csv");
        textio::write(&p, &verify)?;
        written.push(p);
    }
    for (file, body) in [("report.txt", text), ("report.csv", report.to_csv())] {
        let p = out_dir.join(file);
        textio::write(&p, body)?;
        written.push(p);
    }

    let design = DesignSample::new(report.back_mapped.design.clone())?;
    let (ps, cs) = space.bound_scales();
    let meta = DesignMetadata {
        seed: data.meta("seed").and_then(|s| s.parse().ok()).unwrap_or(cfg.seed),
        pitch_bound: space.pitch_bound(),
        camber_bound: space.camber_bound(),
        pitch_scale: ps,
        camber_scale: cs,
        draws: 0,
        rejected: 0,
        baseline_sha256: textio::sha256_hex(table_text(&cfg)?.as_bytes()),
    };
    let p = out_dir.join("optimized_design.csv");
    write_designs(&p, &[design], space.dim(), &meta)?;
    written.push(p.clone());
    written.push(sidecar_path(&p));
    let p = out_dir.join("optimized_distributions.txt");
    textio::write(&p, space.apply(&report.back_mapped.design)?.to_text())?;
    written.push(p);

    let (pitch, camber) = deformed_curves_csv(&space, &report.back_mapped.design, 101)?;
    for (file, body, label) in [("pitch.csv", pitch, "P/D"), ("camber.csv", camber, "f/c")] {
        let p = out_dir.join(file);
        let rows: Vec<Vec<f64>> =
            body.lines().skip(1).map(|l| l.split(',').filter_map(|v| v.parse().ok()).collect()).collect();
        let base: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        let opt: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
        write_svg(
            &cfg,
            &p.with_extension("svg"),
            svg::chart(
                &format!("{} distribution", file.trim_end_matches(".csv")),
                "r/R",
                label,
                &[
                    Series { name: "baseline", points: &base, mark: Mark::Line },
                    Series { name: "optimized", points: &opt, mark: Mark::Line },
                ],
                false,
            ),
        )?;
        textio::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

/// Lofts and exports the selected designs (all rows when `indices` is empty)
/// or, without a design file, the baseline blade.
pub fn build(
    cfg: &PipelineConfig,
    designs: Option<&Path>,
    indices: &[usize],
    out_dir: &Path,
    format: SurfaceFormat,
) -> Result<Vec<PathBuf>> {
    let ext = match format {
        SurfaceFormat::Stl => "stl",
        SurfaceFormat::GridCsv => "csv",
    };
    let sections = SectionSource::Single(section(cfg)?);
    let mut jobs: Vec<(String, RadialDistributions)> = Vec::new();
    match designs {
        None => jobs.push(("baseline".into(), baseline_distributions(cfg)?)),
        Some(path) => {
            let (space, _) = space_for_designs(cfg, path)?;
            let list = read_designs(path)?;
            let stem = path.file_stem().map_or("design".into(), |s| s.to_string_lossy().into_owned());
            let selected: Vec<usize> = if indices.is_empty() { (0..list.len()).collect() } else { indices.to_vec() };
            for k in selected {
                let d = list.get(k).ok_or(Error::Index { index: k, len: list.len() })?;
                jobs.push((format!("{stem}_{k}"), space.apply(d.as_slice())?));
            }
        }
    }
    let mut written = Vec::new();
    for (name, dist) in jobs {
        let blade = loft_blade(&dist, &sections, cfg.n_radial)?;
        let blades = replicate_propeller(&blade, dist.n_blades())?;
        let p = out_dir.join(format!("{name}.{ext}"));
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let skipped = export_surface(&blades, format, &p)?;
        if skipped > 0 {
            log::warn!("{}: {skipped} degenerate triangles skipped", p.display());
        }
        written.push(p);
    }
    Ok(written)
}

/// Every stage over the standard layout under `cfg.out_dir`.
pub fn pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let out = &cfg.out_dir;
    let mut written = fit_baseline(cfg, &out.join(layout::BASELINE))?;
    written.extend(sample(cfg, &out.join(layout::DESIGNS))?);
    written.extend(evaluate(cfg, &out.join(layout::DESIGNS), &out.join(layout::DATASET))?);
    written.extend(analyze(cfg, &out.join(layout::DATASET), &out.join(layout::ANALYSIS))?);
    written.extend(optimize(
        cfg,
        &out.join(layout::DATASET),
        &out.join(layout::SHARED_SUBSPACE),
        &out.join(layout::OPTIMIZATION),
    )?);
    let geometry = out.join(layout::GEOMETRY);
    written.extend(build(cfg, None, &[], &geometry, cfg.surface_format)?);
    written.extend(build(cfg, Some(&out.join(layout::OPTIMIZED_DESIGN)), &[], &geometry, cfg.surface_format)?);
    Ok(written)
}
