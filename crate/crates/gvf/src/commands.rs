//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

use gvf_core::chart::{self, build_path_atlas, trace_fiber, ChartOptions, DEFAULT_ATLAS_STEP};
use gvf_core::doa::{self, DoaOptions};
use gvf_core::field::{find_singular_points, SingularSearch};
use gvf_core::flow::{self, Direction, FlowError};
use gvf_core::wazewski::{self, audit_radius, auto_radius, RadiusAudit, VerifyOptions};
use gvf_core::{CellLabel, ChartError, GuidingField, PathAtlas, SingularReport, VerificationReport, WazewskiConfig};

use crate::config::{parse_list, RadiusChoice, RunConfig};
use crate::output::{indexed_columns, json_header, json_point, json_real, real, write_json, CsvWriter};
use crate::{CliError, Command};

pub const SUITES: [&str; 6] = ["orthogonality", "lyapunov", "invariance", "exitset", "absorption", "convergence"];

/// Grid step of the singular point search used for `R` audits.
pub const AUDIT_SEARCH_STEP: f64 = 0.25;

pub fn dispatch(command: &Command, cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match command {
        Command::Simulate { .. } => simulate(cfg, out),
        Command::Doa { summary, .. } => doa_grid(cfg, out, summary.as_deref()),
        Command::Verify { .. } => verify(cfg, out),
        Command::Chart { .. } => chart_points(cfg, out),
        Command::Fiber { .. } => fiber(cfg, out),
        Command::Singular { .. } => singular(cfg, out),
        Command::Atlas { .. } => atlas(cfg, out),
    }
}

fn flow_error(e: FlowError) -> CliError {
    match e {
        FlowError::StartOutsideDomain | FlowError::Dimension { .. } | FlowError::InvalidHorizon(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn chart_error(e: ChartError) -> CliError {
    match e {
        ChartError::Precondition(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn required<'a>(cfg: &'a RunConfig, key: &str) -> Result<&'a str, CliError> {
    cfg.settings.get(key).ok_or_else(|| CliError::Config(format!("{key} is required")))
}

fn positive(cfg: &RunConfig, key: &str, default: f64) -> Result<f64, CliError> {
    let v = cfg.settings.f64(key)?.unwrap_or(default);
    if !(v > 0.0) {
        return Err(CliError::Config(format!("{key}: must be positive, got {v}")));
    }
    Ok(v)
}

fn point_arg(cfg: &RunConfig, key: &str) -> Result<Vec<f64>, CliError> {
    let p = parse_list(key, required(cfg, key)?)?;
    if p.len() != cfg.scenario.dim {
        return Err(CliError::Config(format!("{key}: expected {} coordinates, got {}", cfg.scenario.dim, p.len())));
    }
    Ok(p)
}

fn build_atlas(cfg: &RunConfig, field: &GuidingField, step: f64) -> Result<PathAtlas, CliError> {
    let seed = cfg
        .scenario
        .path_seed
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("scenario '{}' has no path seed; set scenario.path_seed", cfg.scenario.name)))?;
    build_path_atlas(field.system(), seed, step).map_err(chart_error)
}

fn singular_search(cfg: &RunConfig, step: f64) -> SingularSearch {
    SingularSearch::new(cfg.scenario.lower.clone(), cfg.scenario.upper.clone(), step)
}

/// The ellipsoid level and its audit against the singular set found in the scenario box.
fn resolve_radius(cfg: &RunConfig, field: &GuidingField) -> Result<(WazewskiConfig, RadiusAudit, SingularReport), CliError> {
    let report = find_singular_points(field, &singular_search(cfg, AUDIT_SEARCH_STEP), None).map_err(|e| CliError::Numerical(e.to_string()))?;
    let choice = cfg.radius.clone().or(cfg.scenario.default_radius.map(RadiusChoice::Fixed)).unwrap_or(RadiusChoice::Auto);
    let r = match choice {
        RadiusChoice::Fixed(r) => r,
        RadiusChoice::Auto => auto_radius(field, &report)
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .ok_or_else(|| CliError::Config("R = auto needs at least one singular point in the box; set R explicitly".into()))?,
    };
    let wz = WazewskiConfig::for_field(field, r).map_err(|e| CliError::Config(e.to_string()))?;
    let audit = audit_radius(field, &wz, &report).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok((wz, audit, report))
}

fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let x0 = point_arg(cfg, "simulate.x0")?;
    let horizon = cfg.horizon_or(100.0);
    let direction = if cfg.settings.bool("simulate.backward")? { Direction::Backward } else { Direction::Forward };
    let dynamics = cfg.scenario.dynamics();
    let traj = flow::integrate(dynamics, &x0, horizon, direction, &cfg.integrator).map_err(flow_error)?;
    let header = cfg.describe("simulate", &[
        ("simulate.x0", x0.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")),
        ("simulate.backward", (direction == Direction::Backward).to_string()),
        ("integrator.t_max", format!("{:?}", horizon)),
    ]);
    let last = traj.last();
    let mut notes = vec![("termination".to_string(), traj.termination.as_str().to_string())];
    if let Some(d) = dynamics.target_distance(&last.x) {
        notes.push(("final_distance".into(), real(d)));
    }
    let mut columns = vec!["t".to_string()];
    columns.extend(indexed_columns("x", cfg.scenario.dim));
    columns.push("V".into());
    let mut w = CsvWriter::create(out, &header, &notes, &columns)?;
    for s in &traj.samples {
        let mut row = vec![real(s.t)];
        row.extend(s.x.iter().map(|v| real(*v)));
        row.push(real(s.v));
        w.row(&row)?;
    }
    w.finish()?;
    Ok(())
}

fn doa_grid(cfg: &RunConfig, out: Option<&Path>, summary: Option<&Path>) -> Result<(), CliError> {
    let n = cfg.scenario.dim;
    let res: Vec<usize> = match cfg.settings.get("doa.res") {
        None => vec![50; n],
        Some(text) => {
            let parts: Result<Vec<usize>, _> = text.split(',').map(|t| t.trim().parse::<usize>()).collect();
            let parts = parts.map_err(|_| CliError::Config(format!("doa.res: expected integers, got '{text}'")))?;
            match parts.len() {
                1 => vec![parts[0]; n],
                k if k == n => parts,
                _ => return Err(CliError::Config(format!("doa.res: expected 1 or {n} values"))),
            }
        }
    };
    let horizon = cfg.horizon_or(100.0);
    let singular_points = match cfg.scenario.guiding() {
        Some(field) => find_singular_points(field, &singular_search(cfg, AUDIT_SEARCH_STEP), None)
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .points
            .into_iter()
            .map(|p| p.point)
            .collect(),
        None => Vec::new(),
    };
    let flow_opts = gvf_core::IntegratorOptions { stop_on_converge: true, sample_every: usize::MAX, ..cfg.integrator.clone() };
    let opts = DoaOptions { horizon, flow: flow_opts, exclusions: cfg.scenario.exclusions.clone(), singular_points };
    let grid = doa::estimate_doa(cfg.scenario.dynamics(), &cfg.scenario.lower, &cfg.scenario.upper, &res, &opts)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let header = cfg.describe("doa", &[
        ("doa.res", res.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")),
        ("integrator.t_max", format!("{:?}", horizon)),
    ]);
    let mut columns = indexed_columns("i", n);
    columns.extend(indexed_columns("x", n));
    columns.push("label".into());
    let mut w = CsvWriter::create(out, &header, &[], &columns)?;
    for (i, label) in grid.labels.iter().enumerate() {
        let mut row: Vec<String> = grid.multi_index(i).iter().map(|k| k.to_string()).collect();
        row.extend(grid.center(i).iter().map(|v| real(*v)));
        row.push(label.as_str().into());
        w.row(&row)?;
    }
    let summary_path: Option<PathBuf> = summary.map(Path::to_path_buf).or_else(|| out.map(|p| p.with_extension("summary.json")));
    if let Some(path) = summary_path {
        let mut counts = Map::new();
        for label in CellLabel::ALL {
            counts.insert(label.as_str().into(), json!(grid.count(label)));
        }
        let comps = doa::components(&grid, CellLabel::Converged);
        let value = json!({
            "header": json_header(&header),
            "cells": grid.cell_count(),
            "counts": counts,
            "converged_components": comps.len(),
            "converged_component_sizes": comps,
        });
        write_json(Some(&path), &value)?;
    }
    w.finish()?;
    Ok(())
}

fn report_json(r: &VerificationReport, seconds: f64) -> Value {
    json!({
        "claim": r.claim,
        "samples": r.samples,
        "failures": r.failures,
        "worst_margin": json_real(r.worst_margin),
        "sampling_failures": r.sampling_failures,
        "runtime_seconds": seconds,
    })
}

fn verify(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let samples = cfg.settings.usize("verify.samples")?.unwrap_or(500);
    let suites: Vec<String> = match cfg.settings.get("verify.suites") {
        Some(text) => text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None if cfg.scenario.guiding().is_some() => SUITES.iter().map(|s| s.to_string()).collect(),
        None => vec!["convergence".into()],
    };
    if let Some(bad) = suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
        return Err(CliError::Config(format!("unknown suite '{bad}' (known: {})", SUITES.join(", "))));
    }
    let vopts = VerifyOptions { seed: cfg.seed, flow: cfg.integrator.clone() };
    let mut reports = Vec::new();
    let mut extra = vec![
        ("verify.suites", suites.join(",")),
        ("verify.samples", samples.to_string()),
    ];
    let mut audit_json = Value::Null;
    let mut audit_ok = true;

    match cfg.scenario.guiding() {
        None => {
            if suites.iter().any(|s| s != "convergence") {
                return Err(CliError::Config(format!("scenario '{}' supports only the convergence suite", cfg.scenario.name)));
            }
            let horizon = cfg.horizon_or(50.0);
            extra.push(("integrator.t_max", format!("{:?}", horizon)));
            let start = Instant::now();
            let s = &cfg.scenario;
            let r = wazewski::verify_box_convergence(s.dynamics(), &s.lower, &s.upper, &s.exclusions, samples, horizon, &vopts);
            reports.push(report_json(&r, start.elapsed().as_secs_f64()));
            audit_ok &= r.passed();
        }
        Some(field) => {
            let (wz, audit, _) = resolve_radius(cfg, field)?;
            extra.push(("wazewski.R", format!("{:?}", wz.radius())));
            audit_ok = audit.pass;
            audit_json = json!({
                "pass": audit.pass,
                "margin": json_real(audit.margin),
                "violating": audit.violating.as_deref().map(json_point),
            });
            let needs_atlas = suites.iter().any(|s| matches!(s.as_str(), "invariance" | "exitset" | "absorption" | "convergence"));
            let atlas = if needs_atlas { Some(build_atlas(cfg, field, DEFAULT_ATLAS_STEP)?) } else { None };
            let s = &cfg.scenario;
            for suite in &suites {
                let start = Instant::now();
                let r = match suite.as_str() {
                    "orthogonality" => wazewski::verify_orthogonality(field.system(), &s.lower, &s.upper, samples, cfg.seed),
                    "lyapunov" => wazewski::verify_lyapunov_rate(field, &s.lower, &s.upper, samples, 1e-4, cfg.seed),
                    "invariance" => {
                        let horizon = cfg.horizon_or(50.0);
                        wazewski::verify_forward_invariance(field, &wz, atlas.as_ref().unwrap(), samples, horizon, &vopts)
                    }
                    "exitset" => wazewski::verify_exit_set(field, &wz, atlas.as_ref().unwrap(), samples, &vopts),
                    "absorption" => wazewski::verify_absorption(field, &wz, atlas.as_ref().unwrap(), samples, &[0.1, 1.0, 10.0], &vopts),
                    _ => {
                        let horizon = cfg.horizon_or(100.0);
                        wazewski::verify_convergence(field, &wz, atlas.as_ref().unwrap(), samples, horizon, &vopts)
                    }
                };
                reports.push(report_json(&r, start.elapsed().as_secs_f64()));
            }
        }
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r["failures"].as_u64() != Some(0))
        .map(|r| r["claim"].as_str().unwrap_or("").to_string())
        .collect();
    let passed = failed.is_empty() && audit_ok;
    let header = cfg.describe("verify", &extra.iter().map(|(k, v)| (*k, v.clone())).collect::<Vec<_>>());
    let value = json!({
        "header": json_header(&header),
        "radius_audit": audit_json,
        "reports": reports,
        "passed": passed,
    });
    write_json(out, &value)?;
    if !passed {
        let mut why = failed;
        if !audit_ok && cfg.scenario.guiding().is_some() {
            why.push("radius_audit".into());
        }
        return Err(CliError::Verification(why.join(", ")));
    }
    Ok(())
}

/// Numeric rows of a CSV file; comment lines and a non-numeric column row are skipped.
pub fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read points {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(p) if p.len() >= dim => points.push(p[..dim].to_vec()),
            Ok(_) => return Err(CliError::Config(format!("{} line {}: need {dim} coordinates", path.display(), lineno + 1))),
            Err(_) if points.is_empty() => continue,
            Err(_) => return Err(CliError::Config(format!("{} line {}: not a number", path.display(), lineno + 1))),
        }
    }
    Ok(points)
}

fn chart_status(e: &ChartError) -> &'static str {
    match e {
        ChartError::NotCertified => "not_certified",
        ChartError::LikelyOutsideDoa => "likely_outside_doa",
        ChartError::Projection { .. } | ChartError::DegenerateFrame => "projection_failed",
        _ => "failed",
    }
}

fn chart_points(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let field = cfg.guiding()?;
    let path = PathBuf::from(required(cfg, "chart.points")?);
    let points = read_points(&path, cfg.scenario.dim)?;
    let (wz, _, _) = resolve_radius(cfg, field)?;
    let atlas = build_atlas(cfg, field, DEFAULT_ATLAS_STEP)?;
    let opts = ChartOptions { t_max: cfg.horizon_or(100.0), ..ChartOptions::default() };
    let rows = rayon_map(&points, |x| {
        let sample = chart::global_chart(field, &wz, &atlas, x, &opts)?;
        let back = chart::chart_inverse(field, &wz, &atlas, &sample.point, &opts)?;
        let residual = x.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Ok::<_, ChartError>((sample, residual))
    });
    let n = cfg.scenario.dim;
    let m = field.system().count();
    let header = cfg.describe("chart", &[
        ("chart.points", path.display().to_string()),
        ("wazewski.R", format!("{:?}", wz.radius())),
        ("integrator.t_max", format!("{:?}", opts.t_max)),
    ]);
    let mut columns = indexed_columns("x", n);
    columns.extend(indexed_columns("r", m));
    columns.extend(["theta", "tau", "status", "residual"].map(String::from));
    let mut w = CsvWriter::create(out, &header, &[], &columns)?;
    for (x, row) in points.iter().zip(rows) {
        let mut fields: Vec<String> = x.iter().map(|v| real(*v)).collect();
        match row {
            Ok((s, residual)) => {
                fields.extend(s.point.r.iter().map(|v| real(*v)));
                fields.extend([real(s.point.theta), real(s.tau), "ok".into(), real(residual)]);
            }
            Err(e) => {
                fields.extend((0..m + 2).map(|_| "nan".to_string()));
                fields.extend([chart_status(&e).to_string(), "nan".into()]);
            }
        }
        w.row(&fields)?;
    }
    w.finish()?;
    Ok(())
}

fn rayon_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

fn fiber(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let field = cfg.guiding()?;
    let level = parse_list("fiber.level", required(cfg, "fiber.level")?)?;
    let step = positive(cfg, "fiber.step", DEFAULT_ATLAS_STEP)?;
    let atlas = build_atlas(cfg, field, DEFAULT_ATLAS_STEP)?;
    let curve = trace_fiber(&atlas, field.system(), &level, step).map_err(chart_error)?;
    let header = cfg.describe("fiber", &[
        ("fiber.level", level.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")),
        ("fiber.step", format!("{:?}", step)),
    ]);
    let notes = [("closure_error".to_string(), real(curve.closure_error)), ("length".to_string(), real(curve.length))];
    write_polyline(out, &header, &notes, &curve.points, None)
}

fn write_polyline(
    out: Option<&Path>,
    header: &[(String, String)],
    notes: &[(String, String)],
    points: &[Vec<f64>],
    atlas_arcs: Option<&[f64]>,
) -> Result<(), CliError> {
    let n = points.first().map_or(0, Vec::len);
    let mut columns = vec!["s".to_string()];
    if atlas_arcs.is_some() {
        columns.push("theta".into());
    }
    columns.extend(indexed_columns("x", n));
    let mut w = CsvWriter::create(out, header, notes, &columns)?;
    let mut s = 0.0;
    for (i, p) in points.iter().enumerate() {
        if let Some(arcs) = atlas_arcs {
            s = arcs[i];
        } else if i > 0 {
            s += p.iter().zip(&points[i - 1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        }
        let mut row = vec![real(s)];
        if let Some(arcs) = atlas_arcs {
            let theta = std::f64::consts::TAU * s / arcs[arcs.len() - 1];
            row.push(real(if theta >= std::f64::consts::TAU { theta - std::f64::consts::TAU } else { theta }));
        }
        row.extend(p.iter().map(|v| real(*v)));
        w.row(&row)?;
    }
    w.finish()?;
    Ok(())
}

fn singular(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let field = cfg.guiding()?;
    let step = positive(cfg, "singular.step", AUDIT_SEARCH_STEP)?;
    let atlas = match cfg.scenario.path_seed {
        Some(_) => Some(build_atlas(cfg, field, DEFAULT_ATLAS_STEP)?),
        None => None,
    };
    let report = find_singular_points(field, &singular_search(cfg, step), atlas.as_ref()).map_err(|e| CliError::Numerical(e.to_string()))?;
    let entry = |p: &gvf_core::field::SingularPoint| json!({ "point": json_point(&p.point), "residual": json_real(p.residual) });
    let header = cfg.describe("singular", &[("singular.step", format!("{:?}", step))]);
    let value = json!({
        "header": json_header(&header),
        "points": report.points.iter().map(entry).collect::<Vec<_>>(),
        "unresolved": report.unresolved.iter().map(entry).collect::<Vec<_>>(),
        "dist_to_path": report.dist_to_path.map(json_real),
    });
    write_json(out, &value)?;
    Ok(())
}

fn atlas(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let field = cfg.guiding()?;
    let step = positive(cfg, "atlas.step", DEFAULT_ATLAS_STEP)?;
    let atlas = build_atlas(cfg, field, step)?;
    let header = cfg.describe("atlas", &[("atlas.step", format!("{:?}", step))]);
    let notes = [("length".to_string(), real(atlas.length())), ("closure_error".to_string(), real(atlas.closure_error()))];
    write_polyline(out, &header, &notes, atlas.points(), Some(atlas.arc_lengths()))
}
