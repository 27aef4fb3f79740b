//! Dirichlet, blow-up and maximal solves with their oracle checks.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use kricci::closed_forms::{exterior_ball, general_radial, interior_ball, BallSide, RadialProfile};
use kricci::conformal::EquationSpec;
use kricci::radial::*;
use kricci::regularity::{fit_growth, growth_coefficient, FitEnd};
use serde_json::json;

use crate::config::{BoundaryConfig, EquationConfig, ProblemConfig, SolveJob};
use crate::report::Check;

/// Everything a job produces besides files on disk.
pub struct JobResult {
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    /// Named fields to dump as CSV.
    pub fields: Vec<(String, RadialField)>,
    /// Human-readable convergence table.
    pub table: String,
}

fn ball_profile(eq: &EquationConfig, side: BallSide, s: f64) -> Result<RadialProfile> {
    Ok(match (eq.general, side) {
        (None, BallSide::Interior) => interior_ball(eq.n, eq.k, s, &[])?,
        (None, BallSide::Exterior) => exterior_ball(eq.n, eq.k, s, &[])?,
        (Some(g), side) => general_radial(eq.n, eq.k, g.alpha, g.alpha0, s, &[], side)?,
    })
}

/// `v = (2/(n−2)) ln u` of a closed-form profile.
fn log_profile(p: &RadialProfile, n: usize) -> impl Fn(f64) -> f64 + '_ {
    move |r| 2.0 / (n as f64 - 2.0) * p.eval(r).map(|f| f[0].ln()).unwrap_or(f64::NAN)
}

/// Sup of `|u/u_exact − 1|` over nodes selected by `keep`.
fn u_error(field: &RadialField, n: usize, exact: &dyn Fn(f64) -> f64, keep: impl Fn(f64) -> bool) -> f64 {
    let h = (n as f64 - 2.0) / 2.0;
    field
        .mesh
        .nodes
        .iter()
        .zip(&field.v)
        .filter(|(r, _)| keep(**r))
        .map(|(&r, &v)| ((h * (v - exact(r))).exp() - 1.0).abs())
        .fold(0.0, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) })
}

fn stage_table(report: &SolveReport) -> String {
    let mut t = String::new();
    if report.stages.is_empty() {
        let _ = writeln!(t, "  iterations {:>4}  residual {:.3e}  margin {:.3e}", report.iterations, report.final_residual, report.final_margin);
        return t;
    }
    let _ = writeln!(t, "  {:>8}  {:>5}  {:>10}  {:>10}  {:>10}", "m", "iters", "residual", "margin", "core Δ");
    for s in &report.stages {
        let change = s.core_change.map(|c| format!("{c:.3e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(t, "  {:>8.2}  {:>5}  {:>10.3e}  {:>10.3e}  {:>10}", s.boundary_value, s.iterations, s.residual, s.margin, change);
    }
    t
}

pub fn run_job(job: &SolveJob) -> Result<JobResult> {
    job.solver.validate()?;
    let spec = job.equation.spec()?;
    match &job.problem {
        ProblemConfig::Dirichlet {
            domain,
            boundary,
            intervals,
            grading,
            order_check,
            tolerance,
        } => dirichlet(job, &spec, (*domain).into(), boundary, *intervals, *grading, *order_check, *tolerance),
        ProblemConfig::Blowup {
            domain,
            intervals,
            grading,
            ends,
            tolerance,
            growth_tolerance,
        } => blowup(job, &spec, (*domain).into(), *intervals, *grading, *ends, *tolerance, *growth_tolerance),
        ProblemConfig::Maximal { s, radii, exhaustion, outer } => maximal(job, &spec, *s, radii, exhaustion, *outer),
    }
}

#[allow(clippy::too_many_arguments)]
fn dirichlet(
    job: &SolveJob,
    spec: &EquationSpec,
    domain: Domain,
    boundary: &BoundaryConfig,
    intervals: usize,
    grading: Option<Grading>,
    order_check: bool,
    tolerance: f64,
) -> Result<JobResult> {
    let n = spec.n;
    let grading = grading.unwrap_or(Grading::Uniform);
    let (a, b) = domain.bounds();
    let profile = match boundary {
        BoundaryConfig::ClosedForm { side, s } => Some(ball_profile(&job.equation, *side, *s)?),
        BoundaryConfig::Values { .. } => None,
    };
    let exact = profile.as_ref().map(|p| log_profile(p, n));
    let data = match (boundary, &exact) {
        (BoundaryConfig::Values { inner, outer }, _) => BoundaryData { inner: *inner, outer: *outer },
        (BoundaryConfig::ClosedForm { .. }, Some(f)) => BoundaryData {
            inner: (!domain.has_center()).then(|| f(a)),
            outer: f(b),
        },
        _ => unreachable!(),
    };
    if !data.outer.is_finite() || data.inner.is_some_and(|x| !x.is_finite()) {
        bail!("closed-form boundary data is not finite on {domain:?}");
    }
    let solve_at = |nn: usize| -> Result<(RadialField, SolveReport)> {
        let mesh = build_mesh(domain, nn, grading)?;
        let init = subsolution_field(&mesh, &data, spec)?;
        Ok(solve_dirichlet(init, &data, spec, &job.solver)?)
    };
    let (field, report) = solve_at(intervals)?;
    let mut checks = vec![Check::flag("newton converged", report.converged, report.final_residual)];
    let mut table = format!("dirichlet N={intervals}\n{}", stage_table(&report));
    let mut details = json!({ "report": report });
    if let Some(f) = &exact {
        let err = u_error(&field, n, f, |_| true);
        checks.push(Check::at_most("closed-form recovery (sup relative error in u)", err, tolerance));
        let _ = writeln!(table, "  sup relative error vs closed form: {err:.3e}");
        if order_check {
            if !intervals.is_multiple_of(4) {
                bail!("order check needs intervals divisible by 4");
            }
            let (f1, _) = solve_at(intervals / 4)?;
            let (f2, _) = solve_at(intervals / 2)?;
            let est = estimate_order([&f1, &f2, &field], Some(f), None)?;
            let dev = (est.order - 2.0).abs();
            checks.push(Check::at_most("observed order within 0.2 of 2", dev, 0.2));
            let _ = writeln!(table, "  {:>6}  {:>10}", "N", "error (v)");
            for (i, e) in est.errors.iter().enumerate() {
                let _ = writeln!(table, "  {:>6}  {:>10.3e}", (intervals / 4) << i, e);
            }
            let _ = writeln!(table, "  observed order {:.3}", est.order);
            details["order"] = json!(est);
        }
    }
    Ok(JobResult {
        checks,
        details,
        fields: vec![("field".into(), field)],
        table,
    })
}

#[allow(clippy::too_many_arguments)]
fn blowup(
    job: &SolveJob,
    spec: &EquationSpec,
    domain: Domain,
    intervals: usize,
    grading: Option<Grading>,
    ends: Option<Ends>,
    tolerance: f64,
    growth_tolerance: f64,
) -> Result<JobResult> {
    let n = spec.n;
    if ends.is_none() && matches!(domain, Domain::ExteriorTrunc { .. }) {
        bail!("truncated exterior domains need explicit `ends`");
    }
    let natural = ends.is_none();
    let ends = ends.unwrap_or_else(|| Ends::natural(&domain));
    let mesh = build_mesh(domain, intervals, grading.unwrap_or_else(|| Grading::clustered(&domain)))?;
    let (field, report) = solve_blowup(&mesh, spec, &job.solver, &ends)?;
    let mut checks = vec![Check::flag("continuation converged", report.converged, report.final_residual)];
    for (i, c) in report.monotonicity_certificates.iter().enumerate() {
        checks.push(Check::at_most(format!("stages increase (certificate {i})"), c.worst_violation, c.tolerance));
    }
    let mut table = format!("blow-up N={intervals}\n{}", stage_table(&report));
    if let (Domain::Ball { radius }, true) = (domain, natural) {
        let prof = ball_profile(&job.equation, BallSide::Interior, radius)?;
        let exact = log_profile(&prof, n);
        let err = u_error(&field, n, &exact, |r| r <= 0.9 * radius);
        checks.push(Check::at_most("ball closed form on r <= 0.9 R", err, tolerance));
        let _ = writeln!(table, "  sup relative error vs ball solution on r <= 0.9 R: {err:.3e}");
        if job.equation.general.is_none() {
            let fit = fit_growth(&field, n, FitEnd::Outer, None)?;
            let target = growth_coefficient(n, spec.k)?;
            let rel = (fit.estimate / target - 1.0).abs();
            checks.push(Check::at_most("boundary growth rate", rel, growth_tolerance));
            let _ = writeln!(table, "  growth fit {:.6} vs {target:.6}", fit.estimate);
        }
    }
    Ok(JobResult {
        checks,
        details: json!({ "report": report }),
        fields: vec![("field".into(), field)],
        table,
    })
}

fn maximal(
    job: &SolveJob,
    spec: &EquationSpec,
    s: f64,
    radii: &[f64],
    ex: &ExhaustionConfig,
    outer: OuterBoundary,
) -> Result<JobResult> {
    let n = spec.n;
    let (fields, report) = solve_maximal(s, radii, spec, &job.solver, ex, outer)?;
    let m = &report.monotonicity;
    let mut checks = vec![
        Check::flag("all annuli converged", report.stage_reports.iter().all(|r| r.converged), 0.0),
        Check::at_most("sequence decreases on the core", m.worst_violation, m.tolerance),
    ];
    let mut table = String::from("maximal solution\n");
    let _ = writeln!(table, "  {:>10}  {:>10}", "R", "core gap");
    for (i, r) in radii.iter().enumerate() {
        let gap = i.checked_sub(1).map(|j| format!("{:.3e}", report.cauchy_gaps[j])).unwrap_or_else(|| "-".into());
        let _ = writeln!(table, "  {r:>10.1}  {gap:>10}");
    }
    let mut details = json!({ "report": report });
    if job.equation.general.is_none() {
        let prof = exterior_ball(n, spec.k, s, &[])?;
        let exact = log_profile(&prof, n);
        let keep = |r: f64| r >= 1.1 * s && r <= ex.r_core;
        let last = fields.len() - 1;
        let err = u_error(&fields[last], n, &exact, keep);
        checks.push(Check::at_most("exterior closed form on the core", err, 1e-3).non_blocking());
        let _ = writeln!(table, "  error vs exterior solution at R = {}: {err:.3e}", radii[last]);
        details["oracle_error"] = json!(err);
    }
    let named = radii.iter().zip(fields).map(|(r, f)| (format!("field_R{r}"), f)).collect();
    Ok(JobResult {
        checks,
        details,
        fields: named,
        table,
    })
}
