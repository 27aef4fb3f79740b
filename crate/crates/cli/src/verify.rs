//! Closed-form residual checks and barrier certificates.

use anyhow::Result;
use kricci::closed_forms::*;
use kricci::conformal::{residual, EquationSpec, Residual};
use kricci::symfun::{binomial, gamma_margin, vm_vector, CONE_BOUNDARY_TOL};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BarrierConfig, VerifyConfig};
use crate::report::Check;

fn unit_dir(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return x.into_iter().map(|t| t / norm).collect();
        }
    }
}

/// Sample radii strictly inside the domain of a ball-type profile with `s = 1`.
fn sample_radius(side: BallSide, j: usize, count: usize) -> f64 {
    let t = j as f64 / (count.max(2) - 1) as f64;
    match side {
        BallSide::Interior => 0.97 * t,
        BallSide::Exterior => 1.02 + 20.0 * t,
    }
}

/// Largest `|residual| / scale(u)` over the samples; a cone violation counts as infinite.
fn sup_residual(
    profile: &RadialProfile,
    spec: &EquationSpec,
    side: BallSide,
    count: usize,
    rng: &mut ChaCha8Rng,
    scale: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for j in 0..count {
        let t = sample_radius(side, j, count);
        let x: Vec<f64> = unit_dir(rng, spec.n).iter().map(|d| d * t).collect();
        let jet = profile.jet_at(&x)?;
        let rel = match residual(&jet, spec)? {
            Residual::Value { value } => value.abs() / scale(jet.value),
            Residual::ConeViolation { .. } => f64::INFINITY,
        };
        worst = worst.max(rel);
    }
    Ok(worst)
}

pub fn exact_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let [lo, hi] = cfg.dims;
    for n in lo.max(3)..=hi {
        let nf = n as f64;
        for k in 1..=n {
            let spec = EquationSpec::pure(n, k)?;
            // the right-hand side (n−2)/2 · u^{(n+2)/(n−2)}
            let rhs = move |u: f64| (nf - 2.0) / 2.0 * u.powf((nf + 2.0) / (nf - 2.0));
            for (label, side) in [("interior_ball", BallSide::Interior), ("exterior_ball", BallSide::Exterior)] {
                let p = match side {
                    BallSide::Interior => interior_ball(n, k, 1.0, &[])?,
                    BallSide::Exterior => exterior_ball(n, k, 1.0, &[])?,
                };
                let p = p.with_constant(cfg.constant_factor * p.constant().unwrap_or(1.0));
                let worst = sup_residual(&p, &spec, side, cfg.samples, rng, &rhs)?;
                checks.push(Check::at_most(format!("{label} n={n} k={k}"), worst, cfg.residual_tol));
            }
            if k < 2 {
                continue;
            }
            for g in &cfg.general {
                let spec = EquationSpec::general(n, k, g.alpha, g.alpha0)?;
                let mu = isotropic_root(n, k, g.alpha, g.alpha0)?;
                // size of the individual terms at the isotropic point
                let scale = binomial(n, k) * mu.powi(k as i32) + g.alpha.abs() * binomial(n, k - 1) * mu.powi(k as i32 - 1) + g.alpha0;
                for side in [BallSide::Interior, BallSide::Exterior] {
                    let p = general_radial(n, k, g.alpha, g.alpha0, 1.0, &[], side)?;
                    let p = p.with_constant(cfg.constant_factor * p.constant().unwrap_or(1.0));
                    let worst = sup_residual(&p, &spec, side, cfg.samples, rng, &|_| scale)?;
                    let name = format!("general_radial {side:?} n={n} k={k} alpha={} alpha0={}", g.alpha, g.alpha0).to_lowercase();
                    checks.push(Check::at_most(name, worst, cfg.residual_tol));
                }
            }
        }
    }
    Ok(checks)
}

pub fn barrier_checks(cfg: &BarrierConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &n in &cfg.dims {
        for k in 1..=n {
            for &[eps, delta] in &cfg.collars {
                let sub = collar_subsolution(n, k, eps, delta, 1.0)?;
                let c = certify_window(&sub, 1e-8, 0.9, cfg.window_samples, true)?;
                checks.push(Check::flag(format!("collar_sub n={n} k={k} eps={eps} delta={delta}"), c.holds, c.worst_gap));
                let sup = collar_supersolution(n, k, eps, delta, 1.0)?;
                let c = certify_window(&sup, eps * 1.0001, 0.9, cfg.window_samples, false)?;
                checks.push(Check::flag(format!("collar_super n={n} k={k} eps={eps} delta={delta}"), c.holds, c.worst_gap));
            }
        }
        if cfg.codim_phi {
            checks.push(phi_check(n)?);
        }
        if cfg.glued {
            checks.push(glued_check(n)?);
        }
    }
    for p in &cfg.psi {
        let cert = psi_certificate(p.n, p.k, p.m, p.a, p.ab / p.a, &default_zetas())?;
        let name = format!("codim_psi n={} k={} m={} a={} ab={}", p.n, p.k, p.m, p.a, p.ab);
        checks.push(Check::at_most(name, cert.max_margin, -CONE_BOUNDARY_TOL));
    }
    Ok(checks)
}

/// Worst relative deviation of the scaled φ spectrum from `((n−2)c/2) v_m`,
/// over every `(m, k)` with `v_m ∈ Γ_k`, together with the subsolution window.
fn phi_check(n: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut holds = true;
    for m in 1..=n {
        let vm = vm_vector(n, m)?;
        for k in 1..=n {
            if gamma_margin(&vm.expand(), k)? <= CONE_BOUNDARY_TOL {
                continue;
            }
            let c = 0.5 * codim_phi_cmax(n, k, m)?;
            let p = codim_phi(n, k, m, c)?;
            let got = phi_scaled_spectrum(&p, 1e-4)?;
            let mut want: Vec<f64> = vm.expand().values().iter().map(|x| (n as f64 - 2.0) * c / 2.0 * x).collect();
            want.sort_by(f64::total_cmp);
            let scale = want.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (g, w) in got.values().iter().zip(&want) {
                worst = worst.max((g - w).abs() / scale);
            }
            holds &= certify_window(&p, 1e-6, 1e-3, 30, true)?.holds;
        }
    }
    let mut check = Check::at_most(format!("codim_phi n={n}"), worst, 0.01);
    check.passed &= holds;
    Ok(check)
}

/// Glued subsolution on the annulus `1.5 < r < 3` with exterior-ball data.
fn glued_check(n: usize) -> Result<Check> {
    let k = 2.min(n);
    let spec = EquationSpec::pure(n, k)?;
    let ext = exterior_ball(n, k, 1.0, &[])?;
    let v = |r: f64| -> Result<f64> { Ok(2.0 / (n as f64 - 2.0) * ext.eval(r)?[0].ln()) };
    let dom = SubDomain::Annulus {
        inner: 1.5,
        outer: 3.0,
        phi_inner: v(1.5)?,
        phi_outer: v(3.0)?,
    };
    let rep = dirichlet_subsolution(&spec, dom, 0.1)?;
    Ok(Check::above(format!("glued_subsolution n={n} k={k}"), rep.margin, 0.0))
}
