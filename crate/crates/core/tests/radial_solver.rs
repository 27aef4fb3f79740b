mod common;

use common::{ball_v, growth_oracle, rng};
use kricci::closed_forms::{
    collar_subsolution, dirichlet_subsolution, exterior_ball, general_radial, interior_ball, upper_barrier_ball,
    BallSide, HarmonicBound, SubDomain,
};
use kricci::conformal::EquationSpec;
use kricci::radial::*;
use kricci::regularity::{fit_growth, FitEnd};
use rand::Rng;

const CASES: [(usize, usize); 4] = [(3, 1), (4, 2), (5, 2), (5, 3)];

fn annulus_mesh(n_intervals: usize) -> RadialMesh {
    build_mesh(Domain::Annulus { inner: 1.5, outer: 3.0 }, n_intervals, Grading::Uniform).unwrap()
}

fn exterior_v(n: usize, k: usize) -> impl Fn(f64) -> f64 {
    move |r| ball_v(n, k, 1.0, r, false)
}

fn dirichlet_solve(spec: &EquationSpec, mesh: &RadialMesh, exact: &dyn Fn(f64) -> f64) -> (RadialField, SolveReport) {
    let (a, b) = mesh.domain.bounds();
    let data = BoundaryData { inner: Some(exact(a)), outer: exact(b) };
    let init = subsolution_field(mesh, &data, spec).unwrap();
    solve_dirichlet(init, &data, spec, &SolverConfig::default()).unwrap()
}

fn max_rel_u_error(field: &RadialField, n: usize, exact_v: &dyn Fn(f64) -> f64, keep: impl Fn(f64) -> bool) -> f64 {
    let h = (n as f64 - 2.0) / 2.0;
    field
        .mesh
        .nodes
        .iter()
        .zip(&field.v)
        .filter(|(r, _)| keep(**r))
        .map(|(&r, &v)| ((h * (v - exact_v(r))).exp() - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn mesh_contracts() {
    let m = build_mesh(Domain::Ball { radius: 1.0 }, 16, Grading::Uniform).unwrap();
    assert!(m.nodes.iter().enumerate().all(|(j, r)| *r == j as f64 / 16.0));
    let dom = Domain::Annulus { inner: 1.0, outer: 2.0 };
    let m = build_mesh(dom, 16, Grading::clustered(&dom)).unwrap();
    let near = m.nodes.iter().filter(|r| **r <= 1.05 || **r >= 1.95).count();
    assert!(near >= 4, "{near} nodes near the ends");
    let ext = Domain::ExteriorTrunc { s: 1.0, r_out: 100.0 };
    let m = build_mesh(ext, 64, Grading::Logarithmic).unwrap();
    let ratios: Vec<f64> = m.nodes.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|q| (q - ratios[0]).abs() < 1e-12));
    for dom in [Domain::Ball { radius: 1.0 }, Domain::Annulus { inner: 1.0, outer: 3.0 }] {
        let m = build_mesh(dom, 400, Grading::clustered(&dom)).unwrap();
        let (a, b) = dom.bounds();
        let near_outer = m.nodes.iter().filter(|r| b - **r <= 0.05 * (b - a)).count();
        assert!(near_outer as f64 >= 0.25 * 401.0 / if dom.has_center() { 1.0 } else { 2.0 });
    }
    assert!(build_mesh(Domain::Ball { radius: 1.0 }, 8, Grading::Uniform).is_err());
}

#[test]
fn clustered_meshes_are_nested() {
    let dom = Domain::Ball { radius: 1.0 };
    let g = Grading::clustered(&dom);
    let coarse = build_mesh(dom, 250, g).unwrap();
    let fine = build_mesh(dom, 500, g).unwrap();
    for (j, r) in coarse.nodes.iter().enumerate() {
        assert!((fine.nodes[2 * j] - r).abs() <= 1e-12);
    }
}

#[test]
fn discrete_residual_of_exact_solution_is_second_order() {
    // a ball solution that is smooth on the closed unit ball
    for (n, k) in CASES {
        let spec = EquationSpec::pure(n, k).unwrap();
        let errs: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&nn| {
                let mesh = build_mesh(Domain::Ball { radius: 1.0 }, nn, Grading::Uniform).unwrap();
                let f = RadialField::from_fn(mesh, |r| ball_v(n, k, 2.0, r, true)).unwrap();
                residual_vector(&f, &spec).unwrap().iter().fold(0.0, |m: f64, x| m.max(x.abs()))
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!((1.8..=2.2).contains(&order), "n={n} k={k} order {order} {errs:?}");
    }
}

#[test]
fn constant_field_residual_matches_pointwise_operator() {
    let spec = EquationSpec::pure(4, 2).unwrap();
    let mesh = build_mesh(Domain::Annulus { inner: 1.0, outer: 2.0 }, 32, Grading::Uniform).unwrap();
    let f = RadialField::from_fn(mesh, |_| 0.3).unwrap();
    let res = residual_vector(&f, &spec).unwrap();
    // σ_k^{1/k}(0) − 1 at interior nodes, 0 at the Dirichlet ends
    assert!(res[1..32].iter().all(|x| (*x + 1.0).abs() < 1e-15));
    assert_eq!(res[0], 0.0);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut r = rng(20);
    for (n, k) in CASES {
        for spec in [EquationSpec::pure(n, k).unwrap(), EquationSpec::general(n, k.max(2), -0.5, 2.0).unwrap()] {
            for dom in [Domain::Ball { radius: 1.0 }, Domain::Annulus { inner: 1.0, outer: 2.0 }] {
                let mesh = build_mesh(dom, 40, Grading::Uniform).unwrap();
                let amp: f64 = 1e-2 * r.gen_range(-1.0..1.0);
                let v: Vec<f64> = mesh
                    .nodes
                    .iter()
                    .map(|&x| ball_v(n, spec.k, 2.5, x, true) + amp * (std::f64::consts::PI * x).cos())
                    .collect();
                let field = RadialField::new(mesh, v).unwrap();
                let asm = assemble(&field, &spec).unwrap();
                assert!(asm.min_margin() > 0.0);
                let len = field.v.len();
                for j in 0..len {
                    let h = 1e-6 * (1.0 + field.v[j].abs());
                    let eval = |d: f64| {
                        let mut f = field.clone();
                        f.v[j] += d;
                        residual_vector(&f, &spec).unwrap()
                    };
                    let (p, m) = (eval(h), eval(-h));
                    let (p2, m2) = (eval(h / 2.0), eval(-h / 2.0));
                    for i in j.saturating_sub(1)..(j + 2).min(len) {
                        // Richardson-extrapolated central difference
                        let fd = (4.0 * (p2[i] - m2[i]) / h - (p[i] - m[i]) / (2.0 * h)) / 3.0;
                        let an = asm.jacobian.get(i, j);
                        let scale = (0..len).map(|c| asm.jacobian.get(i, c).abs()).fold(0.0, f64::max);
                        if asm.margins[i].is_nan() {
                            continue;
                        }
                        assert!((fd - an).abs() <= 1e-5 * scale, "n={n} k={k} {spec:?} {dom:?} ({i},{j}): {an} vs {fd}");
                    }
                    // entries outside the band vanish
                    for i in (0..len).filter(|i| i + 1 < j || *i > j + 1) {
                        assert!(((p[i] - m[i]) / (2.0 * h)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn dirichlet_recovers_exterior_solution() {
    for (n, k) in CASES {
        let spec = EquationSpec::pure(n, k).unwrap();
        let exact = exterior_v(n, k);
        let (field, rep) = dirichlet_solve(&spec, &annulus_mesh(2000), &exact);
        assert!(rep.converged && rep.final_margin >= 1e-8);
        let err = max_rel_u_error(&field, n, &exact, |_| true);
        assert!(err <= 1e-4, "n={n} k={k} err {err}");
        // residual history is monotone after damping
        assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn dirichlet_recovers_general_profile() {
    for (n, k, alpha0) in [(4, 2, 6.0), (5, 3, 2.0), (5, 2, 3.0)] {
        let spec = EquationSpec::general(n, k, -1.0, alpha0).unwrap();
        let prof = general_radial(n, k, -1.0, alpha0, 1.0, &[], BallSide::Exterior).unwrap();
        let h = (n as f64 - 2.0) / 2.0;
        let exact = |r: f64| prof.eval(r).unwrap()[0].ln() / h;
        let (field, _) = dirichlet_solve(&spec, &annulus_mesh(2000), &exact);
        let err = max_rel_u_error(&field, n, &exact, |_| true);
        assert!(err <= 1e-4, "n={n} k={k} err {err}");
    }
}

#[test]
fn order_estimate_is_two() {
    for (n, k) in [(3, 1), (5, 2)] {
        let spec = EquationSpec::pure(n, k).unwrap();
        let exact = exterior_v(n, k);
        let fields: Vec<RadialField> = [250, 500, 1000].iter().map(|&nn| dirichlet_solve(&spec, &annulus_mesh(nn), &exact).0).collect();
        let est = estimate_order([&fields[0], &fields[1], &fields[2]], Some(&exact), None).unwrap();
        assert!((1.8..=2.2).contains(&est.order), "{est:?}");
        let selfc = estimate_order([&fields[0], &fields[1], &fields[2]], None, None).unwrap();
        assert!(selfc.self_convergence && (1.8..=2.2).contains(&selfc.order), "{selfc:?}");
    }
}

#[test]
fn solution_dominates_glued_subsolution_and_is_below_harmonic_bound() {
    for (n, k) in CASES {
        let spec = EquationSpec::pure(n, k).unwrap();
        let exact = exterior_v(n, k);
        let mesh = annulus_mesh(400);
        let (field, _) = dirichlet_solve(&spec, &mesh, &exact);
        let sub = dirichlet_subsolution(
            &spec,
            SubDomain::Annulus { inner: 1.5, outer: 3.0, phi_inner: exact(1.5), phi_outer: exact(3.0) },
            0.1,
        )
        .unwrap();
        let h = (n as f64 - 2.0) / 2.0;
        let bound = HarmonicBound::annulus(n, 1.5, 3.0, (h * exact(1.5)).exp(), (h * exact(3.0)).exp()).unwrap();
        let u = field.u(n);
        for (i, &r) in mesh.nodes.iter().enumerate() {
            assert!(field.v[i] >= sub.profile.eval(r).unwrap()[0] - 1e-10, "n={n} k={k} r={r}");
            assert!(u[i] <= bound.eval(r) * (1.0 + 1e-10));
        }
    }
}

#[test]
fn comparison_principle_on_random_data() {
    let mut r = rng(21);
    let mut violations = 0;
    for trial in 0..20 {
        let (n, k) = CASES[trial % 4];
        let spec = EquationSpec::pure(n, k).unwrap();
        let mesh = build_mesh(Domain::Annulus { inner: 1.0, outer: 2.0 }, 120, Grading::Uniform).unwrap();
        let b1 = BoundaryData { inner: Some(r.gen_range(-2.0..1.0)), outer: r.gen_range(-2.0..1.0) };
        let b2 = BoundaryData {
            inner: Some(b1.inner.unwrap() + r.gen_range(0.0..1.0)),
            outer: b1.outer + r.gen_range(0.0..1.0),
        };
        let cfg = SolverConfig::default();
        let (f1, _) = solve_dirichlet(subsolution_field(&mesh, &b1, &spec).unwrap(), &b1, &spec, &cfg).unwrap();
        let (f2, _) = solve_dirichlet(subsolution_field(&mesh, &b2, &spec).unwrap(), &b2, &spec, &cfg).unwrap();
        violations += f1.v.iter().zip(&f2.v).filter(|(a, b)| **a > **b + 1e-10).count();
    }
    assert_eq!(violations, 0);
}

#[test]
fn blowup_on_ball_matches_closed_form_and_growth() {
    for (n, k) in [(3, 1), (5, 2)] {
        let spec = EquationSpec::pure(n, k).unwrap();
        let dom = Domain::Ball { radius: 1.0 };
        let mesh = build_mesh(dom, 2000, Grading::clustered(&dom)).unwrap();
        let (field, rep) = solve_blowup(&mesh, &spec, &SolverConfig::default(), &Ends::natural(&dom)).unwrap();
        assert!(rep.converged);
        assert!(rep.monotonicity_certificates.iter().all(|c| c.holds && c.increasing));
        let exact = |r: f64| ball_v(n, k, 1.0, r, true);
        let err = max_rel_u_error(&field, n, &exact, |r| r <= 0.9);
        assert!(err <= 1e-4, "n={n} k={k} err {err}");
        let fit = fit_growth(&field, n, FitEnd::Outer, None).unwrap();
        let rel = (fit.estimate / growth_oracle(n, k) - 1.0).abs();
        assert!(rel <= 0.02, "n={n} k={k} growth {} vs {}", fit.estimate, growth_oracle(n, k));
        // barrier sandwich
        let sub = collar_subsolution(n, k, 1e-3, 5e-2, 1.0).unwrap();
        let upper = upper_barrier_ball(n, k, 1.0, &[]).unwrap();
        let u = field.u(n);
        for (i, &r) in field.mesh.nodes.iter().enumerate() {
            if r < 1.0 && 1.0 - r < 0.9 {
                assert!(u[i] >= sub.eval(1.0 - r).unwrap()[0], "sub at r={r}");
            }
            if r <= 0.9 {
                assert!(u[i] <= upper.eval(r).unwrap()[0] * (1.0 + 1e-4), "upper at r={r}");
            }
        }
    }
}

#[test]
fn blowup_on_annulus_is_symmetric_in_inversion_sense() {
    let spec = EquationSpec::pure(3, 1).unwrap();
    let dom = Domain::Annulus { inner: 1.0, outer: 2.0 };
    let mesh = build_mesh(dom, 600, Grading::clustered(&dom)).unwrap();
    let (field, rep) = solve_blowup(&mesh, &spec, &SolverConfig::default(), &Ends::natural(&dom)).unwrap();
    assert!(rep.converged && rep.cauchy_gap.is_some());
    // bounded below by both ball-type solutions it dominates
    let inner = exterior_ball(3, 1, 1.0, &[]).unwrap();
    let outer = interior_ball(3, 1, 2.0, &[]).unwrap();
    let u = field.u(3);
    for (i, &r) in field.mesh.nodes.iter().enumerate().filter(|(_, r)| **r >= 1.05 && **r <= 1.95) {
        let lower = inner.eval(r).unwrap()[0].max(outer.eval(r).unwrap()[0]);
        assert!(u[i] >= lower * (1.0 - 1e-6), "r={r}");
    }
}

#[test]
fn maximal_sequence_decreases() {
    let spec = EquationSpec::pure(3, 1).unwrap();
    let ex = ExhaustionConfig { r_core: 3.0, core_intervals: 300, tail_intervals: 200 };
    let radii = [6.0, 12.0, 24.0];
    let (fields, rep) = solve_maximal(1.0, &radii, &spec, &SolverConfig::default(), &ex, OuterBoundary::BlowUp).unwrap();
    assert_eq!(fields.len(), 3);
    assert!(rep.monotonicity.holds && rep.converged);
    assert!(rep.cauchy_gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(rep.core_min_u > 0.1);
    let (_, closed) = solve_maximal(1.0, &radii, &spec, &SolverConfig::default(), &ex, OuterBoundary::ClosedForm).unwrap();
    // the closed-form variant is the exterior solution up to discretization error
    assert!(closed.cauchy_gaps.iter().all(|g| *g < 1e-3));
}

#[test]
fn csv_has_fixed_columns() {
    let spec = EquationSpec::pure(3, 1).unwrap();
    let exact = exterior_v(3, 1);
    let (field, _) = dirichlet_solve(&spec, &annulus_mesh(32), &exact);
    let mut buf = Vec::new();
    write_csv(&field, &spec, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,v,u,margin,residual"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[3], "nan");
    assert_eq!(first[0], "1.5000000000000000e0");
    assert_eq!(text.lines().count(), 34);
}

#[test]
fn configs_reject_unknown_keys() {
    let ok: SolverConfig = serde_json::from_str(r#"{"newton_tol": 1e-9, "continuation": {"start": 8.0}}"#).unwrap();
    assert_eq!(ok.newton_tol, 1e-9);
    assert_eq!(ok.continuation.start, 8.0);
    assert_eq!(ok.max_iters, SolverConfig::default().max_iters);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"newton_tolerance": 1e-9}"#).is_err());
    assert!(serde_json::from_str::<SolverConfig>(r#"{"continuation": {"step": 1.0}}"#).is_err());
    let bad = SolverConfig { damping: 1.5, ..SolverConfig::default() };
    assert!(bad.validate().is_err());
    // timing is not serialized
    let rep_json = serde_json::to_string(&{
        let spec = EquationSpec::pure(3, 1).unwrap();
        dirichlet_solve(&spec, &annulus_mesh(32), &exterior_v(3, 1)).1
    })
    .unwrap();
    assert!(!rep_json.contains("elapsed"));
}

#[test]
fn inadmissible_initial_field_is_rejected() {
    let spec = EquationSpec::pure(3, 1).unwrap();
    let mesh = annulus_mesh(64);
    // a concave bump leaves Γ_1
    let field = RadialField::from_fn(mesh, |r| -10.0 * (r - 2.25).powi(2)).unwrap();
    assert!(matches!(assemble(&field, &spec), Err(kricci::Error::ConeViolation { node: Some(_), .. })));
    let data = BoundaryData { inner: Some(field.v[0]), outer: *field.v.last().unwrap() };
    assert!(solve_dirichlet(field, &data, &spec, &SolverConfig::default()).is_err());
}

#[test]
fn initializer_is_admissible_on_coarse_mesh_with_steep_data() {
    let spec = EquationSpec::pure(3, 1).unwrap();
    let mesh = build_mesh(Domain::Annulus { inner: 1.0, outer: 2.0 }, 200, Grading::Uniform).unwrap();
    let data = BoundaryData { inner: Some(1.2872455197719128), outer: -1.2172973046394362 };
    let init = subsolution_field(&mesh, &data, &spec).unwrap();
    assert!(assemble(&init, &spec).unwrap().min_margin() > 0.0);
    assert_eq!((init.v[0], init.v[200]), (data.inner.unwrap(), data.outer));
    let (_, rep) = solve_dirichlet(init, &data, &spec, &SolverConfig::default()).unwrap();
    assert!(rep.converged);
}

#[test]
fn blowup_initializer_survives_long_exhaustion_tails() {
    let ex = ExhaustionConfig::default();
    for (n, k) in CASES {
        let spec = EquationSpec::pure(n, k).unwrap();
        for big_r in [2e4, 1e6, 1e7] {
            let mesh = exhaustion_mesh(1.0, big_r, &ex, true).unwrap();
            let ends = Ends { inner: End::BlowUp, outer: End::BlowUp };
            let field = blowup_initial(&mesh, &ends, 10.0, &spec, &SolverConfig::default()).unwrap();
            let asm = assemble(&field, &spec).unwrap();
            assert!(asm.min_margin() > 0.0, "n={n} k={k} R={big_r}");
        }
    }
}
