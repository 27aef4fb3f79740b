mod common;

use common::{brute_sigma, in_gamma, rng, sample_gamma};
use kricci::symfun::*;
use proptest::prelude::*;

fn spec(values: Vec<f64>) -> Spectrum {
    Spectrum::new(values).unwrap()
}

fn values_and_k() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1usize..=8).prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), 1..=n))
}

proptest! {
    #[test]
    fn matches_subset_enumeration((v, k) in values_and_k()) {
        let s = sigma(&spec(v.clone()), k).unwrap();
        let b = brute_sigma(&v, k);
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs())).powi(k as i32) * binomial(v.len(), k);
        prop_assert!((s - b).abs() <= 1e-12 * scale, "σ_{k}: {s} vs {b}");
    }

    #[test]
    fn permutation_invariant((v, k) in values_and_k(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut w = v.clone();
        w.shuffle(&mut rng(seed));
        let a = sigma(&spec(v.clone()), k).unwrap();
        let b = sigma(&spec(w), k).unwrap();
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs())).powi(k as i32) * binomial(v.len(), k);
        prop_assert!((a - b).abs() <= 1e-13 * scale);
    }

    #[test]
    fn homogeneous((v, k) in values_and_k(), t in 0.01f64..50.0) {
        let lam = spec(v);
        let a = sigma(&lam.scaled(t), k).unwrap();
        let b = t.powi(k as i32) * sigma(&lam, k).unwrap();
        let scale = lam.values().iter().fold(1.0f64, |m, x| m.max(x.abs())).powi(k as i32)
            * t.powi(k as i32) * binomial(lam.n(), k);
        prop_assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cones_are_nested((v, k) in values_and_k()) {
        prop_assume!(k >= 2);
        let lam = spec(v);
        if gamma_margin(&lam, k).unwrap() > 0.0 {
            prop_assert!(gamma_margin(&lam, k - 1).unwrap() > 0.0);
        }
    }

    #[test]
    fn euler_identity((v, k) in values_and_k()) {
        let lam = spec(v.clone());
        let lhs: f64 = (0..v.len()).map(|i| v[i] * sigma_partial(&lam, k, i).unwrap()).sum();
        let rhs = k as f64 * sigma(&lam, k).unwrap();
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs())).powi(k as i32) * binomial(v.len(), k) * k as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn partial_is_deleted_sigma((v, k) in values_and_k(), i in 0usize..8) {
        prop_assume!(i < v.len());
        let lam = spec(v.clone());
        let mut rest = v.clone();
        rest.remove(i);
        let b = if k == 1 { 1.0 } else { brute_sigma(&rest, k - 1) };
        let a = sigma_partial(&lam, k, i).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * 3f64.powi(k as i32) * binomial(v.len(), k));
    }

    #[test]
    fn two_block_equals_expansion(a in -4.0f64..4.0, b in -4.0f64..4.0, ma in 1usize..6, mb in 0usize..5, k in 1usize..10) {
        prop_assume!(k <= ma + mb);
        let tb = TwoBlockSpectrum::new(a, ma, b, mb).unwrap();
        let fast = sigma_two_block(&tb, k).unwrap();
        let slow = brute_sigma(tb.expand().values(), k);
        prop_assert!((fast - slow).abs() <= 1e-11 * (1.0 + slow.abs()) * 4f64.powi(k as i32));
        let m_fast = two_block_margin(&tb, k).unwrap();
        let m_slow = gamma_margin(&tb.expand(), k).unwrap();
        prop_assert!((m_fast - m_slow).abs() <= 1e-11 * (1.0 + m_slow.abs()) * 4f64.powi(k as i32));
    }

    #[test]
    fn margin_sign_is_membership((v, k) in values_and_k()) {
        let m = gamma_margin(&spec(v.clone()), k).unwrap();
        if m > 1e-6 {
            prop_assert!(in_gamma(&v, k, 0.0));
        }
        if in_gamma(&v, k, 1e-6) {
            prop_assert!(m > 0.0);
        }
    }
}

#[test]
fn newton_maclaurin_on_cone_samples() {
    let mut r = rng(0);
    for i in 0..10_000 {
        let n = 2 + i % 7;
        let k = 2 + (i / 7) % (n - 1);
        let v = sample_gamma(&mut r, n, k);
        let lam = spec(v.clone());
        let (sk, sk1, sk2) = (
            sigma(&lam, k).unwrap(),
            sigma(&lam, k - 1).unwrap(),
            if k == 2 { 1.0 } else { sigma(&lam, k - 2).unwrap() },
        );
        let (nf, kf) = (n as f64, k as f64);
        let c = (nf - kf + 1.0) * (kf - 1.0) / ((nf - kf + 2.0) * kf);
        assert!(sk * sk2 <= c * sk1 * sk1 * (1.0 + 1e-12) + 1e-14, "n={n} k={k} λ={v:?}");
        let s1 = sigma(&lam, 1).unwrap();
        assert!(sk.powf(1.0 / kf) <= binomial(n, k).powf(1.0 / kf) / nf * s1 * (1.0 + 1e-12), "n={n} k={k}");
    }
}

#[test]
fn anchors() {
    for n in 1..=8 {
        for k in 1..=n {
            let m = gamma_margin(&Spectrum::isotropic(n, 1.0), k).unwrap();
            assert!((m - 1.0).abs() < 1e-15);
        }
    }
    let v3 = vm_vector(4, 3).unwrap();
    assert_eq!(sigma_two_block(&v3, 1).unwrap(), 0.0);
    assert_eq!(cone_position(two_block_margin(&v3, 1).unwrap(), CONE_BOUNDARY_TOL), ConePosition::Boundary);
    assert_eq!(sigma(&spec(vec![1.0, 1.0, -1.0]), 2).unwrap(), -1.0);
    assert_eq!(sigma_two_block(&vm_vector(5, 2).unwrap(), 2).unwrap(), 54.0);
    let ones = TwoBlockSpectrum::new(1.0, 6, 7.5, 0).unwrap();
    assert_eq!(sigma_two_block(&ones, 3).unwrap(), 20.0);
}

#[test]
fn vm_sigma1_closed_form() {
    for n in 3..=30usize {
        for m in 1..=n {
            let expect = ((n - m + 1) * (n - m)) as f64 + (m as f64 - 1.0) * (2.0 - m as f64);
            assert_eq!(sigma_two_block(&vm_vector(n, m).unwrap(), 1).unwrap(), expect);
        }
    }
    assert!(vm_vector(4, 0).is_err() && vm_vector(4, 5).is_err());
    let v = vm_vector(3, 1).unwrap();
    assert_eq!((v.a, v.mult_a, v.mult_b), (2.0, 3, 0));
}
