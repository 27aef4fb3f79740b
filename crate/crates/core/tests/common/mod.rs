//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// σ_k by explicit subset enumeration.
pub fn brute_sigma(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).product::<f64>();
        }
    }
    total
}

pub fn brute_binomial(n: usize, k: usize) -> f64 {
    brute_sigma(&vec![1.0; n], k)
}

/// Γ_k membership via brute-force σ_j with a relative margin.
pub fn in_gamma(values: &[f64], k: usize, rel: f64) -> bool {
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    (1..=k).all(|j| brute_sigma(values, j) > rel * scale.powi(j as i32) * brute_binomial(values.len(), j))
}

/// Random spectrum in Γ_k: a positive shift plus wide perturbations, rejected until inside.
pub fn sample_gamma(rng: &mut impl Rng, n: usize, k: usize) -> Vec<f64> {
    loop {
        let shift: f64 = rng.gen_range(0.05..2.0);
        let spread: f64 = rng.gen_range(0.1..3.0);
        let v: Vec<f64> = (0..n).map(|_| shift + spread * rng.gen_range(-1.0..1.0)).collect();
        if in_gamma(&v, k, 1e-6) {
            return v;
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Fourth-order central difference of a scalar function.
pub fn fd1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Relative error with an absolute floor scaled by `scale`.
pub fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(scale)
}

/// C(n,k)^{1/k}·(n−1) raised to (n−2)/4, written out independently.
pub fn growth_oracle(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) * brute_binomial(n, k).powf(1.0 / k as f64)).powf((nf - 2.0) / 4.0)
}

/// Interior ball solution `c (s² − r²)^{1−n/2}` in the u-variable with its constant
/// fixed by `σ_k(W) = ...` at the center, written out independently.
pub fn ball_u(n: usize, k: usize, s: f64, r: f64, interior: bool) -> f64 {
    let nf = n as f64;
    let c = (4.0 * (nf - 1.0) * brute_binomial(n, k).powf(1.0 / k as f64) * s * s).powf((nf - 2.0) / 4.0);
    let q = if interior { s * s - r * r } else { r * r - s * s };
    c * q.powf(1.0 - nf / 2.0)
}

/// The same profile in the log variable.
pub fn ball_v(n: usize, k: usize, s: f64, r: f64, interior: bool) -> f64 {
    2.0 / (n as f64 - 2.0) * ball_u(n, k, s, r, interior).ln()
}
