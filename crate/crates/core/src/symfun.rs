//! Elementary symmetric functions and Gårding cone geometry.
//!
//! All σ_k evaluations go through the one-pass recurrence
//! `e_k(λ_1..λ_j) = e_k(λ_1..λ_{j-1}) + λ_j e_{k-1}(λ_1..λ_{j-1})`,
//! which is O(nk) and never enumerates subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized margins with absolute value below this are treated as lying on ∂Γ_k.
pub const CONE_BOUNDARY_TOL: f64 = 1e-10;

/// Eigenvalue vector in ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("spectrum must be non-empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite eigenvalue {bad}")));
        }
        Ok(Self { values })
    }

    /// `n` copies of `mu`.
    pub fn isotropic(n: usize, mu: f64) -> Self {
        Self {
            values: vec![mu; n],
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }
}

/// Spectrum made of two constant blocks, `a` repeated `mult_a` times and `b`
/// repeated `mult_b` times. Covers both the model vectors v_m and the
/// radial/tangential split of radially symmetric fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBlockSpectrum {
    pub a: f64,
    pub mult_a: usize,
    pub b: f64,
    pub mult_b: usize,
}

impl TwoBlockSpectrum {
    pub fn new(a: f64, mult_a: usize, b: f64, mult_b: usize) -> Result<Self> {
        if mult_a == 0 {
            return Err(Error::Domain("first block must have positive multiplicity".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain("non-finite block value".into()));
        }
        Ok(Self {
            a,
            mult_a,
            b,
            mult_b,
        })
    }

    pub fn n(&self) -> usize {
        self.mult_a + self.mult_b
    }

    pub fn expand(&self) -> Spectrum {
        let mut values = vec![self.a; self.mult_a];
        values.extend(std::iter::repeat_n(self.b, self.mult_b));
        Spectrum { values }
    }

    pub fn is_isotropic(&self) -> bool {
        self.mult_b == 0 || self.a == self.b
    }
}

/// Binomial coefficient C(n, k) as a float; zero when k > n.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// e_0, …, e_kmax of `values` (entries past `values.len()` are zero).
pub fn elementary_all(values: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (j, &x) in values.iter().enumerate() {
        let top = (j + 1).min(kmax);
        for k in (1..=top).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    Ok(())
}

/// σ_k(λ).
pub fn sigma(lam: &Spectrum, k: usize) -> Result<f64> {
    check_k(lam.n(), k)?;
    Ok(elementary_all(&lam.values, k)[k])
}

/// ∂σ_k/∂λ_i, i.e. σ_{k-1} of λ with entry `i` deleted (σ_0 ≡ 1).
pub fn sigma_partial(lam: &Spectrum, k: usize, i: usize) -> Result<f64> {
    check_k(lam.n(), k)?;
    if i >= lam.n() {
        return Err(Error::Domain(format!("index {i} out of range for n = {}", lam.n())));
    }
    Ok(elementary_deleted(&lam.values, i, k - 1))
}

/// e_j of `values` with entry `skip` removed.
pub(crate) fn elementary_deleted(values: &[f64], skip: usize, j: usize) -> f64 {
    let mut e = vec![0.0; j + 1];
    e[0] = 1.0;
    let mut seen = 0;
    for (idx, &x) in values.iter().enumerate() {
        if idx == skip {
            continue;
        }
        seen += 1;
        for l in (1..=seen.min(j)).rev() {
            e[l] += x * e[l - 1];
        }
    }
    e[j]
}

/// min_{j ≤ k} σ_j(λ)/C(n,j). Positive iff λ ∈ Γ_k; the all-ones vector has margin 1.
pub fn gamma_margin(lam: &Spectrum, k: usize) -> Result<f64> {
    check_k(lam.n(), k)?;
    let n = lam.n();
    let e = elementary_all(&lam.values, k);
    Ok((1..=k)
        .map(|j| e[j] / binomial(n, j))
        .fold(f64::INFINITY, f64::min))
}

/// Where a spectrum sits relative to Γ_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConePosition {
    Interior,
    Boundary,
    Exterior,
}

/// Classify a normalized margin against the boundary tolerance.
pub fn cone_position(margin: f64, tol: f64) -> ConePosition {
    if margin.abs() <= tol {
        ConePosition::Boundary
    } else if margin > 0.0 {
        ConePosition::Interior
    } else {
        ConePosition::Exterior
    }
}

/// σ_k of a two-block spectrum via Σ_j C(m_a, j) C(m_b, k−j) a^j b^{k−j}.
pub fn sigma_two_block(tb: &TwoBlockSpectrum, k: usize) -> Result<f64> {
    check_k(tb.n(), k)?;
    Ok(two_block_raw(tb, k))
}

fn two_block_raw(tb: &TwoBlockSpectrum, k: usize) -> f64 {
    let lo = k.saturating_sub(tb.mult_b);
    let hi = k.min(tb.mult_a);
    (lo..=hi)
        .map(|j| {
            binomial(tb.mult_a, j)
                * binomial(tb.mult_b, k - j)
                * tb.a.powi(j as i32)
                * tb.b.powi((k - j) as i32)
        })
        .sum()
}

/// σ_j for j = 1..=k of a two-block spectrum.
pub fn two_block_sigmas(tb: &TwoBlockSpectrum, k: usize) -> Result<Vec<f64>> {
    check_k(tb.n(), k)?;
    Ok((1..=k).map(|j| two_block_raw(tb, j)).collect())
}

/// Normalized Gårding margin of a two-block spectrum.
pub fn two_block_margin(tb: &TwoBlockSpectrum, k: usize) -> Result<f64> {
    let n = tb.n();
    Ok(two_block_sigmas(tb, k)?
        .into_iter()
        .enumerate()
        .map(|(j, s)| s / binomial(n, j + 1))
        .fold(f64::INFINITY, f64::min))
}

/// Model spectrum of a codimension-`m` boundary component:
/// `n − m` with multiplicity `n − m + 1` and `2 − m` with multiplicity `m − 1`.
pub fn vm_vector(n: usize, m: usize) -> Result<TwoBlockSpectrum> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("codimension m = {m} outside 1..={n}")));
    }
    Ok(TwoBlockSpectrum {
        a: (n - m) as f64,
        mult_a: n - m + 1,
        b: 2.0 - m as f64,
        mult_b: m - 1,
    })
}
