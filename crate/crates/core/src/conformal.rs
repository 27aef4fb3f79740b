//! Conformal curvature operators on Euclidean space (Ric ≡ 0).
//!
//! For a positive conformal factor `u`,
//!
//! ```text
//! W_ij[u] = (n−2) u_ij − n u_i u_j / u + (Δu + |∇u|²/u) δ_ij
//! ```
//!
//! and for the log-variable `v = (2/(n−2)) ln u`,
//!
//! ```text
//! 𝒲_ij[v] = v_ij − v_i v_j + (Δv/(n−2) + |∇v|²) δ_ij
//! ```
//!
//! The two are related by `(2/(n−2)) u^{−(n+2)/(n−2)} W[u] = (n−2) e^{−2v} 𝒲[v]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{
    self, elementary_all, elementary_deleted, Spectrum, TwoBlockSpectrum, CONE_BOUNDARY_TOL,
};

/// Symmetric matrix stored as its packed upper triangle (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Symmetrizes a dense row-major matrix, rejecting asymmetry above `tol`.
    pub fn from_dense(n: usize, dense: &[f64], tol: f64) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::Domain(format!(
                "dense matrix has {} entries, expected {}",
                dense.len(),
                n * n
            )));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (dense[i * n + j], dense[j * n + i]);
                if (a - b).abs() > tol * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i},{j})")));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let idx = self.index(i, j);
        self.upper[idx] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|x| x * c).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.get(i, j);
            }
        }
        d
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Which variable a jet describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    /// The conformal factor `u > 0`.
    U,
    /// The log-variable `v = (2/(n−2)) ln u`.
    V,
}

/// Value, gradient and Hessian of `u` or `v` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymMatrix,
    pub variable: Variable,
    /// Location of the jet; only needed for non-constant coefficients.
    pub point: Option<Vec<f64>>,
}

impl PointJet {
    pub fn new(value: f64, grad: Vec<f64>, hess: SymMatrix, variable: Variable) -> Result<Self> {
        if grad.len() != hess.n() {
            return Err(Error::Domain("gradient and Hessian dimensions differ".into()));
        }
        if variable == Variable::U && value <= 0.0 {
            return Err(Error::Domain(format!("conformal factor must be positive, got {value}")));
        }
        Ok(Self {
            value,
            grad,
            hess,
            variable,
            point: None,
        })
    }

    pub fn at(mut self, point: Vec<f64>) -> Self {
        self.point = Some(point);
        self
    }

    pub fn n(&self) -> usize {
        self.grad.len()
    }

    /// Jet of a radial profile `f(|x|)` at the point `x`, given `f, f', f''` at `|x|`.
    pub fn radial(f: [f64; 3], x: &[f64], variable: Variable) -> Result<Self> {
        let n = x.len();
        let r = norm(x);
        if r == 0.0 {
            // f'(0) = 0 and the Hessian is isotropic
            let hess = SymMatrix::identity(n).scale(f[2]);
            return Ok(Self::new(f[0], vec![0.0; n], hess, variable)?.at(x.to_vec()));
        }
        let dir: Vec<f64> = x.iter().map(|xi| xi / r).collect();
        let grad = dir.iter().map(|d| f[1] * d).collect();
        let tang = f[1] / r;
        let hess = SymMatrix::from_fn(n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            f[2] * dir[i] * dir[j] + tang * (delta - dir[i] * dir[j])
        });
        Ok(Self::new(f[0], grad, hess, variable)?.at(x.to_vec()))
    }

    /// Converts between `u` and `v = (2/(n−2)) ln u` jets.
    pub fn convert(&self) -> Result<Self> {
        let n = self.n();
        let h = (n as f64 - 2.0) / 2.0;
        let out = match self.variable {
            Variable::U => {
                // v = ln u / h, v_i = u_i/(h u), v_ij = (u_ij/u − u_i u_j/u²)/h
                let u = self.value;
                let grad: Vec<f64> = self.grad.iter().map(|g| g / (h * u)).collect();
                let hess = SymMatrix::from_fn(n, |i, j| {
                    (self.hess.get(i, j) / u - self.grad[i] * self.grad[j] / (u * u)) / h
                });
                Self::new(u.ln() / h, grad, hess, Variable::V)?
            }
            Variable::V => {
                // u = e^{h v}, u_i = h u v_i, u_ij = h u (v_ij + h v_i v_j)
                let u = (h * self.value).exp();
                let grad: Vec<f64> = self.grad.iter().map(|g| h * u * g).collect();
                let hess = SymMatrix::from_fn(n, |i, j| {
                    h * u * (self.hess.get(i, j) + h * self.grad[i] * self.grad[j])
                });
                Self::new(u, grad, hess, Variable::U)?
            }
        };
        Ok(match &self.point {
            Some(p) => out.at(p.clone()),
            None => out,
        })
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A coefficient `α(x)` or `α₀(x)` of the general equation, radially symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Constant(f64),
    /// Polynomial in `r = |x|`, lowest degree first.
    RadialPoly(Vec<f64>),
}

impl Coefficient {
    pub fn at_radius(&self, r: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::RadialPoly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * r + a),
        }
    }

    fn at_jet(&self, jet: &PointJet) -> Result<f64> {
        match self {
            Coefficient::Constant(c) => Ok(*c),
            Coefficient::RadialPoly(_) => jet
                .point
                .as_ref()
                .map(|p| self.at_radius(norm(p)))
                .ok_or_else(|| Error::Domain("non-constant coefficient needs the jet location".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mode {
    /// σ_k^{1/k}(W[u]) = ((n−2)/2) u^{(n+2)/(n−2)}.
    PureSigmaK,
    /// σ_k(X) + α σ_{k−1}(X) = α₀ with X = (2/(n−2)) u^{−(n+2)/(n−2)} W[u].
    General { alpha: Coefficient, alpha0: Coefficient },
}

/// Which equation is being solved, in which dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
}

impl EquationSpec {
    pub fn pure(n: usize, k: usize) -> Result<Self> {
        let spec = Self {
            n,
            k,
            mode: Mode::PureSigmaK,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn general(n: usize, k: usize, alpha: f64, alpha0: f64) -> Result<Self> {
        let spec = Self {
            n,
            k,
            mode: Mode::General {
                alpha: Coefficient::Constant(alpha),
                alpha0: Coefficient::Constant(alpha0),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Domain(format!("n = {} must be at least 3", self.n)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::Domain(format!("k = {} outside 1..={}", self.k, self.n)));
        }
        if let Mode::General { alpha0, .. } = &self.mode {
            if self.k < 2 {
                return Err(Error::Domain("the general equation needs k ≥ 2".into()));
            }
            if let Coefficient::Constant(a0) = alpha0 {
                if *a0 <= 0.0 {
                    return Err(Error::Domain(format!("α₀ must be positive, got {a0}")));
                }
            }
        }
        Ok(())
    }

    /// Cone the operator spectrum has to live in: Γ_k for the pure
    /// equation, Γ_{k−1} for the general one.
    pub fn cone_order(&self) -> usize {
        match self.mode {
            Mode::PureSigmaK => self.k,
            Mode::General { .. } => self.k - 1,
        }
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigen(m: &SymMatrix) -> Result<Spectrum> {
    let n = m.n();
    let mut a = m.to_dense();
    let scale = m.frobenius();
    if scale == 0.0 {
        return Spectrum::new(vec![0.0; n]);
    }
    let target = 1e-13 * scale;
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > target {
        if sweeps == 100 {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver: off-diagonal norm {:.3e} after 100 sweeps",
                off(&a)
            )));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (arp, arq) = (a[r * n + p], a[r * n + q]);
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let (apr, aqr) = (a[p * n + r], a[q * n + r]);
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
            }
        }
        sweeps += 1;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Spectrum::new(eig)
}

/// W[u] in Euclidean coordinates.
pub fn w_from_jet(jet: &PointJet, n: usize) -> Result<SymMatrix> {
    check_jet(jet, n, Variable::U)?;
    let u = jet.value;
    if u <= 0.0 {
        return Err(Error::Domain(format!("W[u] needs u > 0, got {u}")));
    }
    let nf = n as f64;
    let grad2: f64 = jet.grad.iter().map(|g| g * g).sum();
    let iso = jet.hess.trace() + grad2 / u;
    Ok(SymMatrix::from_fn(n, |i, j| {
        let delta = if i == j { iso } else { 0.0 };
        (nf - 2.0) * jet.hess.get(i, j) - nf * jet.grad[i] * jet.grad[j] / u + delta
    }))
}

/// 𝒲[v] in Euclidean coordinates.
pub fn calw_from_jet(jet: &PointJet, n: usize) -> Result<SymMatrix> {
    check_jet(jet, n, Variable::V)?;
    let grad2: f64 = jet.grad.iter().map(|g| g * g).sum();
    let iso = jet.hess.trace() / (n as f64 - 2.0) + grad2;
    Ok(SymMatrix::from_fn(n, |i, j| {
        let delta = if i == j { iso } else { 0.0 };
        jet.hess.get(i, j) - jet.grad[i] * jet.grad[j] + delta
    }))
}

fn check_jet(jet: &PointJet, n: usize, want: Variable) -> Result<()> {
    if jet.n() != n {
        return Err(Error::Domain(format!("jet has dimension {}, expected {n}", jet.n())));
    }
    if jet.variable != want {
        return Err(Error::Domain(format!("expected a {want:?} jet, got {:?}", jet.variable)));
    }
    Ok(())
}

/// Closed-form spectrum of W[u] (tag `U`) or 𝒲[v] (tag `V`) for a radial
/// profile with value/first/second derivative `profile` at radius `r`.
///
/// Block `a` is the radial eigenvalue (multiplicity 1), block `b` the
/// tangential one (multiplicity n−1). At `r = 0` the profile must be even and
/// the spectrum is isotropic.
pub fn radial_eigen(profile: [f64; 3], r: f64, n: usize, variable: Variable) -> Result<TwoBlockSpectrum> {
    if r < 0.0 {
        return Err(Error::Domain(format!("negative radius {r}")));
    }
    let nf = n as f64;
    let [f, d1, d2] = profile;
    // d1/r → f'' at the center
    let d1_over_r = if r == 0.0 { d2 } else { d1 / r };
    let lap = d2 + (nf - 1.0) * d1_over_r;
    let (radial, tangential) = match variable {
        Variable::U => {
            if f <= 0.0 {
                return Err(Error::Domain(format!("W[u] needs u > 0, got {f}")));
            }
            let common = lap + d1 * d1 / f;
            (
                (nf - 2.0) * d2 - nf * d1 * d1 / f + common,
                (nf - 2.0) * d1_over_r + common,
            )
        }
        Variable::V => {
            let common = lap / (nf - 2.0) + d1 * d1;
            (d2 - d1 * d1 + common, d1_over_r + common)
        }
    };
    let radial = if r == 0.0 { tangential } else { radial };
    TwoBlockSpectrum::new(radial, 1, tangential, n - 1)
}

/// Outcome of evaluating an equation residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Residual {
    Value { value: f64 },
    /// The spectrum left the closed cone the equation needs; `margin` is the
    /// normalized Gårding margin (negative).
    ConeViolation { margin: f64 },
}

impl Residual {
    pub fn value(&self) -> Option<f64> {
        match self {
            Residual::Value { value } => Some(*value),
            Residual::ConeViolation { .. } => None,
        }
    }
}

/// Equation residual at a jet, in the u-normalization.
///
/// PureSigmaK: `σ_k^{1/k}(W[u]) − ((n−2)/2) u^{(n+2)/(n−2)}`.
/// General: `σ_k(X) + α σ_{k−1}(X) − α₀` with `X = (2/(n−2)) u^{−(n+2)/(n−2)} W[u]`.
///
/// V-jets are evaluated through 𝒲[v] and rescaled into the same normalization,
/// so matched u/v jets give the same number.
pub fn residual(jet: &PointJet, spec: &EquationSpec) -> Result<Residual> {
    let n = spec.n;
    let nf = n as f64;
    let (eigs, u_value) = match jet.variable {
        Variable::U => (jacobi_eigen(&w_from_jet(jet, n)?)?, jet.value),
        Variable::V => (
            jacobi_eigen(&calw_from_jet(jet, n)?)?,
            ((nf - 2.0) / 2.0 * jet.value).exp(),
        ),
    };
    let order = spec.cone_order();
    if order > 0 {
        let margin = symfun::gamma_margin(&eigs, order)?;
        if margin < -CONE_BOUNDARY_TOL {
            return Ok(Residual::ConeViolation { margin });
        }
    }
    // X = (2/(n−2)) u^{−(n+2)/(n−2)} W[u] = (n−2) e^{−2v} 𝒲[v]
    let to_x = match jet.variable {
        Variable::U => 2.0 / (nf - 2.0) * u_value.powf(-(nf + 2.0) / (nf - 2.0)),
        Variable::V => (nf - 2.0) * (-2.0 * jet.value).exp(),
    };
    let value = match &spec.mode {
        Mode::PureSigmaK => {
            let root = symfun::sigma(&eigs, spec.k)?.max(0.0).powf(1.0 / spec.k as f64);
            match jet.variable {
                Variable::U => root - (nf - 2.0) / 2.0 * u_value.powf((nf + 2.0) / (nf - 2.0)),
                Variable::V => {
                    let e2v = (2.0 * jet.value).exp();
                    (nf - 2.0).powi(2) * u_value / 2.0 * (root - e2v / (nf - 2.0))
                }
            }
        }
        Mode::General { alpha, alpha0 } => {
            let x = eigs.scaled(to_x);
            let e = elementary_all(x.values(), spec.k);
            e[spec.k] + alpha.at_jet(jet)? * e[spec.k - 1] - alpha0.at_jet(jet)?
        }
    };
    Ok(Residual::Value { value })
}

/// Linearization of `F(𝒲) = σ_k/σ_{k−1} − α₀ e^{2kv} / ((n−2)^k σ_{k−1})`
/// in the eigenbasis of 𝒲[v].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationData {
    pub eigvals: Spectrum,
    pub f_value: f64,
    /// ∂F/∂λ_i.
    pub f_eig_derivs: Vec<f64>,
    /// ∂F/∂v at fixed 𝒲.
    pub g_v: f64,
    pub trace_f: f64,
}

/// Linearize the general operator at a V-jet.
pub fn f_linearize(jet: &PointJet, spec: &EquationSpec) -> Result<LinearizationData> {
    let alpha0 = match &spec.mode {
        Mode::General { alpha0, .. } => alpha0.at_jet(jet)?,
        Mode::PureSigmaK => {
            return Err(Error::Domain("f_linearize applies to the general equation".into()))
        }
    };
    let eigs = jacobi_eigen(&calw_from_jet(jet, spec.n)?)?;
    f_linearize_eigs(eigs, jet.value, alpha0, spec.n, spec.k)
}

/// Eigenvalue-level core of [`f_linearize`].
pub fn f_linearize_eigs(
    eigs: Spectrum,
    v: f64,
    alpha0: f64,
    n: usize,
    k: usize,
) -> Result<LinearizationData> {
    if k < 2 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 2..={n}")));
    }
    let lam = eigs.values();
    let e = elementary_all(lam, k);
    let (sk, sk1) = (e[k], e[k - 1]);
    let margin = symfun::gamma_margin(&eigs, k - 1)?;
    if sk1 <= 0.0 || margin <= 0.0 {
        return Err(Error::ConeViolation { margin, node: None });
    }
    let source = alpha0 * (2.0 * k as f64 * v).exp() / (n as f64 - 2.0).powi(k as i32);
    let f_value = sk / sk1 - source / sk1;
    let f_eig_derivs: Vec<f64> = (0..lam.len())
        .map(|i| {
            let d_k1 = elementary_deleted(lam, i, k - 1);
            let d_k2 = elementary_deleted(lam, i, k - 2);
            (d_k1 * sk1 - sk * d_k2) / (sk1 * sk1) + source * d_k2 / (sk1 * sk1)
        })
        .collect();
    let g_v = -2.0 * k as f64 * source / sk1;
    let trace_f = f_eig_derivs.iter().sum();
    Ok(LinearizationData {
        eigvals: eigs,
        f_value,
        f_eig_derivs,
        g_v,
        trace_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::binomial;

    fn ball_u(n: usize, k: usize, s: f64, r: f64) -> [f64; 3] {
        let nf = n as f64;
        let c = (4.0 * (nf - 1.0) * binomial(n, k).powf(1.0 / k as f64) * s * s).powf((nf - 2.0) / 4.0);
        let q = s * s - r * r;
        let p = 1.0 - nf / 2.0;
        let f = c * q.powf(p);
        let d1 = c * p * q.powf(p - 1.0) * (-2.0 * r);
        let d2 = c * p * (p - 1.0) * q.powf(p - 2.0) * 4.0 * r * r + c * p * q.powf(p - 1.0) * (-2.0);
        [f, d1, d2]
    }

    #[test]
    fn jacobi_examples() {
        let id = jacobi_eigen(&SymMatrix::identity(4)).unwrap();
        assert_eq!(id.values(), &[1.0; 4]);
        let m = SymMatrix::from_dense(2, &[2.0, 1.0, 1.0, 2.0], 0.0).unwrap();
        let e = jacobi_eigen(&m).unwrap();
        assert!((e.values()[0] - 1.0).abs() < 1e-14 && (e.values()[1] - 3.0).abs() < 1e-14);
        let mut d = SymMatrix::zeros(3);
        for (i, x) in [5.0, -2.0, 1.0].iter().enumerate() {
            d.set(i, i, *x);
        }
        assert_eq!(jacobi_eigen(&d).unwrap().values(), &[-2.0, 1.0, 5.0]);
    }

    #[test]
    fn w_of_constant_is_zero() {
        let jet = PointJet::new(1.0, vec![0.0; 4], SymMatrix::zeros(4), Variable::U).unwrap();
        assert_eq!(w_from_jet(&jet, 4).unwrap(), SymMatrix::zeros(4));
        let vjet = PointJet::new(0.3, vec![0.0; 4], SymMatrix::zeros(4), Variable::V).unwrap();
        assert_eq!(calw_from_jet(&vjet, 4).unwrap(), SymMatrix::zeros(4));
    }

    #[test]
    fn w_rejects_nonpositive_u() {
        assert!(PointJet::new(0.0, vec![0.0; 3], SymMatrix::zeros(3), Variable::U).is_err());
        let mut jet = PointJet::new(1.0, vec![0.0; 3], SymMatrix::zeros(3), Variable::U).unwrap();
        jet.value = -1.0;
        assert!(matches!(w_from_jet(&jet, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn w_of_ball_solution_is_isotropic() {
        let (n, k, s) = (5, 2, 1.3);
        let nf = n as f64;
        let c = (4.0 * (nf - 1.0) * binomial(n, k).sqrt() * s * s).powf((nf - 2.0) / 4.0);
        let x = [0.2, -0.1, 0.3, 0.05, 0.4];
        let r = x.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let jet = PointJet::radial(ball_u(n, k, s, r), &x, Variable::U).unwrap();
        let w = w_from_jet(&jet, n).unwrap();
        let expect = 2.0 * (nf - 1.0) * (nf - 2.0) * c * (s * s - r * r).powf(-nf / 2.0 - 1.0) * s * s;
        let iso = SymMatrix::identity(n).scale(expect);
        assert!(w.max_abs_diff(&iso) <= 1e-12 * expect);
    }

    #[test]
    fn radial_eigen_center_and_constant() {
        let sp = radial_eigen(ball_u(3, 1, 1.0, 0.0), 0.0, 3, Variable::U).unwrap();
        assert!(sp.is_isotropic());
        let sp = radial_eigen([2.0, 0.0, 0.0], 0.7, 4, Variable::U).unwrap();
        assert_eq!((sp.a, sp.b), (0.0, 0.0));
        let sp = radial_eigen(ball_u(4, 2, 1.0, 0.6), 0.6, 4, Variable::U).unwrap();
        assert!((sp.a - sp.b).abs() <= 1e-12 * sp.a.abs());
    }

    #[test]
    fn pure_residual_of_one() {
        for n in 3..7 {
            for k in 1..=n {
                let jet = PointJet::new(1.0, vec![0.0; n], SymMatrix::zeros(n), Variable::U).unwrap();
                let r = residual(&jet, &EquationSpec::pure(n, k).unwrap()).unwrap();
                assert_eq!(r, Residual::Value { value: -(n as f64 - 2.0) / 2.0 });
            }
        }
    }

    #[test]
    fn residual_reports_cone_violation() {
        // u with negative-definite Hessian makes W negative
        let n = 4;
        let hess = SymMatrix::identity(n).scale(-1.0);
        let jet = PointJet::new(1.0, vec![0.0; n], hess, Variable::U).unwrap();
        let r = residual(&jet, &EquationSpec::pure(n, 2).unwrap()).unwrap();
        assert!(matches!(r, Residual::ConeViolation { margin } if margin < 0.0));
    }

    #[test]
    fn f_linearize_isotropic() {
        let (n, k, mu) = (6, 3, 0.7);
        let lin = f_linearize_eigs(Spectrum::isotropic(n, mu), 0.0, 0.0, n, k).unwrap();
        let expect = mu * (n - k + 1) as f64 / k as f64;
        assert!((lin.f_value - expect).abs() < 1e-14);
        assert_eq!(lin.g_v, 0.0);
        let lin = f_linearize_eigs(Spectrum::isotropic(n, mu), 0.2, 1.5, n, k).unwrap();
        assert!(lin.g_v < 0.0);
        assert!(lin.trace_f >= (n - k + 1) as f64 / k as f64);
    }

    #[test]
    fn f_linearize_rejects_outside_cone() {
        let eig = Spectrum::new(vec![-1.0, -1.0, -1.0, 0.5]).unwrap();
        assert!(matches!(
            f_linearize_eigs(eig, 0.0, 1.0, 4, 2),
            Err(Error::ConeViolation { .. })
        ));
    }

    #[test]
    fn general_spec_validation() {
        assert!(EquationSpec::general(4, 1, 0.0, 1.0).is_err());
        assert!(EquationSpec::general(4, 2, 0.0, 0.0).is_err());
        assert!(EquationSpec::pure(2, 1).is_err());
        assert!(EquationSpec::pure(4, 5).is_err());
    }

    #[test]
    fn jet_conversion_round_trip() {
        let x = [0.3, 0.4, -0.2];
        let jet = PointJet::radial(ball_u(3, 2, 1.0, 0.5385), &x, Variable::U).unwrap();
        let back = jet.convert().unwrap().convert().unwrap();
        assert!((back.value - jet.value).abs() < 1e-12 * jet.value);
        assert!(back.hess.max_abs_diff(&jet.hess) < 1e-10 * jet.hess.frobenius());
    }
}
