//! Explicit solutions and barriers, as radial profiles with analytic jets.
//!
//! Each profile evaluates `(f, f', f'')` in one scalar variable: the radius
//! `r = |x − x₀|` for the ball-type solutions and the glued Dirichlet
//! subsolution, or a distance `ρ` to a boundary model for the collar and
//! codimension barriers. Collar barriers live on the flat half-space model
//! (`ρ = x_n`, ∇²ρ = 0); codimension barriers on the flat codim-`m` model
//! (`ρ` = norm of the last `m` coordinates).

use serde::{Deserialize, Serialize};

use crate::conformal::{
    jacobi_eigen, radial_eigen, w_from_jet, EquationSpec, Mode, PointJet, SymMatrix, Variable,
};
use crate::error::{Error, Result};
use crate::symfun::{
    self, binomial, elementary_all, gamma_margin, two_block_margin, vm_vector, Spectrum,
    TwoBlockSpectrum, CONE_BOUNDARY_TOL,
};

/// Growth constant `((n−1) C(n,k)^{1/k})^{(n−2)/4}` of blow-up solutions at a hypersurface.
pub fn growth_constant(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) * binomial(n, k).powf(1.0 / k as f64)).powf((nf - 2.0) / 4.0)
}

/// Which side of the sphere `|x − x₀| = s` a ball-type solution lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallSide {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    InteriorBall,
    ExteriorBall,
    GeneralRadial,
    CollarSub,
    CollarSuper,
    CodimPhi,
    CodimPsi,
    UpperBarrier,
    DirichletSub,
}

/// Radial domain for the glued Dirichlet subsolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubDomain {
    Ball { radius: f64, phi: f64 },
    Annulus { inner: f64, outer: f64, phi_inner: f64, phi_outer: f64 },
}

impl SubDomain {
    fn outer_radius(&self) -> f64 {
        match *self {
            SubDomain::Ball { radius, .. } => radius,
            SubDomain::Annulus { outer, .. } => outer,
        }
    }

    fn inner_radius(&self) -> f64 {
        match *self {
            SubDomain::Ball { .. } => 0.0,
            SubDomain::Annulus { inner, .. } => inner,
        }
    }
}

/// Kind-specific parameters. `c` is always the multiplicative constant of the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileParams {
    /// `c (s² − r²)^{1−n/2}` on `r < s`.
    InteriorBall { s: f64, c: f64, x0: Vec<f64> },
    /// `c (r² − s²)^{1−n/2}` on `r > s`.
    ExteriorBall { s: f64, c: f64, x0: Vec<f64> },
    /// Same formula as the interior ball, used as a pointwise upper bound on `B_R`.
    UpperBarrier { radius: f64, c: f64, x0: Vec<f64> },
    /// Ball-type solution of the general equation with constant coefficients.
    GeneralRadial {
        alpha: f64,
        alpha0: f64,
        s: f64,
        mu: f64,
        c: f64,
        side: BallSide,
        x0: Vec<f64>,
    },
    /// `c₀ (ρ + ε)^{1−n/2} e^{1/(ρ+δ) − 1/δ}` on `0 < ρ < rho_max`.
    CollarSub { c0: f64, eps: f64, delta: f64, rho_max: f64 },
    /// `c₀ (ρ − ε)^{1−n/2} √((δ+ρ)/δ)` on `ε < ρ < rho_max`.
    CollarSuper { c0: f64, eps: f64, delta: f64, rho_max: f64 },
    /// `c ρ^{1−n/2}` near a codimension-`m` set.
    CodimPhi { m: usize, c: f64 },
    /// `(c ρ^{−a} + d)^b` near a codimension-`m` set.
    CodimPsi { m: usize, a: f64, b: f64, c: f64, d: f64 },
    /// Glued subsolution in the log-variable `v`.
    DirichletSub {
        domain: SubDomain,
        big_r: f64,
        big_c: f64,
        delta: f64,
        eps_smooth: f64,
    },
}

/// An explicit profile. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: usize,
    pub k: usize,
    pub params: ProfileParams,
}

fn ball_c(n: usize, k: usize, s: f64) -> f64 {
    let nf = n as f64;
    (4.0 * (nf - 1.0) * binomial(n, k).powf(1.0 / k as f64) * s * s).powf((nf - 2.0) / 4.0)
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 3 || k == 0 || k > n {
        return Err(Error::Domain(format!("invalid (n, k) = ({n}, {k})")));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

fn center(n: usize, x0: &[f64]) -> Result<Vec<f64>> {
    if x0.is_empty() {
        return Ok(vec![0.0; n]);
    }
    if x0.len() != n {
        return Err(Error::Domain(format!("center has dimension {}, expected {n}", x0.len())));
    }
    Ok(x0.to_vec())
}

/// Blow-up solution on `B_s(x₀)`.
pub fn interior_ball(n: usize, k: usize, s: f64, x0: &[f64]) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("s", s)?;
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::InteriorBall {
            s,
            c: ball_c(n, k, s),
            x0: center(n, x0)?,
        },
    })
}

/// Blow-up solution on `ℝⁿ \ B̄_s(x₀)`, decaying like `|x|^{2−n}`.
pub fn exterior_ball(n: usize, k: usize, s: f64, x0: &[f64]) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("s", s)?;
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::ExteriorBall {
            s,
            c: ball_c(n, k, s),
            x0: center(n, x0)?,
        },
    })
}

/// Pointwise upper bound for every positive admissible solution on `B_R(x₀)`.
pub fn upper_barrier_ball(n: usize, k: usize, radius: f64, x0: &[f64]) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("R", radius)?;
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::UpperBarrier {
            radius,
            c: ball_c(n, k, radius),
            x0: center(n, x0)?,
        },
    })
}

/// Smallest positive root of `μ^k C(n,k) + α μ^{k−1} C(n,k−1) = α₀`.
pub fn isotropic_root(n: usize, k: usize, alpha: f64, alpha0: f64) -> Result<f64> {
    if k < 2 || k > n {
        return Err(Error::Domain(format!("isotropic root needs 2 ≤ k ≤ n, got k = {k}")));
    }
    positive("α₀", alpha0)?;
    let (ck, ck1) = (binomial(n, k), binomial(n, k - 1));
    let poly = |mu: f64| mu.powi(k as i32) * ck + alpha * mu.powi(k as i32 - 1) * ck1 - alpha0;
    let hi = (alpha0 / ck).powf(1.0 / k as f64) + (-alpha).max(0.0) * n as f64 + 1.0;
    // P(0) = −α₀ < 0; march to the first sign change so the smallest root is bracketed
    let steps = 4096;
    let mut lo_b = 0.0;
    let mut hi_b = hi;
    for i in 1..=steps {
        let x = hi * i as f64 / steps as f64;
        if poly(x) >= 0.0 {
            hi_b = x;
            lo_b = hi * (i - 1) as f64 / steps as f64;
            break;
        }
    }
    assert!(poly(hi_b) >= 0.0, "no positive root below {hi}; impossible for α₀ > 0");
    let (mut lo, mut up) = (lo_b, hi_b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if poly(mid) < 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let mu = if poly(lo).abs() < poly(up).abs() { lo } else { up };
    let scale = mu.powi(k as i32) * ck + alpha.abs() * mu.powi(k as i32 - 1) * ck1 + alpha0;
    debug_assert!(poly(mu).abs() <= 1e-12 * scale);
    Ok(mu)
}

/// Ball-type solution of `σ_k(X) + α σ_{k−1}(X) = α₀` with constant coefficients.
pub fn general_radial(
    n: usize,
    k: usize,
    alpha: f64,
    alpha0: f64,
    s: f64,
    x0: &[f64],
    side: BallSide,
) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("s", s)?;
    let mu = isotropic_root(n, k, alpha, alpha0)?;
    let nf = n as f64;
    let c = (4.0 * (nf - 1.0) / mu).powf((nf - 2.0) / 4.0) * s.powf((nf - 2.0) / 2.0);
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::GeneralRadial {
            alpha,
            alpha0,
            s,
            mu,
            c,
            side,
            x0: center(n, x0)?,
        },
    })
}

/// Collar subsolution on the flat half-space model, valid on `0 < ρ < rho_max`.
pub fn collar_subsolution(n: usize, k: usize, eps: f64, delta: f64, rho_max: f64) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("ε", eps)?;
    positive("δ", delta)?;
    positive("ρ₀", rho_max)?;
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::CollarSub {
            c0: growth_constant(n, k),
            eps,
            delta,
            rho_max,
        },
    })
}

/// Collar supersolution on the flat half-space model, valid on `ε < ρ < rho_max`.
pub fn collar_supersolution(n: usize, k: usize, eps: f64, delta: f64, rho_max: f64) -> Result<RadialProfile> {
    check_nk(n, k)?;
    positive("ε", eps)?;
    positive("δ", delta)?;
    if !(rho_max > eps) {
        return Err(Error::Domain(format!("window ({eps}, {rho_max}) is empty")));
    }
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::CollarSuper {
            c0: growth_constant(n, k),
            eps,
            delta,
            rho_max,
        },
    })
}

/// Largest admissible constant `(σ_k^{1/k}(v_m))^{(n−2)/4}` of the codimension barrier φ.
pub fn codim_phi_cmax(n: usize, k: usize, m: usize) -> Result<f64> {
    let vm = vm_vector(n, m)?;
    let margin = two_block_margin(&vm, k)?;
    if margin <= CONE_BOUNDARY_TOL {
        return Err(Error::ConeViolation { margin, node: None });
    }
    let sk = symfun::sigma_two_block(&vm, k)?;
    Ok(sk.powf(1.0 / k as f64).powf((n as f64 - 2.0) / 4.0))
}

/// `φ = c ρ^{1−n/2}`; rejected unless `v_m ∈ Γ_k` and `0 < c < c_max`.
pub fn codim_phi(n: usize, k: usize, m: usize, c: f64) -> Result<RadialProfile> {
    check_nk(n, k)?;
    let cmax = codim_phi_cmax(n, k, m)?;
    if !(c > 0.0 && c < cmax) {
        return Err(Error::Domain(format!("c = {c} outside (0, {cmax})")));
    }
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::CodimPhi { m, c },
    })
}

/// `ψ = (c ρ^{−a} + d)^b`.
pub fn codim_psi(n: usize, k: usize, m: usize, a: f64, b: f64, c: f64, d: f64) -> Result<RadialProfile> {
    check_nk(n, k)?;
    vm_vector(n, m)?;
    for (name, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        positive(name, x)?;
    }
    Ok(RadialProfile {
        n,
        k,
        params: ProfileParams::CodimPsi { m, a, b, c, d },
    })
}

/// Distance data `(ρ, ∇ρ, ∇²ρ)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceJet {
    pub rho: f64,
    pub grad: Vec<f64>,
    pub hess: SymMatrix,
}

/// Distance to the flat model `Γ = {x : last m coordinates vanish}`.
pub fn model_codim_jet(x: &[f64], m: usize) -> Result<DistanceJet> {
    let n = x.len();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("codimension {m} outside 1..={n}")));
    }
    let first = n - m;
    let rho = x[first..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho == 0.0 {
        return Err(Error::Domain("point lies on the model set".into()));
    }
    let mut grad = vec![0.0; n];
    for i in first..n {
        grad[i] = x[i] / rho;
    }
    let hess = SymMatrix::from_fn(n, |i, j| {
        if i < first || j < first {
            0.0
        } else {
            let delta = if i == j { 1.0 } else { 0.0 };
            (delta - grad[i] * grad[j]) / rho
        }
    });
    Ok(DistanceJet { rho, grad, hess })
}

/// Smoothed absolute value: the even C² quartic on `|t| < ε`, `|t|` outside.
/// Returns `(h, h', h'')`.
pub fn smoothing_h(t: f64, eps: f64) -> [f64; 3] {
    if t.abs() >= eps {
        return [t.abs(), t.signum(), 0.0];
    }
    let s = t / eps;
    [
        eps * (0.375 + 0.75 * s * s - 0.125 * s.powi(4)),
        1.5 * s - 0.5 * s.powi(3),
        (1.5 - 1.5 * s * s) / eps,
    ]
}

/// Value, first and second derivative of `ln` of a profile with `f = c g^p`.
fn power_jet(c: f64, g: [f64; 3], p: f64) -> [f64; 3] {
    let f = c * g[0].powf(p);
    let d1 = c * p * g[0].powf(p - 1.0) * g[1];
    let d2 = c * p * (p - 1.0) * g[0].powf(p - 2.0) * g[1] * g[1] + c * p * g[0].powf(p - 1.0) * g[2];
    [f, d1, d2]
}

/// `(f, f', f'')` from `f` and the first two derivatives of `ln f`.
fn from_log(f: f64, l1: f64, l2: f64) -> [f64; 3] {
    [f, f * l1, f * (l1 * l1 + l2)]
}

impl RadialProfile {
    pub fn kind(&self) -> ProfileKind {
        match self.params {
            ProfileParams::InteriorBall { .. } => ProfileKind::InteriorBall,
            ProfileParams::ExteriorBall { .. } => ProfileKind::ExteriorBall,
            ProfileParams::UpperBarrier { .. } => ProfileKind::UpperBarrier,
            ProfileParams::GeneralRadial { .. } => ProfileKind::GeneralRadial,
            ProfileParams::CollarSub { .. } => ProfileKind::CollarSub,
            ProfileParams::CollarSuper { .. } => ProfileKind::CollarSuper,
            ProfileParams::CodimPhi { .. } => ProfileKind::CodimPhi,
            ProfileParams::CodimPsi { .. } => ProfileKind::CodimPsi,
            ProfileParams::DirichletSub { .. } => ProfileKind::DirichletSub,
        }
    }

    /// Variable the profile is expressed in.
    pub fn variable(&self) -> Variable {
        match self.params {
            ProfileParams::DirichletSub { .. } => Variable::V,
            _ => Variable::U,
        }
    }

    /// Open interval of the scalar argument on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match &self.params {
            ProfileParams::InteriorBall { s, .. } => (0.0, *s),
            ProfileParams::UpperBarrier { radius, .. } => (0.0, *radius),
            ProfileParams::ExteriorBall { s, .. } => (*s, f64::INFINITY),
            ProfileParams::GeneralRadial { s, side, .. } => match side {
                BallSide::Interior => (0.0, *s),
                BallSide::Exterior => (*s, f64::INFINITY),
            },
            ProfileParams::CollarSub { rho_max, .. } => (0.0, *rho_max),
            ProfileParams::CollarSuper { eps, rho_max, .. } => (*eps, *rho_max),
            ProfileParams::CodimPhi { .. } | ProfileParams::CodimPsi { .. } => (0.0, f64::INFINITY),
            ProfileParams::DirichletSub { domain, .. } => (domain.inner_radius(), domain.outer_radius()),
        }
    }

    /// Profile constant `c` (or `c₀` for collar barriers), when it has one.
    pub fn constant(&self) -> Option<f64> {
        match &self.params {
            ProfileParams::InteriorBall { c, .. }
            | ProfileParams::ExteriorBall { c, .. }
            | ProfileParams::UpperBarrier { c, .. }
            | ProfileParams::GeneralRadial { c, .. }
            | ProfileParams::CodimPhi { c, .. }
            | ProfileParams::CodimPsi { c, .. } => Some(*c),
            ProfileParams::CollarSub { c0, .. } | ProfileParams::CollarSuper { c0, .. } => Some(*c0),
            ProfileParams::DirichletSub { .. } => None,
        }
    }

    /// Same profile with its constant replaced; used by negative controls and scaling checks.
    pub fn with_constant(&self, value: f64) -> Self {
        let mut out = self.clone();
        match &mut out.params {
            ProfileParams::InteriorBall { c, .. }
            | ProfileParams::ExteriorBall { c, .. }
            | ProfileParams::UpperBarrier { c, .. }
            | ProfileParams::GeneralRadial { c, .. }
            | ProfileParams::CodimPhi { c, .. }
            | ProfileParams::CodimPsi { c, .. } => *c = value,
            ProfileParams::CollarSub { c0, .. } | ProfileParams::CollarSuper { c0, .. } => *c0 = value,
            ProfileParams::DirichletSub { .. } => {}
        }
        out
    }

    /// `(f, f', f'')` at radius / distance `t`.
    pub fn eval(&self, t: f64) -> Result<[f64; 3]> {
        let (lo, hi) = self.domain();
        let closed_lo = matches!(
            self.params,
            ProfileParams::InteriorBall { .. }
                | ProfileParams::UpperBarrier { .. }
                | ProfileParams::GeneralRadial { side: BallSide::Interior, .. }
        ) || matches!(self.params, ProfileParams::DirichletSub { .. });
        let closed_hi = matches!(self.params, ProfileParams::DirichletSub { .. });
        let inside_lo = if closed_lo { t >= lo } else { t > lo };
        let inside_hi = if closed_hi { t <= hi } else { t < hi };
        if !(inside_lo && inside_hi) || !t.is_finite() {
            return Err(Error::Domain(format!("{:?} profile evaluated at {t} outside ({lo}, {hi})", self.kind())));
        }
        let nf = self.n as f64;
        let p = 1.0 - nf / 2.0;
        Ok(match &self.params {
            ProfileParams::InteriorBall { s, c, .. } | ProfileParams::UpperBarrier { radius: s, c, .. } => {
                power_jet(*c, [s * s - t * t, -2.0 * t, -2.0], p)
            }
            ProfileParams::ExteriorBall { s, c, .. } => power_jet(*c, [t * t - s * s, 2.0 * t, 2.0], p),
            ProfileParams::GeneralRadial { s, c, side, .. } => match side {
                BallSide::Interior => power_jet(*c, [s * s - t * t, -2.0 * t, -2.0], p),
                BallSide::Exterior => power_jet(*c, [t * t - s * s, 2.0 * t, 2.0], p),
            },
            ProfileParams::CollarSub { c0, eps, delta, .. } => {
                let w = 1.0 / (t + delta) - 1.0 / delta;
                let f = c0 * (t + eps).powf(p) * w.exp();
                let l1 = p / (t + eps) - 1.0 / (t + delta).powi(2);
                let l2 = -p / (t + eps).powi(2) + 2.0 / (t + delta).powi(3);
                from_log(f, l1, l2)
            }
            ProfileParams::CollarSuper { c0, eps, delta, .. } => {
                let f = c0 * (t - eps).powf(p) * ((delta + t) / delta).sqrt();
                let l1 = p / (t - eps) + 0.5 / (delta + t);
                let l2 = -p / (t - eps).powi(2) - 0.5 / (delta + t).powi(2);
                from_log(f, l1, l2)
            }
            ProfileParams::CodimPhi { c, .. } => power_jet(*c, [t, 1.0, 0.0], p),
            ProfileParams::CodimPsi { a, b, c, d, .. } => {
                let g = [
                    c * t.powf(-a) + d,
                    -a * c * t.powf(-a - 1.0),
                    a * (a + 1.0) * c * t.powf(-a - 2.0),
                ];
                power_jet(1.0, g, *b)
            }
            ProfileParams::DirichletSub {
                domain,
                big_r,
                big_c,
                delta,
                eps_smooth,
            } => dirichlet_sub_eval(domain, *big_r, *big_c, *delta, *eps_smooth, t),
        })
    }

    /// Full point jet at `x` in the profile's geometric model.
    pub fn jet_at(&self, x: &[f64]) -> Result<PointJet> {
        if x.len() != self.n {
            return Err(Error::Domain(format!("point has dimension {}, expected {}", x.len(), self.n)));
        }
        match &self.params {
            ProfileParams::InteriorBall { x0, .. }
            | ProfileParams::ExteriorBall { x0, .. }
            | ProfileParams::UpperBarrier { x0, .. }
            | ProfileParams::GeneralRadial { x0, .. } => {
                let rel: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                let r = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
                PointJet::radial(self.eval(r)?, &rel, Variable::U).map(|j| j.at(x.to_vec()))
            }
            ProfileParams::DirichletSub { .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                PointJet::radial(self.eval(r)?, x, Variable::V)
            }
            ProfileParams::CollarSub { .. } | ProfileParams::CollarSuper { .. } => {
                // half-space model: ρ = x_n, ∇ρ = e_n, ∇²ρ = 0
                let n = self.n;
                let mut grad = vec![0.0; n];
                grad[n - 1] = 1.0;
                let dist = DistanceJet {
                    rho: x[n - 1],
                    grad,
                    hess: SymMatrix::zeros(n),
                };
                self.compose(&dist, x)
            }
            ProfileParams::CodimPhi { m, .. } | ProfileParams::CodimPsi { m, .. } => {
                let dist = model_codim_jet(x, *m)?;
                self.compose(&dist, x)
            }
        }
    }

    fn compose(&self, dist: &DistanceJet, x: &[f64]) -> Result<PointJet> {
        let [f, d1, d2] = self.eval(dist.rho)?;
        let n = self.n;
        let grad = dist.grad.iter().map(|g| d1 * g).collect();
        let hess = SymMatrix::from_fn(n, |i, j| d2 * dist.grad[i] * dist.grad[j] + d1 * dist.hess.get(i, j));
        Ok(PointJet::new(f, grad, hess, self.variable())?.at(x.to_vec()))
    }

    /// A point at radius / distance `t` in the profile's model geometry.
    pub fn model_point(&self, t: f64) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        match &self.params {
            ProfileParams::InteriorBall { x0, .. }
            | ProfileParams::ExteriorBall { x0, .. }
            | ProfileParams::UpperBarrier { x0, .. }
            | ProfileParams::GeneralRadial { x0, .. } => {
                x.copy_from_slice(x0);
                x[0] += t;
            }
            ProfileParams::DirichletSub { .. } => x[0] = t,
            ProfileParams::CollarSub { .. } | ProfileParams::CollarSuper { .. } => {
                x[0] = 0.3;
                x[n - 1] = t;
            }
            ProfileParams::CodimPhi { m, .. } | ProfileParams::CodimPsi { m, .. } => {
                // spread ρ over the normal block so the Hessian is not axis-aligned
                let w = 1.0 / (*m as f64).sqrt();
                for xi in x.iter_mut().skip(n - m) {
                    *xi = t * w;
                }
                if n > *m {
                    x[0] = 0.7;
                }
            }
        }
        x
    }

    /// Compare `σ_k^{1/k}(W[f])` with `((n−2)/2) f^{(n+2)/(n−2)}` at distance/radius `t`.
    pub fn barrier_check(&self, t: f64) -> Result<BarrierCheck> {
        let jet = self.jet_at(&self.model_point(t))?;
        let jet = match jet.variable {
            Variable::U => jet,
            Variable::V => jet.convert()?,
        };
        pure_barrier_check(&jet, self.n, self.k, t)
    }
}

/// Pointwise comparison of the pure operator with its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierCheck {
    pub at: f64,
    /// `σ_k^{1/k}(W)` when the spectrum is in Γ̄_k, otherwise `None`.
    pub lhs: Option<f64>,
    pub rhs: f64,
    /// Normalized Gårding margin of λ(W) at order k.
    pub margin: f64,
}

impl BarrierCheck {
    /// Admissible and `lhs ≥ rhs`.
    pub fn is_sub(&self) -> bool {
        self.margin > 0.0 && self.lhs.is_some_and(|l| l >= self.rhs * (1.0 - 1e-12))
    }

    /// Outside Γ̄_k, or `lhs ≤ rhs`.
    pub fn is_super(&self) -> bool {
        self.lhs.is_none_or(|l| l <= self.rhs * (1.0 + 1e-12))
    }

    /// `lhs/rhs − 1`; positive for strict subsolutions.
    pub fn relative_gap(&self) -> Option<f64> {
        self.lhs.map(|l| l / self.rhs - 1.0)
    }
}

fn pure_barrier_check(jet: &PointJet, n: usize, k: usize, at: f64) -> Result<BarrierCheck> {
    let eig = jacobi_eigen(&w_from_jet(jet, n)?)?;
    let margin = gamma_margin(&eig, k)?;
    let nf = n as f64;
    let rhs = (nf - 2.0) / 2.0 * jet.value.powf((nf + 2.0) / (nf - 2.0));
    let lhs = if margin >= -CONE_BOUNDARY_TOL {
        Some(symfun::sigma(&eig, k)?.max(0.0).powf(1.0 / k as f64))
    } else {
        None
    };
    Ok(BarrierCheck { at, lhs, rhs, margin })
}

/// Certificate over a sampled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCertificate {
    pub window: (f64, f64),
    pub samples: usize,
    pub holds: bool,
    /// Smallest `lhs/rhs − 1` for subsolutions, largest for supersolutions.
    pub worst_gap: f64,
    pub failures: Vec<f64>,
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// Check the sub- or supersolution inequality of a collar/codim/ball profile
/// at `count` log-spaced points of `[lo, hi]`.
pub fn certify_window(profile: &RadialProfile, lo: f64, hi: f64, count: usize, want_sub: bool) -> Result<WindowCertificate> {
    let mut worst = if want_sub { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut failures = Vec::new();
    for t in log_spaced(lo, hi, count) {
        let chk = profile.barrier_check(t)?;
        let ok = if want_sub { chk.is_sub() } else { chk.is_super() };
        if !ok {
            failures.push(t);
        }
        if let Some(g) = chk.relative_gap() {
            worst = if want_sub { worst.min(g) } else { worst.max(g) };
        } else if want_sub {
            worst = f64::NEG_INFINITY;
        }
    }
    Ok(WindowCertificate {
        window: (lo, hi),
        samples: count,
        holds: failures.is_empty(),
        worst_gap: worst,
        failures,
    })
}

/// Shrink the upper end of the window until the inequality holds on all samples.
pub fn search_window(profile: &RadialProfile, lo: f64, hi: f64, count: usize, want_sub: bool) -> Result<WindowCertificate> {
    let mut top = hi;
    for _ in 0..60 {
        // samples outside the profile's domain count as failures
        if let Ok(cert) = certify_window(profile, lo, top, count, want_sub) {
            if cert.holds {
                return Ok(cert);
            }
        }
        top = lo + 0.5 * (top - lo);
        if top <= lo * (1.0 + 1e-9) {
            break;
        }
    }
    Err(Error::Numerical(format!(
        "no certified window above {lo} for {:?}",
        profile.kind()
    )))
}

/// Spectrum of `ρ^{n/2+1} W[φ]` on the flat codim-`m` model at distance `rho`.
pub fn phi_scaled_spectrum(profile: &RadialProfile, rho: f64) -> Result<Spectrum> {
    if profile.kind() != ProfileKind::CodimPhi {
        return Err(Error::Domain("phi_scaled_spectrum needs a CodimPhi profile".into()));
    }
    let jet = profile.jet_at(&profile.model_point(rho))?;
    let w = w_from_jet(&jet, profile.n)?;
    jacobi_eigen(&w.scale(rho.powf(profile.n as f64 / 2.0 + 1.0)))
}

/// Spectrum of the limiting structure matrix `A_m + B_ab(ζ)` of ψ.
pub fn psi_structure_spectrum(n: usize, m: usize, a: f64, b: f64, zeta: f64) -> Result<Spectrum> {
    vm_vector(n, m)?;
    let (nf, mf) = (n as f64, m as f64);
    let side = 2.0 * a * b * zeta + a * (1.0 - zeta) + 2.0 - nf;
    let mut values = vec![nf - mf + side; n - m];
    values.push(nf - mf + (nf - 1.0) * a * (1.0 - zeta));
    values.extend(std::iter::repeat_n(2.0 - mf + side, m - 1));
    Spectrum::new(values)
}

/// Normalized `(1/(abc)) ρ^{a+2} (cρ^{−a}+d)^{4b/(n−2)+1} ψ^{−(n+2)/(n−2)} W[ψ]` at distance `rho`
/// on the flat model, together with the corresponding ζ.
pub fn psi_normalized_spectrum(profile: &RadialProfile, rho: f64) -> Result<(f64, Spectrum)> {
    let ProfileParams::CodimPsi { a, b, c, d, .. } = profile.params else {
        return Err(Error::Domain("psi_normalized_spectrum needs a CodimPsi profile".into()));
    };
    let nf = profile.n as f64;
    let jet = profile.jet_at(&profile.model_point(rho))?;
    let g = c * rho.powf(-a) + d;
    let scale = rho.powf(a + 2.0) * g.powf(4.0 * b / (nf - 2.0) + 1.0)
        * jet.value.powf(-(nf + 2.0) / (nf - 2.0))
        / (a * b * c);
    let w = w_from_jet(&jet, profile.n)?.scale(scale);
    Ok((c * rho.powf(-a) / g, jacobi_eigen(&w)?))
}

/// Supersolution certificate for ψ: every sampled `λ(A_m + B_ab(ζ))` lies outside Γ̄_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiCertificate {
    pub holds: bool,
    /// Largest normalized margin seen (must stay below −tol).
    pub max_margin: f64,
    /// ζ values whose spectrum touched Γ̄_k.
    pub failing_zetas: Vec<f64>,
}

pub fn psi_certificate(n: usize, k: usize, m: usize, a: f64, b: f64, zetas: &[f64]) -> Result<PsiCertificate> {
    let mut max_margin = f64::NEG_INFINITY;
    let mut failing = Vec::new();
    for &z in zetas {
        let margin = gamma_margin(&psi_structure_spectrum(n, m, a, b, z)?, k)?;
        max_margin = max_margin.max(margin);
        if margin >= -CONE_BOUNDARY_TOL {
            failing.push(z);
        }
    }
    Ok(PsiCertificate {
        holds: failing.is_empty(),
        max_margin,
        failing_zetas: failing,
    })
}

/// ζ grid 0.01, 0.02, …, 0.99.
pub fn default_zetas() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// One cell of a feasibility scan over `(a, ab)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFeasibility {
    pub a: f64,
    pub ab: f64,
    pub holds: bool,
    pub max_margin: f64,
}

/// Scan `(a, ab)` pairs and report which give a ψ supersolution certificate.
pub fn psi_feasible_region(n: usize, k: usize, m: usize, a_values: &[f64], ab_values: &[f64]) -> Result<Vec<PsiFeasibility>> {
    let zetas = default_zetas();
    let mut out = Vec::new();
    for &a in a_values {
        for &ab in ab_values {
            let cert = psi_certificate(n, k, m, a, ab / a, &zetas)?;
            out.push(PsiFeasibility {
                a,
                ab,
                holds: cert.holds,
                max_margin: cert.max_margin,
            });
        }
    }
    Ok(out)
}

fn dirichlet_sub_parts(domain: &SubDomain, big_r: f64, big_c: f64, delta: f64, r: f64) -> ([f64; 3], Option<[f64; 3]>) {
    let q = big_r * big_r - r * r;
    let w = [-q.ln() - big_c, 2.0 * r / q, 2.0 / q + 4.0 * r * r / (q * q)];
    // η in the collar of the nearest boundary sphere, with dρ/dr = ±1
    let collar = match *domain {
        SubDomain::Ball { radius, phi } => (radius - r <= delta).then_some((radius - r, -1.0, phi)),
        SubDomain::Annulus { inner, outer, phi_inner, phi_outer } => {
            if r - inner <= delta && r - inner <= outer - r {
                Some((r - inner, 1.0, phi_inner))
            } else if outer - r <= delta {
                Some((outer - r, -1.0, phi_outer))
            } else {
                None
            }
        }
    };
    let eta = collar.map(|(rho, sign, phi)| {
        let g = rho + delta * delta;
        [2.0 * delta.ln() - g.ln() + phi, -sign / g, 1.0 / (g * g)]
    });
    (w, eta)
}

fn dirichlet_sub_eval(domain: &SubDomain, big_r: f64, big_c: f64, delta: f64, eps: f64, r: f64) -> [f64; 3] {
    let (w, eta) = dirichlet_sub_parts(domain, big_r, big_c, delta, r);
    let Some(eta) = eta else { return w };
    let t = eta[0] - w[0];
    let h = smoothing_h(t, eps);
    let dt1 = eta[1] - w[1];
    let dt2 = eta[2] - w[2];
    [
        0.5 * (eta[0] + w[0]) + 0.5 * h[0],
        0.5 * (eta[1] + w[1]) + 0.5 * h[1] * dt1,
        0.5 * (eta[2] + w[2]) + 0.5 * h[1] * dt2 + 0.5 * h[2] * dt1 * dt1,
    ]
}

/// Coefficients `(α, α₀)` the subsolution is certified against. The pure
/// equation is `σ_k(X) = 1`, i.e. `α = 0`, `α₀ = 1`.
fn sub_coefficients(spec: &EquationSpec, r: f64) -> (f64, f64) {
    match &spec.mode {
        Mode::PureSigmaK => (0.0, 1.0),
        Mode::General { alpha, alpha0 } => (alpha.at_radius(r), alpha0.at_radius(r)),
    }
}

/// `σ_k(X) + α σ_{k−1}(X) − α₀` with `X = (n−2) e^{−2v} λ(𝒲[v])` for a radial v-jet,
/// or `None` when `X ∉ Γ_{cone}`.
pub fn radial_general_residual(spec: &EquationSpec, v: [f64; 3], r: f64) -> Result<Option<f64>> {
    let n = spec.n;
    let k = spec.k;
    let tb = radial_eigen(v, r, n, Variable::V)?;
    let scale = (n as f64 - 2.0) * (-2.0 * v[0]).exp();
    let x = TwoBlockSpectrum::new(tb.a * scale, tb.mult_a, tb.b * scale, tb.mult_b)?;
    if two_block_margin(&x, spec.cone_order().max(1))? <= 0.0 {
        return Ok(None);
    }
    let e = elementary_all(x.expand().values(), k);
    let (alpha, alpha0) = sub_coefficients(spec, r);
    Ok(Some(e[k] + alpha * e[k - 1] - alpha0))
}

/// Report of the subsolution search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionReport {
    pub profile: RadialProfile,
    /// Minimum of the residual over the verification grid (> 0 when certified).
    pub margin: f64,
    pub grid_points: usize,
}

/// Verification grid: uniform in the bulk plus log-spaced points in each collar.
fn subsolution_grid(domain: &SubDomain, delta: f64) -> Vec<f64> {
    let (lo, hi) = (domain.inner_radius(), domain.outer_radius());
    let mut pts: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    let depth = log_spaced(delta * delta * 1e-3, delta, 200);
    pts.extend(depth.iter().map(|d| hi - d));
    if let SubDomain::Annulus { .. } = domain {
        pts.extend(depth.iter().map(|d| lo + d));
    }
    pts.retain(|&r| r >= lo && r <= hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

/// Glued strict subsolution with the prescribed Dirichlet data on a radial domain.
///
/// Searches `C` upward from the lowest value compatible with the data,
/// and `δ` downward until the residual is strictly
/// positive on the verification grid, the interior function sits below the
/// boundary data, and `η ≤ w − ε` at `ρ = δ` so the gluing is smooth.
pub fn dirichlet_subsolution(spec: &EquationSpec, domain: SubDomain, eps_smooth: f64) -> Result<SubsolutionReport> {
    spec.validate()?;
    positive("ε", eps_smooth)?;
    let (lo, hi) = (domain.inner_radius(), domain.outer_radius());
    positive("outer radius", hi)?;
    if hi <= lo {
        return Err(Error::Domain(format!("empty radial domain ({lo}, {hi})")));
    }
    let phis: Vec<f64> = match domain {
        SubDomain::Ball { phi, .. } => vec![phi],
        SubDomain::Annulus { phi_inner, phi_outer, .. } => vec![phi_inner, phi_outer],
    };
    let phi_min = phis.iter().copied().fold(f64::INFINITY, f64::min);
    let big_r = 2.0 * hi;
    let w_at = |r: f64, c: f64| -(big_r * big_r - r * r).ln() - c;

    let mut last_failure = String::new();
    // lowest C keeping w a margin below the data; the collar widens as C decreases
    let c_start = -(big_r * big_r - hi * hi).ln() - phi_min + 2.0 * eps_smooth;
    for c_step in 0..120 {
        let big_c = c_start + 0.5 * c_step as f64;
        // w must sit below the data on both spheres
        if w_at(hi, big_c) >= phi_min - eps_smooth {
            last_failure = format!("w ≥ φ − ε on the boundary at C = {big_c}");
            continue;
        }
        let half_width = match domain {
            SubDomain::Ball { .. } => hi,
            SubDomain::Annulus { .. } => 0.5 * (hi - lo),
        };
        let mut delta = (0.25 * half_width).min(0.5);
        for _ in 0..60 {
            let profile = RadialProfile {
                n: spec.n,
                k: spec.k,
                params: ProfileParams::DirichletSub {
                    domain,
                    big_r,
                    big_c,
                    delta,
                    eps_smooth,
                },
            };
            // smooth gluing: η ≤ w − ε where the collar ends
            let glue_ok = phis.iter().all(|phi| {
                let eta = 2.0 * delta.ln() - (delta + delta * delta).ln() + phi;
                eta <= w_at(hi, big_c) - eps_smooth
            });
            if !glue_ok {
                last_failure = format!("η > w − ε at ρ = δ = {delta:.3e}");
                delta *= 0.5;
                continue;
            }
            let grid = subsolution_grid(&domain, delta);
            let mut margin = f64::INFINITY;
            let mut failing = None;
            for &r in &grid {
                match radial_general_residual(spec, profile.eval(r)?, r)? {
                    Some(res) if res > 0.0 => margin = margin.min(res),
                    other => {
                        failing = Some((r, other));
                        break;
                    }
                }
            }
            match failing {
                None => {
                    return Ok(SubsolutionReport {
                        profile,
                        margin,
                        grid_points: grid.len(),
                    })
                }
                Some((r, res)) => {
                    last_failure = match res {
                        Some(v) => format!("residual {v:.3e} ≤ 0 at r = {r} (C = {big_c}, δ = {delta:.3e})"),
                        None => format!("cone violation at r = {r} (C = {big_c}, δ = {delta:.3e})"),
                    };
                    // interior failures need larger C, collar failures smaller δ
                    let in_collar = (hi - r) <= delta || (matches!(domain, SubDomain::Annulus { .. }) && (r - lo) <= delta);
                    if !in_collar {
                        break;
                    }
                    delta *= 0.5;
                }
            }
        }
    }
    Err(Error::Numerical(format!("subsolution search failed: {last_failure}")))
}

/// Radial harmonic function `A + B r^{2−n}` (or a constant on a ball)
/// matching `u` at the boundary spheres. Dominates every subharmonic
/// Dirichlet solution with the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBound {
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

impl HarmonicBound {
    pub fn annulus(n: usize, inner: f64, outer: f64, u_inner: f64, u_outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::Domain(format!("bad annulus ({inner}, {outer})")));
        }
        let p = 2.0 - n as f64;
        let (gi, go) = (inner.powf(p), outer.powf(p));
        let b = (u_inner - u_outer) / (gi - go);
        Ok(Self {
            n,
            a: u_outer - b * go,
            b,
        })
    }

    pub fn ball(n: usize, u_boundary: f64) -> Self {
        Self { n, a: u_boundary, b: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.b == 0.0 {
            self.a
        } else {
            self.a + self.b * r.powf(2.0 - self.n as f64)
        }
    }
}
