//! Radial reduction of both equations, solved for the log-variable
//! `v = (2/(n−2)) ln u` by damped Newton on a graded mesh.
//!
//! The discrete residual at an interior node is dimensionless:
//!
//! * pure equation: `σ_k^{1/k}(X) − 1`,
//! * general equation: `(σ_k(X) + α σ_{k−1}(X) − α₀) / σ_{k−1}(X)`,
//!
//! with `X = (n−2) e^{−2v} λ(𝒲[v])` built from three-point differences.
//! Both are increasing in `v_{i±1}` and decreasing in `v_i` on admissible
//! fields, so the Jacobian is a tridiagonal M-matrix and the scheme obeys a
//! discrete comparison principle.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::closed_forms::{dirichlet_subsolution, smoothing_h, SubDomain};
use crate::conformal::{EquationSpec, Mode};
use crate::error::{Error, Result};
use crate::symfun::{binomial, CONE_BOUNDARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// `s < r < r_out`, a truncated exterior of `B_s`.
    ExteriorTrunc { s: f64, r_out: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Ball { radius } => radius > 0.0 && radius.is_finite(),
            Domain::Annulus { inner, outer } => inner > 0.0 && outer > inner && outer.is_finite(),
            Domain::ExteriorTrunc { s, r_out } => s > 0.0 && r_out > s && r_out.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("degenerate domain {self:?}")))
        }
    }

    /// `(r_min, r_max)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Ball { radius } => (0.0, radius),
            Domain::Annulus { inner, outer } => (inner, outer),
            Domain::ExteriorTrunc { s, r_out } => (s, r_out),
        }
    }

    pub fn has_center(&self) -> bool {
        matches!(self, Domain::Ball { .. })
    }
}

/// Node distribution.
///
/// `BoundaryClustered` distributes nodes by the cumulative density
/// `f_in ℓ_in(r) + f_out ℓ_out(r) + (1 − f_in − f_out) bulk(r)`, where each
/// `ℓ` is logarithmic in the distance to its end down to `min_scale · L`.
/// The bulk is uniform, except on truncated exteriors where it is
/// logarithmic in `r`. Spacing ratios tend to 1 under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    Logarithmic,
    BoundaryClustered {
        inner: bool,
        outer: bool,
        layer_fraction: f64,
        min_scale: f64,
    },
}

impl Grading {
    /// Clustering toward the natural blow-up ends of a domain.
    pub fn clustered(domain: &Domain) -> Self {
        let (inner, outer) = match domain {
            Domain::Ball { .. } => (false, true),
            Domain::Annulus { .. } => (true, true),
            Domain::ExteriorTrunc { .. } => (true, false),
        };
        Grading::BoundaryClustered {
            inner,
            outer,
            layer_fraction: 0.35,
            min_scale: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub domain: Domain,
    pub grading: Grading,
    pub nodes: Vec<f64>,
}

impl RadialMesh {
    /// Mesh from explicit nodes; they must span the domain and increase strictly.
    pub fn from_nodes(domain: Domain, grading: Grading, nodes: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if nodes.len() < 17 {
            return Err(Error::Domain(format!("mesh needs at least 16 intervals, got {}", nodes.len().saturating_sub(1))));
        }
        let (a, b) = domain.bounds();
        if nodes[0] != a || *nodes.last().unwrap() != b {
            return Err(Error::Domain("mesh endpoints do not match the domain".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!("mesh not strictly increasing at node {i}")));
        }
        Ok(Self { domain, grading, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes whose value is prescribed (not unknowns).
    pub fn is_dirichlet(&self, i: usize) -> bool {
        i == self.nodes.len() - 1 || (i == 0 && !self.domain.has_center())
    }
}

/// Mesh with `n_intervals` intervals on `domain`.
pub fn build_mesh(domain: Domain, n_intervals: usize, grading: Grading) -> Result<RadialMesh> {
    domain.validate()?;
    if n_intervals < 16 {
        return Err(Error::Domain(format!("need N ≥ 16 intervals, got {n_intervals}")));
    }
    let (a, b) = domain.bounds();
    let len = b - a;
    let nf = n_intervals as f64;
    let nodes: Vec<f64> = match grading {
        Grading::Uniform => (0..=n_intervals).map(|j| a + len * j as f64 / nf).collect(),
        Grading::Logarithmic => {
            if a <= 0.0 {
                return Err(Error::Domain("logarithmic grading needs r_min > 0".into()));
            }
            (0..=n_intervals).map(|j| a * (b / a).powf(j as f64 / nf)).collect()
        }
        Grading::BoundaryClustered {
            inner,
            outer,
            layer_fraction,
            min_scale,
        } => {
            if inner && domain.has_center() {
                return Err(Error::Domain("a ball has no inner boundary to cluster at".into()));
            }
            let f_in = if inner { layer_fraction } else { 0.0 };
            let f_out = if outer { layer_fraction } else { 0.0 };
            if !(layer_fraction > 0.0 && f_in + f_out < 1.0 && min_scale > 0.0 && min_scale < 1.0) {
                return Err(Error::Domain(format!(
                    "bad clustering parameters (layer_fraction = {layer_fraction}, min_scale = {min_scale})"
                )));
            }
            let d0 = min_scale * len;
            let lnorm = ((len + d0) / d0).ln();
            let log_bulk = matches!(domain, Domain::ExteriorTrunc { .. });
            let xi = |r: f64| {
                let bulk = if log_bulk { (r / a).ln() / (b / a).ln() } else { (r - a) / len };
                f_in * ((r - a + d0) / d0).ln() / lnorm
                    + f_out * (1.0 - ((b - r + d0) / d0).ln() / lnorm)
                    + (1.0 - f_in - f_out) * bulk
            };
            let mut nodes = Vec::with_capacity(n_intervals + 1);
            nodes.push(a);
            for j in 1..n_intervals {
                let target = j as f64 / nf;
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if xi(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                nodes.push(0.5 * (lo + hi));
            }
            nodes.push(b);
            nodes
        }
    };
    RadialMesh::from_nodes(domain, grading, nodes).map_err(|e| match e {
        Error::Domain(msg) if msg.contains("strictly") => {
            Error::Numerical(format!("{msg}: clustering finer than float resolution"))
        }
        other => other,
    })
}

/// Nodal values of `v` on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub mesh: RadialMesh,
    pub v: Vec<f64>,
}

impl RadialField {
    pub fn new(mesh: RadialMesh, v: Vec<f64>) -> Result<Self> {
        if v.len() != mesh.len() {
            return Err(Error::Domain(format!("{} values for {} nodes", v.len(), mesh.len())));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at node {i}")));
        }
        Ok(Self { mesh, v })
    }

    pub fn from_fn(mesh: RadialMesh, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = mesh.nodes.iter().map(|&r| f(r)).collect();
        Self::new(mesh, v)
    }

    /// `u = e^{(n−2)v/2}` at every node.
    pub fn u(&self, n: usize) -> Vec<f64> {
        let h = (n as f64 - 2.0) / 2.0;
        self.v.iter().map(|v| (h * v).exp()).collect()
    }
}

/// Prescribed `v` on the boundary spheres. Balls only have `outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub inner: Option<f64>,
    pub outer: f64,
}

impl BoundaryData {
    fn check(&self, domain: &Domain) -> Result<()> {
        if domain.has_center() != self.inner.is_none() {
            return Err(Error::Domain("inner boundary value must be given exactly for annular domains".into()));
        }
        Ok(())
    }

    fn apply(&self, field: &mut RadialField) {
        let last = field.v.len() - 1;
        field.v[last] = self.outer;
        if let Some(inner) = self.inner {
            field.v[0] = inner;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// First blow-up boundary value of `v`.
    pub start: f64,
    /// Increment of the boundary value between stages (arithmetic in v, geometric in u).
    pub increment: f64,
    pub max_stages: usize,
    /// Stop once the core changes by less than this between stages (sup-norm in v).
    pub core_tol: f64,
    /// Core = nodes at distance ≥ core_fraction · L from every blow-up end.
    pub core_fraction: f64,
    /// When set, continue until the boundary value reaches exactly this
    /// value instead of stopping on the core criterion.
    pub target: Option<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            start: 10.0,
            increment: 1.0,
            max_stages: 80,
            core_tol: 1e-8,
            core_fraction: 0.1,
            target: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor.
    pub damping: f64,
    pub min_step: f64,
    pub margin_floor: f64,
    pub continuation: ContinuationConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iters: 200,
            damping: 0.5,
            min_step: 2f64.powi(-20),
            margin_floor: 1e-8,
            continuation: ContinuationConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.continuation;
        let positive = [
            self.newton_tol,
            self.damping,
            self.min_step,
            self.margin_floor,
            c.increment,
            c.core_tol,
            c.core_fraction,
        ];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.max_iters == 0 || c.max_stages == 0 {
            return Err(Error::Config("solver parameters must be positive".into()));
        }
        if self.damping >= 1.0 || self.min_step >= 1.0 || c.core_fraction >= 0.5 {
            return Err(Error::Config("damping and min_step must be < 1, core_fraction < 0.5".into()));
        }
        Ok(())
    }
}

/// Per-stage record of a continuation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub boundary_value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub margin: f64,
    /// Sup-norm change on the core relative to the previous stage.
    pub core_change: Option<f64>,
}

/// Nodewise ordering check across a sequence of fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    /// `true` for increasing sequences, `false` for decreasing.
    pub increasing: bool,
    pub pairs_checked: usize,
    pub tolerance: f64,
    /// Largest violation of the ordering (≤ 0 when strictly ordered).
    pub worst_violation: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub final_margin: f64,
    /// Residual level set by floating-point cancellation in the stencil.
    pub roundoff_floor: f64,
    pub stages: Vec<StageRecord>,
    pub monotonicity_certificates: Vec<MonotonicityCertificate>,
    pub cauchy_gap: Option<f64>,
    pub message: String,
    /// Wall-clock time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl SolveReport {
    fn empty() -> Self {
        Self {
            converged: false,
            iterations: 0,
            residual_history: Vec::new(),
            final_residual: f64::NAN,
            final_margin: f64::NAN,
            roundoff_floor: 0.0,
            stages: Vec::new(),
            monotonicity_certificates: Vec::new(),
            cauchy_gap: None,
            message: String::new(),
            elapsed_secs: 0.0,
        }
    }
}

/// Tridiagonal matrix; `lower[i] = J[i][i−1]`, `upper[i] = J[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numerical("zero pivot in tridiagonal solve at row 0".into()));
        }
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Numerical(format!("zero pivot in tridiagonal solve at row {i}")));
            }
            c[i] = self.upper[i] / denom;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// `e_j` of `(a ×ma, b ×mb)`; zero for negative `j`.
fn tb(a: f64, ma: usize, b: f64, mb: usize, j: isize) -> f64 {
    if j < 0 {
        return 0.0;
    }
    let j = j as usize;
    let lo = j.saturating_sub(mb);
    let hi = j.min(ma);
    (lo..=hi)
        .map(|i| binomial(ma, i) * binomial(mb, j - i) * a.powi(i as i32) * b.powi((j - i) as i32))
        .sum()
}

#[derive(Debug, Clone, Copy)]
struct NodeEval {
    g: f64,
    /// ∂g/∂(v_{i−1}, v_i, v_{i+1}).
    dg: [f64; 3],
    margin: f64,
}

#[allow(clippy::too_many_arguments)]
fn eval_node(spec: &EquationSpec, r: f64, hm: f64, hp: f64, vm: f64, v0: f64, vp: f64, center: bool) -> NodeEval {
    let n = spec.n;
    let k = spec.k as isize;
    let nf = n as f64;
    // λ_r, λ_t and their gradients in (v_{i−1}, v_i, v_{i+1})
    let (lr, lt, dlr, dlt) = if center {
        let c = 2.0 * (nf - 1.0) / (nf - 2.0);
        let d2 = 2.0 * (vp - v0) / (hp * hp);
        let w = [0.0, -2.0 * c / (hp * hp), 2.0 * c / (hp * hp)];
        (c * d2, c * d2, w, w)
    } else {
        let s = hm + hp;
        let d1 = (hm * hm * (vp - v0) + hp * hp * (v0 - vm)) / (hm * hp * s);
        let d2 = 2.0 / s * ((vp - v0) / hp - (v0 - vm) / hm);
        let w1 = [-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)];
        let w2 = [2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s)];
        let lap = d2 + (nf - 1.0) * d1 / r;
        let lr = d2 + lap / (nf - 2.0);
        let lt = d1 / r + lap / (nf - 2.0) + d1 * d1;
        let (r_d1, r_d2) = ((nf - 1.0) / ((nf - 2.0) * r), 1.0 + 1.0 / (nf - 2.0));
        let (t_d1, t_d2) = (1.0 / r + (nf - 1.0) / ((nf - 2.0) * r) + 2.0 * d1, 1.0 / (nf - 2.0));
        let dlr = [0, 1, 2].map(|j| r_d1 * w1[j] + r_d2 * w2[j]);
        let dlt = [0, 1, 2].map(|j| t_d1 * w1[j] + t_d2 * w2[j]);
        (lr, lt, dlr, dlt)
    };
    let scale = (nf - 2.0) * (-2.0 * v0).exp();
    let (xr, xt) = (scale * lr, scale * lt);
    let order = spec.cone_order().max(1);
    let margin = (1..=order)
        .map(|j| tb(xr, 1, xt, n - 1, j as isize) / binomial(n, j))
        .fold(f64::INFINITY, f64::min);
    let e = |j: isize| tb(xr, 1, xt, n - 1, j);
    // total derivatives of e_j with respect to the radial / tangential block
    let ea = |j: isize| tb(xr, 0, xt, n - 1, j - 1);
    let eb = |j: isize| (nf - 1.0) * tb(xr, 1, xt, n - 2, j - 1);
    let (g, ga, gb) = match &spec.mode {
        Mode::PureSigmaK => {
            let ek = e(k);
            if ek <= 0.0 {
                (-1.0, f64::NAN, f64::NAN)
            } else {
                let root = ek.powf(1.0 / k as f64);
                let f = root / (k as f64 * ek);
                (root - 1.0, f * ea(k), f * eb(k))
            }
        }
        Mode::General { alpha, alpha0 } => {
            let (a, a0) = (alpha.at_radius(r), alpha0.at_radius(r));
            let (ek, ek1) = (e(k), e(k - 1));
            let top = ek - a0;
            let q = |dk: f64, dk1: f64| (dk * ek1 - top * dk1) / (ek1 * ek1);
            (top / ek1 + a, q(ea(k), ea(k - 1)), q(eb(k), eb(k - 1)))
        }
    };
    let mut dg = [0, 1, 2].map(|j| scale * (ga * dlr[j] + gb * dlt[j]));
    dg[1] += -2.0 * (ga * xr + gb * xt);
    NodeEval { g, dg, margin }
}

/// Residuals, Jacobian and margins of a field. Dirichlet rows are identity with zero residual.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub residual: Vec<f64>,
    pub jacobian: Tridiagonal,
    /// Normalized Gårding margin of X per node; NaN at Dirichlet nodes.
    pub margins: Vec<f64>,
}

impl Assembly {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().filter(|m| !m.is_nan()).fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Node with the smallest margin.
    pub fn worst_node(&self) -> Option<usize> {
        self.margins
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_nan())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

/// Discrete residual and tridiagonal Jacobian.
///
/// Fails with a cone violation (carrying the worst node) when some node
/// falls outside the closed cone.
pub fn assemble(field: &RadialField, spec: &EquationSpec) -> Result<Assembly> {
    spec.validate()?;
    let asm = assemble_unchecked(field, spec);
    let worst = asm.min_margin();
    if worst < -CONE_BOUNDARY_TOL {
        return Err(Error::ConeViolation {
            margin: worst,
            node: asm.worst_node(),
        });
    }
    Ok(asm)
}

fn assemble_unchecked(field: &RadialField, spec: &EquationSpec) -> Assembly {
    let r = &field.mesh.nodes;
    let v = &field.v;
    let len = r.len();
    let mut jac = Tridiagonal::zeros(len);
    let mut residual = vec![0.0; len];
    let mut margins = vec![f64::NAN; len];
    for i in 0..len {
        if field.mesh.is_dirichlet(i) {
            jac.diag[i] = 1.0;
            continue;
        }
        let center = i == 0;
        let ev = if center {
            eval_node(spec, 0.0, r[1], r[1], v[1], v[0], v[1], true)
        } else {
            eval_node(spec, r[i], r[i] - r[i - 1], r[i + 1] - r[i], v[i - 1], v[i], v[i + 1], false)
        };
        residual[i] = ev.g;
        margins[i] = ev.margin;
        if !center {
            jac.lower[i] = ev.dg[0];
        }
        jac.diag[i] = ev.dg[1];
        jac.upper[i] = ev.dg[2];
    }
    Assembly {
        residual,
        jacobian: jac,
        margins,
    }
}

/// Residual at a Dirichlet-free field evaluated with the discrete operator.
pub fn residual_vector(field: &RadialField, spec: &EquationSpec) -> Result<Vec<f64>> {
    Ok(assemble(field, spec)?.residual)
}

/// Residual level set by cancellation: perturbing every `v_j` by one ulp.
fn roundoff_floor(field: &RadialField, asm: &Assembly) -> f64 {
    let v = &field.v;
    let j = &asm.jacobian;
    let mut floor: f64 = 0.0;
    for i in 0..v.len() {
        if field.mesh.is_dirichlet(i) {
            continue;
        }
        let mut s = j.diag[i].abs() * v[i].abs().max(1.0);
        if i > 0 {
            s += j.lower[i].abs() * v[i - 1].abs().max(1.0);
        }
        if i + 1 < v.len() {
            s += j.upper[i].abs() * v[i + 1].abs().max(1.0);
        }
        floor = floor.max(s);
    }
    2.0 * f64::EPSILON * floor
}

struct NewtonOutcome {
    field: RadialField,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
    margin: f64,
    floor: f64,
    message: String,
}

fn newton(mut field: RadialField, spec: &EquationSpec, cfg: &SolverConfig) -> Result<NewtonOutcome> {
    let mut asm = assemble(&field, spec)?;
    let margin0 = asm.min_margin();
    if margin0 < cfg.margin_floor {
        return Err(Error::ConeViolation {
            margin: margin0,
            node: asm.worst_node(),
        });
    }
    let mut norm = asm.residual_norm();
    let mut history = vec![norm];
    let mut floor = roundoff_floor(&field, &asm);
    let mut iterations = 0;
    loop {
        if norm <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                margin: asm.min_margin(),
                field,
                converged: true,
                iterations,
                history,
                floor,
                message: String::new(),
            });
        }
        if iterations >= cfg.max_iters {
            return Ok(NewtonOutcome {
                margin: asm.min_margin(),
                field,
                converged: false,
                iterations,
                history,
                floor,
                message: format!("iteration limit reached with residual {norm:.3e}"),
            });
        }
        let rhs: Vec<f64> = asm.residual.iter().map(|g| -g).collect();
        let step = asm.jacobian.solve(&rhs)?;
        let mut t = 1.0;
        let accepted = loop {
            let trial_v: Vec<f64> = field.v.iter().zip(&step).map(|(v, d)| v + t * d).collect();
            if trial_v.iter().all(|x| x.is_finite()) {
                let trial = RadialField {
                    mesh: field.mesh.clone(),
                    v: trial_v,
                };
                let trial_asm = assemble_unchecked(&trial, spec);
                let tn = trial_asm.residual_norm();
                if trial_asm.min_margin() >= cfg.margin_floor && tn < norm && tn.is_finite() {
                    break Some((trial, trial_asm, tn));
                }
            }
            t *= cfg.damping;
            if t < cfg.min_step {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, trial_asm, tn)) => {
                field = trial;
                asm = trial_asm;
                norm = tn;
                floor = roundoff_floor(&field, &asm);
                history.push(norm);
            }
            None => {
                // no decrease possible: fine if we already sit at the cancellation floor
                let at_floor = norm <= floor;
                return Ok(NewtonOutcome {
                    margin: asm.min_margin(),
                    field,
                    converged: at_floor,
                    iterations,
                    history,
                    floor,
                    message: if at_floor {
                        format!("stopped at cancellation floor {floor:.3e}")
                    } else {
                        format!("line search stalled with residual {norm:.3e}")
                    },
                });
            }
        }
    }
}

/// Solve the Dirichlet problem from an admissible initial field.
///
/// Accepted Newton iterates keep the margin above `margin_floor`; a field
/// failing that is never returned.
pub fn solve_dirichlet(
    initial: RadialField,
    data: &BoundaryData,
    spec: &EquationSpec,
    config: &SolverConfig,
) -> Result<(RadialField, SolveReport)> {
    let start = Instant::now();
    spec.validate()?;
    config.validate()?;
    data.check(&initial.mesh.domain)?;
    let mut field = initial;
    data.apply(&mut field);
    let out = newton(field, spec, config)?;
    let report = SolveReport {
        converged: out.converged,
        iterations: out.iterations,
        final_residual: *out.history.last().unwrap(),
        residual_history: out.history,
        final_margin: out.margin,
        roundoff_floor: out.floor,
        message: out.message,
        elapsed_secs: start.elapsed().as_secs_f64(),
        ..SolveReport::empty()
    };
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.final_residual,
            reason: report.message,
        });
    }
    Ok((out.field, report))
}

/// Glued strict subsolution sampled on the mesh; an admissible initializer.
/// Falls back to [`blowup_initial`] with value ends when the sampled
/// collar is not discretely admissible.
pub fn subsolution_field(mesh: &RadialMesh, data: &BoundaryData, spec: &EquationSpec) -> Result<RadialField> {
    data.check(&mesh.domain)?;
    let domain = match (mesh.domain, data.inner) {
        (Domain::Ball { radius }, _) => SubDomain::Ball {
            radius,
            phi: data.outer,
        },
        (Domain::Annulus { inner, outer }, Some(pi)) | (Domain::ExteriorTrunc { s: inner, r_out: outer }, Some(pi)) => {
            SubDomain::Annulus {
                inner,
                outer,
                phi_inner: pi,
                phi_outer: data.outer,
            }
        }
        _ => unreachable!("checked above"),
    };
    let config = SolverConfig::default();
    let report = dirichlet_subsolution(spec, domain, 0.1)?;
    let v: Result<Vec<f64>> = mesh.nodes.iter().map(|&r| report.profile.eval(r).map(|f| f[0])).collect();
    let mut field = RadialField::new(mesh.clone(), v?)?;
    data.apply(&mut field);
    if assemble_unchecked(&field, spec).min_margin() >= config.margin_floor {
        return Ok(field);
    }
    // the glued collar is too thin for this mesh
    let value = |v: Option<f64>| End::Value { v: v.unwrap_or(0.0) };
    let ends = Ends {
        inner: value(data.inner),
        outer: value(Some(data.outer)),
    };
    blowup_initial(mesh, &ends, data.outer, spec, &config)
}

/// Smoothed maximum of ball-type subsolutions `−ln(R² − r²) − C` (outer
/// end) and `−ln(r² − s²) − C` (inner end), with poles placed so each
/// matches its end value (`m` at blow-up ends). `C` grows until the sampled
/// field is admissible, preferring one with nonnegative discrete residual.
/// Wider smoothing is tried when the crossing of the two branches is
/// under-resolved. On long truncated exteriors the inner branch is only
/// marginally admissible far out, so a second pass steepens it by
/// `−δ ln(r/s)`, which buys a margin that the mesh cannot erase.
pub fn blowup_initial(mesh: &RadialMesh, ends: &Ends, m: f64, spec: &EquationSpec, config: &SolverConfig) -> Result<RadialField> {
    let (a, b) = mesh.domain.bounds();
    let data = ends.data(&mesh.domain, m);
    let mut fallback = None;
    let passes = [0.0, 0.5]
        .into_iter()
        .flat_map(|d| [0.1, 0.5, 2.0, 8.0].into_iter().map(move |e| (d, e)))
        .flat_map(|(d, e)| (0..60).map(move |s| (d, e, s)));
    for (delta, eps, step) in passes {
        if delta > 0.0 && data.inner.is_none() {
            break;
        }
        let c = -2.0 + 0.5 * step as f64;
        let outer_gap = (-data.outer - c).exp();
        let inner_gap = data.inner.map(|vi| (-vi - c).exp()).filter(|g| *g < a * a);
        if data.inner.is_some() && ends.inner == End::BlowUp && inner_gap.is_none() {
            continue;
        }
        let v: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|&r| {
                let x = -((b - r) * (b + r) + outer_gap).ln() - c;
                match inner_gap {
                    Some(g) => {
                        let y = -((r - a) * (r + a) + g).ln() - c - delta * (r / a).ln();
                        0.5 * (x + y) + 0.5 * smoothing_h(x - y, eps)[0]
                    }
                    None => x,
                }
            })
            .collect();
        let Ok(mut field) = RadialField::new(mesh.clone(), v) else {
            continue;
        };
        data.apply(&mut field);
        let asm = assemble_unchecked(&field, spec);
        if asm.min_margin() >= config.margin_floor {
            if asm.residual.iter().all(|g| *g >= 0.0) {
                return Ok(field);
            }
            fallback.get_or_insert(field);
        }
    }
    fallback.ok_or_else(|| {
        Error::Numerical(format!("no admissible blow-up initializer at boundary value {m}; the mesh may be too fine for this stage"))
    })
}

/// Condition at one end of a continuation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum End {
    BlowUp,
    Value { v: f64 },
}

/// End conditions for [`solve_blowup`]. `inner` is ignored on balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ends {
    pub inner: End,
    pub outer: End,
}

impl Ends {
    /// Blow-up at the natural ends of the domain: the sphere of a ball,
    /// both spheres of an annulus, the inner sphere of a truncated exterior
    /// (whose outer value must then be supplied separately).
    pub fn natural(domain: &Domain) -> Self {
        match domain {
            Domain::ExteriorTrunc { .. } => Ends {
                inner: End::BlowUp,
                outer: End::Value { v: 0.0 },
            },
            _ => Ends {
                inner: End::BlowUp,
                outer: End::BlowUp,
            },
        }
    }

    fn data(&self, domain: &Domain, m: f64) -> BoundaryData {
        let pick = |e: End| match e {
            End::BlowUp => m,
            End::Value { v } => v,
        };
        BoundaryData {
            inner: (!domain.has_center()).then(|| pick(self.inner)),
            outer: pick(self.outer),
        }
    }

    fn blowup_ends(&self, domain: &Domain) -> (bool, bool) {
        (
            !domain.has_center() && self.inner == End::BlowUp,
            self.outer == End::BlowUp,
        )
    }
}

/// Indices of the comparison core.
pub fn core_indices(mesh: &RadialMesh, ends: &Ends, fraction: f64) -> Vec<usize> {
    let (a, b) = mesh.domain.bounds();
    let gap = fraction * (b - a);
    let (bi, bo) = ends.blowup_ends(&mesh.domain);
    (0..mesh.len())
        .filter(|&i| {
            let r = mesh.nodes[i];
            (!bi || r - a >= gap) && (!bo || b - r >= gap)
        })
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64], idx: &[usize]) -> f64 {
    idx.iter().fold(0.0, |m, &i| m.max((a[i] - b[i]).abs()))
}

/// Blow-up solution by continuation in the boundary value.
///
/// Each stage raises the blow-up boundary value by the configured increment
/// and warm-starts from the previous stage, which is then a subsolution. On
/// a stall the increment is halved once. The run stops when the core
/// changes by less than `core_tol`; every stage must dominate the previous
/// one nodewise (to 1e−10 in v) or a maximum-principle violation is raised.
pub fn solve_blowup(
    mesh: &RadialMesh,
    spec: &EquationSpec,
    config: &SolverConfig,
    ends: &Ends,
) -> Result<(RadialField, SolveReport)> {
    let start = Instant::now();
    spec.validate()?;
    config.validate()?;
    let (bi, bo) = ends.blowup_ends(&mesh.domain);
    if !bi && !bo {
        return Err(Error::Domain("solve_blowup needs at least one blow-up end".into()));
    }
    let cont = &config.continuation;
    let core = core_indices(mesh, ends, cont.core_fraction);
    if core.is_empty() {
        return Err(Error::Domain("comparison core is empty".into()));
    }
    let mut m = cont.start;
    let data = ends.data(&mesh.domain, m);
    let initial = blowup_initial(mesh, ends, m, spec, config)?;
    let (mut field, first) = solve_dirichlet(initial, &data, spec, config)?;
    let mut report = SolveReport {
        iterations: first.iterations,
        residual_history: first.residual_history.clone(),
        ..SolveReport::empty()
    };
    report.stages.push(StageRecord {
        boundary_value: m,
        iterations: first.iterations,
        residual: first.final_residual,
        margin: first.final_margin,
        core_change: None,
    });
    let mut last = first;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut pairs = 0;
    let mut changes: Vec<f64> = Vec::new();
    let tol = 1e-10;
    let mut converged = false;
    for _ in 1..cont.max_stages {
        if cont.target.is_some_and(|t| m >= t) {
            converged = true;
            break;
        }
        let mut inc = match cont.target {
            Some(t) => cont.increment.min(t - m),
            None => cont.increment,
        };
        let mut halved = false;
        let (next, rep) = loop {
            let data = ends.data(&mesh.domain, m + inc);
            match solve_dirichlet(field.clone(), &data, spec, config) {
                Ok(ok) => break ok,
                Err(e @ (Error::NoConvergence { .. } | Error::ConeViolation { .. })) => {
                    if halved {
                        return Err(e);
                    }
                    halved = true;
                    inc *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        m += inc;
        let violation = next
            .v
            .iter()
            .zip(&field.v)
            .map(|(new, old)| old - new)
            .fold(f64::NEG_INFINITY, f64::max);
        worst_violation = worst_violation.max(violation);
        pairs += 1;
        if violation > tol {
            return Err(Error::MaximumPrinciple(format!(
                "stage with boundary value {m} lies below its predecessor by {violation:.3e}"
            )));
        }
        let change = sup_diff(&next.v, &field.v, &core);
        changes.push(change);
        report.iterations += rep.iterations;
        report.residual_history.extend(rep.residual_history.iter().skip(1));
        report.stages.push(StageRecord {
            boundary_value: m,
            iterations: rep.iterations,
            residual: rep.final_residual,
            margin: rep.final_margin,
            core_change: Some(change),
        });
        field = next;
        last = rep;
        if cont.target.is_none() && change < cont.core_tol {
            converged = true;
            break;
        }
    }
    report.monotonicity_certificates.push(MonotonicityCertificate {
        increasing: true,
        pairs_checked: pairs,
        tolerance: tol,
        worst_violation,
        holds: worst_violation <= tol,
    });
    // geometric tail bound from the last two core changes
    report.cauchy_gap = match changes.as_slice() {
        [.., p, q] if *p > 0.0 && q < p => Some(q * (q / p) / (1.0 - q / p)),
        [.., q] => Some(*q),
        [] => None,
    };
    report.converged = converged;
    report.final_residual = last.final_residual;
    report.final_margin = last.final_margin;
    report.roundoff_floor = last.roundoff_floor;
    report.message = if converged {
        format!("core settled at boundary value {m}")
    } else {
        format!("core still moving after {} stages", report.stages.len())
    };
    report.elapsed_secs = start.elapsed().as_secs_f64();
    if !converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: changes.last().copied().unwrap_or(f64::NAN),
            reason: report.message,
        });
    }
    Ok((field, report))
}

/// Outer condition of the exhausting annuli in [`solve_maximal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// Blow-up on both spheres: the maximal solution of each annulus.
    BlowUp,
    /// Exterior-ball closed form on the outer sphere (pure equation only).
    ClosedForm,
}

/// Mesh layout for exhaustion: a fixed core on `[s, r_core]` shared by all
/// annuli, followed by a tail reaching `R_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExhaustionConfig {
    pub r_core: f64,
    pub core_intervals: usize,
    pub tail_intervals: usize,
}

impl Default for ExhaustionConfig {
    fn default() -> Self {
        Self {
            r_core: 5.0,
            core_intervals: 1200,
            tail_intervals: 800,
        }
    }
}

/// Result of an exhaustion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub radii: Vec<f64>,
    pub stage_reports: Vec<SolveReport>,
    /// Sup-norm difference in v on the core between successive annuli.
    pub cauchy_gaps: Vec<f64>,
    pub monotonicity: MonotonicityCertificate,
    /// Smallest u over the core of the last field.
    pub core_min_u: f64,
    pub converged: bool,
}

pub fn exhaustion_mesh(s: f64, big_r: f64, ex: &ExhaustionConfig, both: bool) -> Result<RadialMesh> {
    let core_domain = Domain::ExteriorTrunc { s, r_out: ex.r_core };
    let core = build_mesh(
        core_domain,
        ex.core_intervals,
        Grading::BoundaryClustered {
            inner: true,
            outer: false,
            layer_fraction: 0.35,
            min_scale: 1e-9,
        },
    )?;
    let tail_domain = Domain::ExteriorTrunc { s: ex.r_core, r_out: big_r };
    let tail = build_mesh(
        tail_domain,
        ex.tail_intervals,
        if both {
            Grading::BoundaryClustered {
                inner: false,
                outer: true,
                layer_fraction: 0.35,
                min_scale: 1e-9,
            }
        } else {
            Grading::Logarithmic
        },
    )?;
    let mut nodes = core.nodes;
    nodes.extend(tail.nodes.into_iter().skip(1));
    RadialMesh::from_nodes(Domain::ExteriorTrunc { s, r_out: big_r }, core.grading, nodes)
}

/// Maximal solution outside `B_s` by exhaustion with annuli `{s < r < R_j}`.
///
/// All annuli share the core nodes on `[s, r_core]`, where the sequence should
/// decrease nodewise (to 1e−10 in v). A violation is reported in the
/// monotonicity certificate rather than as an error. With closed-form outer
/// data the continuum sequence is constant, so only discretization noise is
/// compared.
pub fn solve_maximal(
    s: f64,
    radii: &[f64],
    spec: &EquationSpec,
    config: &SolverConfig,
    exhaustion: &ExhaustionConfig,
    outer: OuterBoundary,
) -> Result<(Vec<RadialField>, MaximalReport)> {
    spec.validate()?;
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= exhaustion.r_core || exhaustion.r_core <= s {
        return Err(Error::Domain("radii must increase and exceed r_core > s".into()));
    }
    if outer == OuterBoundary::ClosedForm && spec.mode != Mode::PureSigmaK {
        return Err(Error::Domain("closed-form outer data exists only for the pure equation".into()));
    }
    let n_core = exhaustion.core_intervals + 1;
    let mut fields = Vec::new();
    let mut reports = Vec::new();
    let mut gaps = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let tol = 1e-10;
    let mut final_value = None;
    for &big_r in radii {
        let mesh = exhaustion_mesh(s, big_r, exhaustion, outer == OuterBoundary::BlowUp)?;
        let ends = match outer {
            OuterBoundary::BlowUp => Ends {
                inner: End::BlowUp,
                outer: End::BlowUp,
            },
            OuterBoundary::ClosedForm => {
                let prof = crate::closed_forms::exterior_ball(spec.n, spec.k, s, &[])?;
                let u = prof.eval(big_r)?[0];
                Ends {
                    inner: End::BlowUp,
                    outer: End::Value {
                        v: 2.0 / (spec.n as f64 - 2.0) * u.ln(),
                    },
                }
            }
        };
        let mut cfg = *config;
        // the core sits next to the inner end only
        cfg.continuation.core_fraction = cfg.continuation.core_fraction.min(0.05 * (exhaustion.r_core - s) / (big_r - s));
        // every annulus ends at the blow-up value reached by the first one
        cfg.continuation.target = cfg.continuation.target.or(final_value);
        let (field, rep) = solve_blowup(&mesh, spec, &cfg, &ends)?;
        final_value = rep.stages.last().map(|st| st.boundary_value);
        if let Some(prev) = fields.last() {
            let prev: &RadialField = prev;
            let viol = (0..n_core).map(|i| field.v[i] - prev.v[i]).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(viol);
            let idx: Vec<usize> = (0..n_core).filter(|&i| field.mesh.nodes[i] >= s + 0.1 * (exhaustion.r_core - s)).collect();
            gaps.push(sup_diff(&field.v, &prev.v, &idx));
        }
        fields.push(field);
        reports.push(rep);
    }
    let last = fields.last().unwrap();
    let h = (spec.n as f64 - 2.0) / 2.0;
    let core_min_u = (0..n_core)
        .filter(|&i| last.mesh.nodes[i] >= s + 0.1 * (exhaustion.r_core - s))
        .map(|i| (h * last.v[i]).exp())
        .fold(f64::INFINITY, f64::min);
    let monotonicity = MonotonicityCertificate {
        increasing: false,
        pairs_checked: radii.len() - 1,
        tolerance: tol,
        worst_violation: worst,
        holds: worst <= tol,
    };
    let report = MaximalReport {
        radii: radii.to_vec(),
        stage_reports: reports,
        cauchy_gaps: gaps,
        converged: monotonicity.holds,
        monotonicity,
        core_min_u,
    };
    Ok((fields, report))
}

/// Order estimate from three solves on nested meshes (N, 2N, 4N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub order: f64,
    /// Errors (oracle) or successive differences (self-convergence).
    pub errors: [f64; 3],
    pub self_convergence: bool,
}

/// Observed convergence order.
///
/// With an oracle, errors are sup-norm deviations of `v` on nodes with
/// `r ∈ window` and the order is `log₂(e₂/e₃)`. Without one, differences
/// between consecutive levels on the coarse nodes give `log₂(d₁/d₂)`.
pub fn estimate_order(
    fields: [&RadialField; 3],
    oracle: Option<&dyn Fn(f64) -> f64>,
    window: Option<(f64, f64)>,
) -> Result<OrderEstimate> {
    let n0 = fields[0].mesh.intervals();
    for (level, f) in fields.iter().enumerate() {
        if f.mesh.intervals() != n0 << level {
            return Err(Error::Domain("meshes must have N, 2N and 4N intervals".into()));
        }
        for (j, &r) in fields[0].mesh.nodes.iter().enumerate() {
            let fine = f.mesh.nodes[j << level];
            if (fine - r).abs() > 1e-12 * r.abs().max(1.0) {
                return Err(Error::Domain("meshes are not nested".into()));
            }
        }
    }
    let in_window = |r: f64| window.is_none_or(|(lo, hi)| r >= lo && r <= hi);
    match oracle {
        Some(exact) => {
            let mut errors = [0.0; 3];
            for (level, f) in fields.iter().enumerate() {
                errors[level] = f
                    .mesh
                    .nodes
                    .iter()
                    .zip(&f.v)
                    .filter(|(r, _)| in_window(**r))
                    .fold(0.0, |m: f64, (&r, &v)| m.max((v - exact(r)).abs()));
            }
            Ok(OrderEstimate {
                order: (errors[1] / errors[2]).log2(),
                errors,
                self_convergence: false,
            })
        }
        None => {
            let mut d = [0.0f64; 2];
            for (j, &r) in fields[0].mesh.nodes.iter().enumerate() {
                if !in_window(r) {
                    continue;
                }
                d[0] = d[0].max((fields[0].v[j] - fields[1].v[2 * j]).abs());
                d[1] = d[1].max((fields[1].v[2 * j] - fields[2].v[4 * j]).abs());
            }
            Ok(OrderEstimate {
                order: (d[0] / d[1]).log2(),
                errors: [d[0], d[1], f64::NAN],
                self_convergence: true,
            })
        }
    }
}

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV dump with columns `r,v,u,margin,residual` at 17 significant digits.
/// Margin and residual are `nan` at Dirichlet nodes.
pub fn write_csv(field: &RadialField, spec: &EquationSpec, out: &mut impl std::io::Write) -> Result<()> {
    let asm = assemble_unchecked(field, spec);
    let u = field.u(spec.n);
    let io = |e: std::io::Error| Error::Numerical(format!("csv write failed: {e}"));
    writeln!(out, "r,v,u,margin,residual").map_err(io)?;
    for i in 0..field.v.len() {
        let res = if field.mesh.is_dirichlet(i) { f64::NAN } else { asm.residual[i] };
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(field.mesh.nodes[i]),
            fmt17(field.v[i]),
            fmt17(u[i]),
            fmt17(asm.margins[i]),
            fmt17(res)
        )
        .map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_ball_mesh() {
        let m = build_mesh(Domain::Ball { radius: 1.0 }, 16, Grading::Uniform).unwrap();
        for (j, r) in m.nodes.iter().enumerate() {
            assert_eq!(*r, j as f64 / 16.0);
        }
        assert!(build_mesh(Domain::Ball { radius: 1.0 }, 15, Grading::Uniform).is_err());
        assert!(build_mesh(Domain::Annulus { inner: 2.0, outer: 1.0 }, 32, Grading::Uniform).is_err());
    }

    #[test]
    fn clustered_annulus_contract() {
        let d = Domain::Annulus { inner: 1.0, outer: 2.0 };
        let m = build_mesh(d, 16, Grading::clustered(&d)).unwrap();
        let near_in = m.nodes.iter().filter(|&&r| r <= 1.05).count();
        let near_out = m.nodes.iter().filter(|&&r| r >= 1.95).count();
        assert!(near_in >= 4 && near_out >= 4, "{near_in} {near_out}");
    }

    #[test]
    fn exterior_log_mesh() {
        let d = Domain::ExteriorTrunc { s: 1.0, r_out: 100.0 };
        let m = build_mesh(d, 64, Grading::Logarithmic).unwrap();
        let ratios: Vec<f64> = m.nodes.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|q| (q - ratios[0]).abs() < 1e-12));
    }

    #[test]
    fn thomas_solves() {
        let mut t = Tridiagonal::zeros(4);
        t.diag = vec![4.0, 4.0, 4.0, 4.0];
        t.lower = vec![0.0, 1.0, 1.0, 1.0];
        t.upper = vec![1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| t.get(i, j) * x[j]).sum()).collect();
        let sol = t.solve(&b).unwrap();
        for (a, e) in sol.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn two_block_elementary() {
        // (2, 3, 3): e_2 = 6 + 6 + 9 = 21
        assert_eq!(tb(2.0, 1, 3.0, 2, 2), 21.0);
        assert_eq!(tb(2.0, 1, 3.0, 2, 0), 1.0);
        assert_eq!(tb(2.0, 1, 3.0, 2, -1), 0.0);
        assert_eq!(tb(2.0, 0, 3.0, 2, 2), 9.0);
    }

    #[test]
    fn constant_field_residual() {
        let spec = EquationSpec::pure(4, 2).unwrap();
        let mesh = build_mesh(Domain::Annulus { inner: 1.0, outer: 2.0 }, 16, Grading::Uniform).unwrap();
        let field = RadialField::from_fn(mesh, |_| 0.3).unwrap();
        let asm = assemble_unchecked(&field, &spec);
        assert!(asm.residual[1..16].iter().all(|g| *g == -1.0));
        assert!(assemble(&field, &spec).is_ok());
    }
}
