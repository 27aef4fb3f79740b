//! JSON experiment configs. Every record rejects unknown keys and carries `"schema": 1`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use kricci::closed_forms::BallSide;
use kricci::conformal::EquationSpec;
use kricci::radial::{Domain, Ends, ExhaustionConfig, Grading, OuterBoundary, SolverConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

fn schema() -> u32 {
    SCHEMA
}

/// Configs that carry a schema version.
pub trait Versioned {
    fn schema(&self) -> u32;
}

/// Parse a config file, or fall back to the default when no path is given.
pub fn load<T: DeserializeOwned + Default + Versioned>(path: Option<&Path>) -> Result<T> {
    let cfg: T = match path {
        None => T::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
    };
    if cfg.schema() != SCHEMA {
        bail!("unsupported schema {} (expected {SCHEMA})", cfg.schema());
    }
    Ok(cfg)
}

/// First 16 hex digits of SHA-256 over the canonical JSON of `(config, seed)`.
pub fn config_hash<T: Serialize>(config: &T, seed: u64) -> String {
    let bytes = serde_json::to_vec(&(config, seed)).expect("configs serialize");
    let digest = Sha256::digest(&bytes);
    format!("{digest:x}")[..16].to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralCoefficients {
    pub alpha: f64,
    pub alpha0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub n: usize,
    pub k: usize,
    /// Constant coefficients of `σ_k + ασ_{k−1} = α₀`; absent for the pure equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralCoefficients>,
}

impl EquationConfig {
    pub fn spec(&self) -> Result<EquationSpec> {
        Ok(match self.general {
            None => EquationSpec::pure(self.n, self.k)?,
            Some(g) => EquationSpec::general(self.n, self.k, g.alpha, g.alpha0)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    ExteriorTrunc { s: f64, r_out: f64 },
}

impl From<DomainConfig> for Domain {
    fn from(d: DomainConfig) -> Self {
        match d {
            DomainConfig::Ball { radius } => Domain::Ball { radius },
            DomainConfig::Annulus { inner, outer } => Domain::Annulus { inner, outer },
            DomainConfig::ExteriorTrunc { s, r_out } => Domain::ExteriorTrunc { s, r_out },
        }
    }
}

/// Dirichlet data: explicit values of `v`, or traces of a ball-type closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Values {
        #[serde(default)]
        inner: Option<f64>,
        outer: f64,
    },
    ClosedForm { side: BallSide, s: f64 },
}

fn default_intervals() -> usize {
    2000
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_growth_tolerance() -> f64 {
    0.02
}

fn default_s() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Dirichlet {
        domain: DomainConfig,
        boundary: BoundaryConfig,
        #[serde(default = "default_intervals")]
        intervals: usize,
        #[serde(default)]
        grading: Option<Grading>,
        /// Also solve at N/4 and N/2 and estimate the convergence order.
        #[serde(default)]
        order_check: bool,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    Blowup {
        domain: DomainConfig,
        #[serde(default = "default_intervals")]
        intervals: usize,
        #[serde(default)]
        grading: Option<Grading>,
        #[serde(default)]
        ends: Option<Ends>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_growth_tolerance")]
        growth_tolerance: f64,
    },
    Maximal {
        #[serde(default = "default_s")]
        s: f64,
        radii: Vec<f64>,
        #[serde(default)]
        exhaustion: ExhaustionConfig,
        #[serde(default = "default_outer")]
        outer: OuterBoundary,
    },
}

fn default_outer() -> OuterBoundary {
    OuterBoundary::BlowUp
}

/// One solve, without the schema tag (shared by `solve` and `sweep`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub equation: EquationConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "schema")]
    pub schema: u32,
    pub equation: EquationConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl SolveConfig {
    pub fn job(&self) -> SolveJob {
        SolveJob {
            equation: self.equation,
            problem: self.problem.clone(),
            solver: self.solver,
        }
    }
}

impl Default for SolveConfig {
    /// Blow-up solve on the unit ball for `n = 3, k = 1`.
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            equation: EquationConfig { n: 3, k: 1, general: None },
            problem: ProblemConfig::Blowup {
                domain: DomainConfig::Ball { radius: 1.0 },
                intervals: default_intervals(),
                grading: None,
                ends: None,
                tolerance: default_tolerance(),
                growth_tolerance: default_growth_tolerance(),
            },
            solver: SolverConfig::default(),
        }
    }
}

impl Versioned for SolveConfig {
    fn schema(&self) -> u32 {
        self.schema
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "schema")]
    pub schema: u32,
    /// Problem and solver settings shared by every case.
    pub base: SolveJob,
    /// Equations to run; each replaces `base.equation`.
    pub cases: Vec<EquationConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let base = SolveConfig::default().job();
        let cases = [(3, 1), (4, 1), (4, 2), (5, 2)]
            .into_iter()
            .map(|(n, k)| EquationConfig { n, k, general: None })
            .collect();
        Self { schema: SCHEMA, base, cases }
    }
}

impl Versioned for SweepConfig {
    fn schema(&self) -> u32 {
        self.schema
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiCase {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub a: f64,
    /// The product `a·b`.
    pub ab: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    pub dims: Vec<usize>,
    /// `[ε, δ]` pairs for the collar barriers.
    pub collars: Vec<[f64; 2]>,
    pub window_samples: usize,
    pub codim_phi: bool,
    pub psi: Vec<PsiCase>,
    pub glued: bool,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 5],
            collars: vec![[1e-3, 5e-2], [1e-4, 1e-2]],
            window_samples: 300,
            codim_phi: true,
            psi: vec![PsiCase { n: 4, k: 2, m: 3, a: 0.1, ab: 1.05 }],
            glued: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub schema: u32,
    /// Inclusive range of dimensions for the closed-form checks.
    pub dims: [usize; 2],
    /// Sample points per closed form.
    pub samples: usize,
    pub general: Vec<GeneralCoefficients>,
    pub residual_tol: f64,
    /// Multiplies the constant of every ball solution; anything but 1 must fail.
    pub constant_factor: f64,
    pub exact: bool,
    pub barriers: Option<BarrierConfig>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            dims: [3, 8],
            samples: 200,
            general: vec![
                GeneralCoefficients { alpha: -1.0, alpha0: 2.0 },
                GeneralCoefficients { alpha: 0.5, alpha0: 3.0 },
            ],
            residual_tol: 1e-9,
            constant_factor: 1.0,
            exact: true,
            barriers: Some(BarrierConfig::default()),
        }
    }
}

impl Versioned for VerifyConfig {
    fn schema(&self) -> u32 {
        self.schema
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub schema: u32,
    pub n: [usize; 2],
    /// Defaults to `1..=n` for each `n`.
    pub m: Option<[usize; 2]>,
    pub k: [usize; 2],
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            n: [3, 10],
            m: None,
            k: [1, 1],
        }
    }
}

impl Versioned for ClassifyConfig {
    fn schema(&self) -> u32 {
        self.schema
    }
}
