//! Boundary regularity by codimension, and growth-rate fits near blow-up ends.

use serde::{Deserialize, Serialize};

use crate::closed_forms::growth_constant;
use crate::error::{Error, Result};
use crate::radial::RadialField;
use crate::symfun::{binomial, cone_position, two_block_sigmas, vm_vector, ConePosition, CONE_BOUNDARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Regular,
    Borderline,
    NotRegular,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Regular => "Regular",
            Verdict::Borderline => "Borderline",
            Verdict::NotRegular => "NotRegular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// σ_j(v_m) for j = 1..=k.
    pub vm_sigma: Vec<f64>,
    pub verdict: Verdict,
}

impl RegularityVerdict {
    /// Borderline cases are unresolved and carry an explicit marker.
    pub fn is_open(&self) -> bool {
        self.verdict == Verdict::Borderline
    }
}

/// Cone position of `v_m` in Γ_k.
pub fn classify(n: usize, m: usize, k: usize) -> Result<RegularityVerdict> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    let vm = vm_vector(n, m)?;
    let vm_sigma = two_block_sigmas(&vm, k)?;
    let margin = vm_sigma
        .iter()
        .enumerate()
        .map(|(j, s)| s / binomial(n, j + 1))
        .fold(f64::INFINITY, f64::min);
    let verdict = match cone_position(margin, CONE_BOUNDARY_TOL) {
        ConePosition::Interior => Verdict::Regular,
        ConePosition::Boundary => Verdict::Borderline,
        ConePosition::Exterior => Verdict::NotRegular,
    };
    Ok(RegularityVerdict {
        n,
        m,
        k,
        vm_sigma,
        verdict,
    })
}

/// `((n−1) C(n,k)^{1/k})^{(n−2)/4}`.
pub fn growth_coefficient(n: usize, k: usize) -> Result<f64> {
    if n < 3 || k == 0 || k > n {
        return Err(Error::Domain(format!("invalid (n, k) = ({n}, {k})")));
    }
    Ok(growth_constant(n, k))
}

/// Which end of the radial domain the fit looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitEnd {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Extrapolated value of `ρ^{n/2−1} u` at ρ = 0.
    pub estimate: f64,
    pub slope: f64,
    /// RMS deviation of the data from the fitted line.
    pub fit_residual: f64,
    pub nodes: usize,
    pub window: (f64, f64),
}

/// Default window in ρ, as fractions of the domain length.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e-3, 2e-2);

/// Least-squares fit of `ρ^{n/2−1} u ≈ a + bρ` over `ρ ∈ window`
/// (absolute distances; defaults to [`DEFAULT_FIT_WINDOW`] × length).
pub fn fit_growth(field: &RadialField, n: usize, end: FitEnd, window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let (a, b) = field.mesh.domain.bounds();
    let len = b - a;
    let (lo, hi) = window.unwrap_or((DEFAULT_FIT_WINDOW.0 * len, DEFAULT_FIT_WINDOW.1 * len));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("bad fit window ({lo}, {hi})")));
    }
    let p = n as f64 / 2.0 - 1.0;
    let u = field.u(n);
    let pts: Vec<(f64, f64, f64)> = field
        .mesh
        .nodes
        .iter()
        .zip(&u)
        .filter_map(|(&r, &u)| {
            let rho = match end {
                FitEnd::Inner => r - a,
                FitEnd::Outer => b - r,
            };
            (rho >= lo && rho <= hi).then_some((rho, rho.powf(p) * u, u))
        })
        .collect();
    if pts.len() < 8 {
        return Err(Error::Domain(format!(
            "only {} nodes in fit window ({lo:.3e}, {hi:.3e}); need 8",
            pts.len()
        )));
    }
    // a blow-up end has u growing like ρ^{1−n/2} across the window
    let (near, far) = (
        pts.iter().min_by(|x, y| x.0.total_cmp(&y.0)).unwrap(),
        pts.iter().max_by(|x, y| x.0.total_cmp(&y.0)).unwrap(),
    );
    if near.2 / far.2 < 0.5 * (far.0 / near.0).powf(p) {
        return Err(Error::Domain("field does not diverge toward the chosen end".into()));
    }
    let cnt = pts.len() as f64;
    let mx = pts.iter().map(|t| t.0).sum::<f64>() / cnt;
    let my = pts.iter().map(|t| t.1).sum::<f64>() / cnt;
    let sxx: f64 = pts.iter().map(|t| (t.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
    let slope = sxy / sxx;
    let estimate = my - slope * mx;
    let fit_residual = (pts.iter().map(|t| (t.1 - estimate - slope * t.0).powi(2)).sum::<f64>() / cnt).sqrt();
    Ok(GrowthFit {
        estimate,
        slope,
        fit_residual,
        nodes: pts.len(),
        window: (lo, hi),
    })
}

/// Verdicts for all valid `(n, m, k)` in the given inclusive ranges.
pub fn verdict_table(
    ns: std::ops::RangeInclusive<usize>,
    ms: std::ops::RangeInclusive<usize>,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<Vec<RegularityVerdict>> {
    let mut out = Vec::new();
    for n in ns {
        if n < 3 {
            continue;
        }
        for m in ms.clone().filter(|&m| m >= 1 && m <= n) {
            for k in ks.clone().filter(|&k| k >= 1 && k <= n) {
                out.push(classify(n, m, k)?);
            }
        }
    }
    Ok(out)
}

/// CSV with columns `n,m,k,verdict,open,sigma` (σ_j joined by `;`).
pub fn verdict_csv(rows: &[RegularityVerdict]) -> String {
    let mut s = String::from("n,m,k,verdict,open,sigma\n");
    for v in rows {
        let sig: Vec<String> = v.vm_sigma.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.n,
            v.m,
            v.k,
            v.verdict.label(),
            if v.is_open() { "OPEN" } else { "" },
            sig.join(";")
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = classify(5, 2, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Regular);
        assert_eq!(r.vm_sigma, vec![12.0, 54.0]);
        let nr = classify(4, 3, 2).unwrap();
        assert_eq!(nr.verdict, Verdict::NotRegular);
        assert_eq!(nr.vm_sigma[1], -2.0);
        let b = classify(4, 3, 1).unwrap();
        assert_eq!(b.verdict, Verdict::Borderline);
        assert!(b.is_open());
    }

    #[test]
    fn growth_examples() {
        assert!((growth_coefficient(3, 1).unwrap() - 6f64.powf(0.25)).abs() < 1e-15);
        assert!((growth_coefficient(4, 1).unwrap() - 12f64.sqrt()).abs() < 1e-14);
        assert!((growth_coefficient(5, 2).unwrap() - 6.7073).abs() < 1e-4);
        assert!(growth_coefficient(2, 1).is_err());
    }

    #[test]
    fn csv_marks_open_rows() {
        let rows = verdict_table(4..=4, 3..=3, 1..=1).unwrap();
        let csv = verdict_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().starts_with("4,3,1,Borderline,OPEN,"));
    }
}
