//! Method-of-moments estimators of the area-effect variance `ψ` and their
//! second-order asymptotic moments under non-normality.
//!
//! Two classical estimators are implemented:
//!
//! * **Prasad-Rao (PR)**: closed-form moment matching on OLS residuals,
//!   `ψ̂ = max{0, (m−p)⁻¹ Σ_j [(Y_j − x_jᵀβ̂_OLS)² − (1 − h_jj) D_j]}`.
//! * **Fay-Herriot (FH)**: the root of the weighted moment equation
//!   `A(ψ) = (m−p)⁻¹ Σ_j (Y_j − x_jᵀβ̂(ψ))²/(ψ + D_j) − 1 = 0`,
//!   truncated at zero when `A(0) ≤ 0`.
//!
//! [`psi_moments`] provides the large-`m` bias and variance of either
//! estimator, split into a normality-based part and a kurtosis correction;
//! these feed the MSPE estimators downstream.

use crate::error::{Error, Result};
use crate::model::{self, AreaDataset};

/// Which moment estimator of `ψ` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMethod {
    /// Prasad-Rao simple method of moments (OLS residuals).
    PrasadRao,
    /// Fay-Herriot weighted method of moments (iterative).
    FayHerriot,
}

impl std::fmt::Display for PsiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiMethod::PrasadRao => write!(f, "pr"),
            PsiMethod::FayHerriot => write!(f, "fh"),
        }
    }
}

/// Controls for the FH root finder.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Maximum admissible `|A(ψ̂)|` at the returned root.
    pub abs_tolerance: f64,
    /// Cap on bracket-growth plus bisection steps.
    pub max_iterations: u32,
    /// Factor by which the upper bracket grows while `A` stays positive.
    pub bracket_growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tolerance: 1e-10,
            max_iterations: 200,
            bracket_growth: 10.0,
        }
    }
}

/// An estimated variance component with solver diagnostics.
#[derive(Debug, Clone)]
pub struct PsiEstimate {
    /// The (truncated) estimate, `≥ 0`.
    pub value: f64,
    /// Estimator that produced it.
    pub method: PsiMethod,
    /// Whether truncation at zero was applied (the untruncated solution was
    /// strictly negative / the moment equation had no positive root).
    pub truncated: bool,
    /// Root-finder iterations (0 for the closed-form PR estimator).
    pub iterations: u32,
    /// Final moment-equation residual `A(ψ̂)` (0 for PR).
    pub residual: f64,
}

/// Estimate `ψ` by the requested method.
pub fn estimate_psi(
    data: &AreaDataset,
    method: PsiMethod,
    cfg: &SolverConfig,
) -> Result<PsiEstimate> {
    match method {
        PsiMethod::PrasadRao => estimate_psi_pr(data),
        PsiMethod::FayHerriot => estimate_psi_fh_masked(data, None, cfg),
    }
}

/// Prasad-Rao moment estimator (closed form).
pub fn estimate_psi_pr(data: &AreaDataset) -> Result<PsiEstimate> {
    let fit = model::fit_ols(data)?;
    let m = data.m() as f64;
    let p = data.p() as f64;
    let mut sum = 0.0;
    for j in 0..data.m() {
        sum += fit.residuals[j] * fit.residuals[j] - (1.0 - fit.leverages[j]) * data.d()[j];
    }
    let raw = sum / (m - p);
    Ok(PsiEstimate {
        value: raw.max(0.0),
        method: PsiMethod::PrasadRao,
        truncated: raw < 0.0,
        iterations: 0,
        residual: 0.0,
    })
}

/// Fay-Herriot weighted moment-equation residual
/// `A(ψ) = (m−p)⁻¹ Σ_j (Y_j − x_jᵀβ̂(ψ))²/(ψ + D_j) − 1`.
pub fn fh_moment_residual(data: &AreaDataset, psi: f64) -> Result<f64> {
    fh_residual_masked(data, psi, None)
}

fn fh_residual_masked(data: &AreaDataset, psi: f64, skip: Option<usize>) -> Result<f64> {
    let fit = model::fit_gls_masked(data, psi, skip)?;
    let mut m_active = 0usize;
    let mut sum = 0.0;
    for j in 0..data.m() {
        if skip == Some(j) {
            continue;
        }
        m_active += 1;
        let r = data.y()[j] - model::dot(data.x_row(j), &fit.beta);
        sum += r * r / (psi + data.d()[j]);
    }
    let dof = m_active as f64 - data.p() as f64;
    if dof <= 0.0 {
        return Err(Error::InvalidDataset(format!(
            "no residual degrees of freedom (active areas {m_active}, p {})",
            data.p()
        )));
    }
    Ok(sum / dof - 1.0)
}

/// Fay-Herriot estimator by bracketed bisection, optionally with one area
/// deleted (the jackknife path). Returns zero (flagged truncated) when the
/// moment equation is already non-positive at `ψ = 0`.
pub(crate) fn estimate_psi_fh_masked(
    data: &AreaDataset,
    skip: Option<usize>,
    cfg: &SolverConfig,
) -> Result<PsiEstimate> {
    let a0 = fh_residual_masked(data, 0.0, skip)?;
    if a0 <= 0.0 {
        return Ok(PsiEstimate {
            value: 0.0,
            method: PsiMethod::FayHerriot,
            truncated: a0 < 0.0,
            iterations: 0,
            residual: a0,
        });
    }

    // Initial upper bracket: the average squared OLS residual. A(ψ) < 0 is
    // guaranteed for large enough ψ because A → −1 as ψ → ∞.
    let ols = model::fit_ols(data)?;
    let mut hi = ols
        .residuals
        .iter()
        .enumerate()
        .filter(|(j, _)| skip != Some(*j))
        .map(|(_, r)| r * r)
        .sum::<f64>()
        / data.m() as f64;
    if hi <= 0.0 {
        hi = 1.0;
    }
    let mut iterations = 0u32;
    let mut a_hi = fh_residual_masked(data, hi, skip)?;
    while a_hi > 0.0 {
        iterations += 1;
        if iterations >= cfg.max_iterations {
            return Err(Error::SolverFailure(format!(
                "failed to bracket the moment-equation root after {} growths (A({hi:.3e}) = {a_hi:.3e})",
                iterations
            )));
        }
        hi *= cfg.bracket_growth;
        a_hi = fh_residual_masked(data, hi, skip)?;
    }

    // Bisect to machine width, tracking the midpoint with the smallest |A|.
    let mut lo = 0.0_f64; // A(lo) > 0
    let mut best = (hi, a_hi.abs());
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;
        let a_mid = fh_residual_masked(data, mid, skip)?;
        if a_mid.abs() < best.1 {
            best = (mid, a_mid.abs());
        }
        if a_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * mid.max(1.0) {
            break;
        }
    }
    let residual = fh_residual_masked(data, best.0, skip)?;
    if residual.abs() > cfg.abs_tolerance {
        return Err(Error::SolverFailure(format!(
            "moment-equation residual {residual:.3e} above tolerance {:.1e} after {} iterations",
            cfg.abs_tolerance, iterations
        )));
    }
    Ok(PsiEstimate {
        value: best.0,
        method: PsiMethod::FayHerriot,
        truncated: false,
        iterations,
        residual,
    })
}

/// Second-order moments of a `ψ` estimator, split into the normality-based
/// part and the kurtosis corrections.
///
/// `bias ≈ bias_n + alpha` (identically zero for PR), and
/// `var ≈ var_n + eta`. All four pieces are evaluated at the supplied `ψ`
/// and area-effect excess kurtosis `κ_v`; sampling-error kurtoses come from
/// the dataset.
#[derive(Debug, Clone, Copy)]
pub struct PsiMoments {
    /// Normality-based bias term (FH only; 0 for PR).
    pub bias_n: f64,
    /// Kurtosis correction to the bias (FH only; 0 for PR).
    pub alpha: f64,
    /// Normality-based variance term.
    pub var_n: f64,
    /// Kurtosis correction to the variance.
    pub eta: f64,
}

impl PsiMoments {
    /// Total second-order bias.
    pub fn bias(&self) -> f64 {
        self.bias_n + self.alpha
    }

    /// Total second-order variance.
    pub fn variance(&self) -> f64 {
        self.var_n + self.eta
    }
}

/// Power sums over the marginal variances `s_j = ψ + D_j` shared by the
/// moment formulas.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SigmaTraces {
    /// Σ 1/s_j
    pub t1: f64,
    /// Σ 1/s_j²
    pub t2: f64,
    /// Σ 1/s_j³
    pub t3: f64,
    /// Σ s_j²
    pub ts2: f64,
    /// Σ D_j² κ_{e,j}
    pub d2f: f64,
    /// Σ D_j² κ_{e,j} / s_j²
    pub d2f2: f64,
    /// Σ D_j² κ_{e,j} / s_j³
    pub d2f3: f64,
}

impl SigmaTraces {
    pub(crate) fn new(data: &AreaDataset, psi: f64) -> Self {
        let mut t = Self {
            t1: 0.0,
            t2: 0.0,
            t3: 0.0,
            ts2: 0.0,
            d2f: 0.0,
            d2f2: 0.0,
            d2f3: 0.0,
        };
        for j in 0..data.m() {
            let d = data.d()[j];
            let s = psi + d;
            let inv = 1.0 / s;
            let dk = d * d * data.kappa_e()[j];
            t.t1 += inv;
            t.t2 += inv * inv;
            t.t3 += inv * inv * inv;
            t.ts2 += s * s;
            t.d2f += dk;
            t.d2f2 += dk * inv * inv;
            t.d2f3 += dk * inv * inv * inv;
        }
        t
    }
}

/// Large-`m` bias and variance of `ψ̂` evaluated at `(ψ, κ_v)`.
pub fn psi_moments(data: &AreaDataset, method: PsiMethod, psi: f64, kappa_v: f64) -> PsiMoments {
    let m = data.m() as f64;
    let tr = SigmaTraces::new(data, psi);
    match method {
        PsiMethod::PrasadRao => PsiMoments {
            bias_n: 0.0,
            alpha: 0.0,
            var_n: 2.0 * tr.ts2 / (m * m),
            eta: (kappa_v * psi * psi + tr.d2f / m) / m,
        },
        PsiMethod::FayHerriot => {
            let t1c = tr.t1 * tr.t1 * tr.t1;
            let bias_n = 2.0 * (m * tr.t2 - tr.t1 * tr.t1) / t1c;
            let alpha = ((tr.t2 * tr.t2 - tr.t3 * tr.t1) * psi * psi * kappa_v
                + (tr.d2f2 * tr.t2 - tr.t1 * tr.d2f3))
                / t1c;
            PsiMoments {
                bias_n,
                alpha,
                var_n: 2.0 * m / (tr.t1 * tr.t1),
                eta: (tr.t2 * kappa_v * psi * psi + tr.d2f2) / (tr.t1 * tr.t1),
            }
        }
    }
}

/// Method-dependent factor in the cross term `g4` of the asymptotic MSPE:
/// 1 for PR; `m (ψ+D_i)⁻¹ / Σ_j (ψ+D_j)⁻¹` for FH.
pub fn c_factor(data: &AreaDataset, method: PsiMethod, psi: f64, area: usize) -> f64 {
    match method {
        PsiMethod::PrasadRao => 1.0,
        PsiMethod::FayHerriot => {
            let tr = SigmaTraces::new(data, psi);
            data.m() as f64 / ((psi + data.d()[area]) * tr.t1)
        }
    }
}
