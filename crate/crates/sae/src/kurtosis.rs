//! Jackknife estimation of the area-effect kurtosis `κ_v`.
//!
//! The FH robust MSPE estimator needs `κ_v`, which the model does not
//! observe directly. The route here is a weighted delete-one jackknife
//! variance of `ψ̂_FH`,
//!
//! ```text
//! v_WJ = Σ_u w_u (ψ̂_FH,(−u) − ψ̂_FH)²,   w_u = 1 − h_uu,
//! ```
//!
//! with `h_uu` the full-data OLS leverages, matched against the asymptotic
//! variance expansion of `ψ̂_FH`, which is linear in `κ_v`. Writing
//! `t_k = Σ_j (ψ̂+D_j)^{-k}` and `Φ = diag(κ_{e,j})`:
//!
//! ```text
//! k(ψ̂) = 2m + tr(D²ΦΣ⁻²) − t1² · v_WJ,
//! l(ψ̂) = t2 · ψ̂²,
//! κ̂_v  = −k(ψ̂)/l(ψ̂)   (0 when ψ̂ = 0),
//! ```
//!
//! clamped below at −2, the bound every real distribution's excess
//! kurtosis satisfies.

use crate::error::Result;
use crate::model::{self, AreaDataset};
use crate::variance::{estimate_psi_fh_masked, PsiEstimate, SigmaTraces, SolverConfig};

/// Below this magnitude of `l(ψ̂) = t2·ψ̂²` the moment match divides by
/// nearly nothing and the estimate is reported as unstable (and set to 0).
const STABILITY_TOL: f64 = 1e-12;

/// Weighted delete-one jackknife variance of `ψ̂_FH`.
#[derive(Debug, Clone)]
pub struct JackknifeVariance {
    /// `Σ_u (1 − h_uu)(ψ̂_(−u) − ψ̂)²`.
    pub v_wj: f64,
    /// Full-data estimate the deletions are centered on.
    pub psi: PsiEstimate,
    /// Delete-one estimates `ψ̂_(−u)`, in area order.
    pub loo_psi: Vec<f64>,
    /// Weights `1 − h_uu` from the full-data OLS leverages.
    pub weights: Vec<f64>,
}

/// Compute the weighted jackknife variance of the FH variance-component
/// estimator by re-solving the moment equation with each area left out.
pub fn jackknife_psi_variance(data: &AreaDataset, cfg: &SolverConfig) -> Result<JackknifeVariance> {
    let psi = estimate_psi_fh_masked(data, None, cfg)?;
    jackknife_with_psi(data, psi, cfg)
}

fn jackknife_with_psi(
    data: &AreaDataset,
    psi: PsiEstimate,
    cfg: &SolverConfig,
) -> Result<JackknifeVariance> {
    let ols = model::fit_ols(data)?;
    let weights: Vec<f64> = ols.leverages.iter().map(|h| 1.0 - h).collect();
    let mut loo_psi = Vec::with_capacity(data.m());
    let mut v_wj = 0.0;
    for u in 0..data.m() {
        let loo = estimate_psi_fh_masked(data, Some(u), cfg)?;
        let dev = loo.value - psi.value;
        v_wj += weights[u] * dev * dev;
        loo_psi.push(loo.value);
    }
    Ok(JackknifeVariance {
        v_wj,
        psi,
        loo_psi,
        weights,
    })
}

/// Jackknife-based estimate of the area-effect excess kurtosis.
#[derive(Debug, Clone, Copy)]
pub struct KappaVEstimate {
    /// The estimate after clamping at the kurtosis bound −2.
    pub value: f64,
    /// The moment-matched value before clamping.
    pub unclamped: f64,
    /// The jackknife variance it was matched against.
    pub v_wj: f64,
    /// `ψ̂_FH` the match was evaluated at.
    pub psi: f64,
    /// True when `ψ̂ = 0` or the divisor `t2·ψ̂²` was numerically tiny; the
    /// reported value is 0 in that case.
    pub unstable: bool,
}

/// Solve the moment match for κ_v given `ψ̂_FH` and a variance `v_wj` of it.
///
/// Exposed separately so the match can be checked against a known κ: feeding
/// `v_wj = [2m + tr(D²ΦΣ⁻²) + t2·ψ̂²·κ₀]/t1²` recovers `κ̂_v = κ₀`.
pub fn kappa_v_from_variance(data: &AreaDataset, psi: f64, v_wj: f64) -> KappaVEstimate {
    let tr = SigmaTraces::new(data, psi);
    let m = data.m() as f64;
    let l = tr.t2 * psi * psi;
    if psi <= 0.0 || l.abs() < STABILITY_TOL {
        return KappaVEstimate {
            value: 0.0,
            unclamped: 0.0,
            v_wj,
            psi,
            unstable: true,
        };
    }
    let k = 2.0 * m + tr.d2f2 - tr.t1 * tr.t1 * v_wj;
    let unclamped = -k / l;
    KappaVEstimate {
        value: unclamped.max(-2.0),
        unclamped,
        v_wj,
        psi,
        unstable: false,
    }
}

/// Estimate κ_v from the data: fit `ψ̂_FH`, jackknife its variance, and
/// invert the variance expansion. Returns 0 (flagged unstable) when the
/// variance component is estimated at the boundary `ψ̂ = 0`.
pub fn estimate_kappa_v(data: &AreaDataset, cfg: &SolverConfig) -> Result<KappaVEstimate> {
    let psi = estimate_psi_fh_masked(data, None, cfg)?;
    estimate_kappa_v_with_psi(data, &psi, cfg)
}

/// As [`estimate_kappa_v`] but reusing an already-fitted `ψ̂_FH`.
pub(crate) fn estimate_kappa_v_with_psi(
    data: &AreaDataset,
    psi: &PsiEstimate,
    cfg: &SolverConfig,
) -> Result<KappaVEstimate> {
    if psi.value <= 0.0 {
        return Ok(KappaVEstimate {
            value: 0.0,
            unclamped: 0.0,
            v_wj: 0.0,
            psi: psi.value,
            unstable: true,
        });
    }
    let jk = jackknife_with_psi(data, psi.clone(), cfg)?;
    Ok(kappa_v_from_variance(data, psi.value, jk.v_wj))
}
