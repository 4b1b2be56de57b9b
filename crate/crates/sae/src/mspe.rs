//! Asymptotic MSPE decomposition of the EBLUP and its estimators.
//!
//! The mean squared prediction error of the EBLUP decomposes, to second
//! order, into
//!
//! * `g1 = ψ D_i/(ψ + D_i)` — prediction error with known parameters,
//! * `g2 = (D_i/(ψ+D_i))² · x_iᵀ(XᵀΣ⁻¹X)⁻¹x_i` — regression estimation,
//! * `g3 = D_i²/(ψ+D_i)³ · var(ψ̂)` — variance-component estimation,
//! * `g4 = ψ D_i²/[m(ψ+D_i)³] · (D_i κ_{e,i} − ψ κ_v) · c_i` — the
//!   non-normality cross term with the method factor `c_i`,
//! * `g5 = D_i²/(ψ+D_i)² · bias(ψ̂)` — bias of the variance component,
//!
//! giving `AMSPE_i = g1 + g2 + g3 + 2 g4`. Estimators of the MSPE plug in
//! `ψ̂` and differ in how much of the decomposition they correct for:
//!
//! * **naive**: `g1 + g2` — ignores the variability of `ψ̂` entirely;
//! * **normality-based**: for PR, the Prasad-Rao estimator
//!   `g1 + g2 + 2 g3_N`; for FH, the Datta-Rao-Smith estimator
//!   `g1 + g2 + 2 g3_N − (D²/s²)·bias_N`;
//! * **robust**: adds the kurtosis corrections so the estimator stays
//!   second-order unbiased when neither `v` nor `e` is normal. The PR form
//!   needs only the known sampling-error kurtoses; the FH form also needs
//!   `κ_v`, estimated by the delete-one jackknife unless supplied.
//!
//! Published estimates are floored at the naive value (the raw corrected
//! values are kept as diagnostics), mirroring common practice for avoiding
//! negative corrections.

use crate::error::{Error, Result};
use crate::kurtosis::{self, KappaVEstimate};
use crate::linalg::quadratic_form;
use crate::model::{self, AreaDataset, Prediction};
use crate::variance::{
    estimate_psi, psi_moments, PsiEstimate, PsiMethod, PsiMoments, SigmaTraces, SolverConfig,
};

/// The five per-area terms of the second-order MSPE decomposition.
#[derive(Debug, Clone, Copy)]
pub struct GTerms {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
}

impl GTerms {
    /// Second-order approximation `g1 + g2 + g3 + 2 g4` of the true MSPE.
    pub fn amspe(&self) -> f64 {
        self.g1 + self.g2 + self.g3 + 2.0 * self.g4
    }
}

/// Evaluate the decomposition for every area at `(ψ, κ_v)`.
pub fn g_terms(
    data: &AreaDataset,
    method: PsiMethod,
    psi: f64,
    kappa_v: f64,
) -> Result<Vec<GTerms>> {
    let fit = model::fit_gls(data, psi)?;
    let moments = psi_moments(data, method, psi, kappa_v);
    let m = data.m() as f64;
    let tr = SigmaTraces::new(data, psi);
    let out = (0..data.m())
        .map(|i| {
            let d = data.d()[i];
            let s = psi + d;
            let g1 = psi * d / s;
            let g2 = (d / s).powi(2) * quadratic_form(&fit.beta_cov, data.x_row(i));
            let g3 = d * d / (s * s * s) * moments.variance();
            let c = match method {
                PsiMethod::PrasadRao => 1.0,
                PsiMethod::FayHerriot => m / (s * tr.t1),
            };
            let g4 = psi * d * d / (m * s * s * s) * (d * data.kappa_e()[i] - psi * kappa_v) * c;
            let g5 = d * d / (s * s) * moments.bias();
            GTerms { g1, g2, g3, g4, g5 }
        })
        .collect();
    Ok(out)
}

/// Per-area second-order MSPE approximation `g1 + g2 + g3 + 2 g4`.
pub fn amspe(data: &AreaDataset, method: PsiMethod, psi: f64, kappa_v: f64) -> Result<Vec<f64>> {
    Ok(g_terms(data, method, psi, kappa_v)?
        .iter()
        .map(GTerms::amspe)
        .collect())
}

/// Where the FH robust estimator gets its area-effect kurtosis from.
#[derive(Debug, Clone, Copy)]
pub enum KappaVSource {
    /// Delete-one jackknife estimate (the default).
    Jackknife,
    /// A caller-supplied value (must be ≥ −2).
    Fixed(f64),
}

/// MSPE estimates for one area. `normal`/`robust` are floored at `naive`;
/// the unfloored values are kept for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct AreaMspe {
    /// `g1(ψ̂) + g2(ψ̂)`.
    pub naive: f64,
    /// Normality-based second-order estimator (PR: Prasad-Rao; FH:
    /// Datta-Rao-Smith), floored at `naive`.
    pub normal: f64,
    /// Kurtosis-robust second-order estimator, floored at `naive`.
    pub robust: f64,
    /// `normal` before flooring.
    pub normal_raw: f64,
    /// `robust` before flooring.
    pub robust_raw: f64,
}

/// Full MSPE report: the fitted variance component, the EBLUPs, and the
/// per-area MSPE estimates.
#[derive(Debug, Clone)]
pub struct MspeReport {
    /// Fitted variance component with solver diagnostics.
    pub psi: PsiEstimate,
    /// The κ_v value the robust FH estimator used (`None` for PR, whose
    /// robust form does not involve κ_v).
    pub kappa_v_used: Option<f64>,
    /// Jackknife diagnostics when κ_v was estimated.
    pub kappa_v_detail: Option<KappaVEstimate>,
    /// EBLUP and shrinkage weight per area.
    pub predictions: Vec<Prediction>,
    /// MSPE estimates per area.
    pub areas: Vec<AreaMspe>,
}

/// Fit `ψ`, predict, and estimate every area's MSPE.
///
/// `kappa_v` applies to the FH method only; passing it with PR is rejected
/// (the PR robust estimator involves only the known sampling-error
/// kurtoses). `None` with FH defaults to the jackknife.
pub fn estimate_mspe(
    data: &AreaDataset,
    method: PsiMethod,
    kappa_v: Option<KappaVSource>,
    cfg: &SolverConfig,
) -> Result<MspeReport> {
    if method == PsiMethod::PrasadRao && kappa_v.is_some() {
        return Err(Error::InvalidConfig(
            "kappa_v is not used by the Prasad-Rao MSPE estimator; omit it".into(),
        ));
    }
    let psi = estimate_psi(data, method, cfg)?;
    let (kappa_v_used, kappa_v_detail) = match (method, kappa_v) {
        (PsiMethod::PrasadRao, _) => (None, None),
        (PsiMethod::FayHerriot, Some(KappaVSource::Fixed(v))) => {
            if !(v >= -2.0) {
                return Err(Error::InvalidConfig(format!(
                    "kappa_v = {v} is below the kurtosis bound −2"
                )));
            }
            (Some(v), None)
        }
        (PsiMethod::FayHerriot, Some(KappaVSource::Jackknife) | None) => {
            let est = kurtosis::estimate_kappa_v_with_psi(data, &psi, cfg)?;
            (Some(est.value), Some(est))
        }
    };
    let (predictions, areas) = mspe_with_psi(data, method, &psi, kappa_v_used)?;
    Ok(MspeReport {
        psi,
        kappa_v_used,
        kappa_v_detail,
        predictions,
        areas,
    })
}

/// Core estimator shared with the study engine: everything downstream of a
/// fitted `ψ̂` (and, for FH, a resolved κ_v value).
pub(crate) fn mspe_with_psi(
    data: &AreaDataset,
    method: PsiMethod,
    psi: &PsiEstimate,
    kappa_v: Option<f64>,
) -> Result<(Vec<Prediction>, Vec<AreaMspe>)> {
    let psi_hat = psi.value;
    let fit = model::fit_gls(data, psi_hat)?;
    let predictions = model::predict_eblup(data, psi_hat, &fit);
    let m = data.m() as f64;
    let tr = SigmaTraces::new(data, psi_hat);
    // κ_v enters only the FH robust correction; the moments needed for the
    // normality-based parts are evaluated with κ_v = 0.
    let base: PsiMoments = psi_moments(data, method, psi_hat, 0.0);
    let robust_kappa = kappa_v.unwrap_or(0.0);
    let with_kappa: PsiMoments = psi_moments(data, method, psi_hat, robust_kappa);

    let areas = (0..data.m())
        .map(|i| {
            let d = data.d()[i];
            let s = psi_hat + d;
            let g1 = psi_hat * d / s;
            let g2 = (d / s).powi(2) * quadratic_form(&fit.beta_cov, data.x_row(i));
            let naive = g1 + g2;
            let d2s3 = d * d / (s * s * s);
            let d2s2 = (d / s).powi(2);
            let (normal_raw, robust_raw) = match method {
                PsiMethod::PrasadRao => {
                    let normal = naive + 2.0 * d2s3 * base.var_n;
                    // Known-kurtosis correction: 2D²/[m s³]·(ψ̂ D κ_e + tr(D²Φ)/m).
                    let extra = 2.0 * d * d / (m * s * s * s)
                        * (psi_hat * d * data.kappa_e()[i] + tr.d2f / m);
                    (normal, normal + extra)
                }
                PsiMethod::FayHerriot => {
                    let drs = naive + 2.0 * d2s3 * base.var_n - d2s2 * base.bias_n;
                    let c = m / (s * tr.t1);
                    let g4 = psi_hat * d * d / (m * s * s * s)
                        * (d * data.kappa_e()[i] - psi_hat * robust_kappa)
                        * c;
                    let robust =
                        drs + 2.0 * d2s3 * with_kappa.eta + 2.0 * g4 - d2s2 * with_kappa.alpha;
                    (drs, robust)
                }
            };
            AreaMspe {
                naive,
                normal: normal_raw.max(naive),
                robust: robust_raw.max(naive),
                normal_raw,
                robust_raw,
            }
        })
        .collect();
    Ok((predictions, areas))
}
