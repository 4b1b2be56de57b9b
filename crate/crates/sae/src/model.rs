//! The area-level model: data container, OLS/GLS fitting, and the (E)BLUP.
//!
//! Observations follow `Y_i = x_iᵀβ + v_i + e_i`, where the sampling errors
//! `e_i` have known variances `D_i` (and known excess kurtoses `κ_{e,i}`) and
//! the area effects `v_i` share an unknown variance `ψ`. Both error terms have
//! mean zero; neither is assumed normal. All covariance matrices are diagonal,
//! so every fit reduces to weighted sums over areas plus a p×p solve.

use crate::error::{Error, Result};
use crate::linalg::{quadratic_form, Cholesky};

/// One area's observation: direct estimate, sampling variance, sampling-error
/// excess kurtosis, and covariates.
#[derive(Debug, Clone)]
pub struct AreaRecord {
    /// Identifier carried through to reports.
    pub id: String,
    /// Direct (survey) estimate `Y_i`.
    pub y: f64,
    /// Known sampling variance `D_i > 0`.
    pub d: f64,
    /// Known excess kurtosis `κ_{e,i} ≥ −2` of the sampling error.
    pub kappa_e: f64,
    /// Covariate row `x_i` (length `p`).
    pub x: Vec<f64>,
}

/// Column-oriented dataset of `m` areas with a common covariate dimension `p`.
#[derive(Debug, Clone)]
pub struct AreaDataset {
    ids: Vec<String>,
    y: Vec<f64>,
    /// Row-major m×p design matrix.
    x: Vec<f64>,
    d: Vec<f64>,
    kappa_e: Vec<f64>,
    m: usize,
    p: usize,
}

impl AreaDataset {
    /// Build a dataset from per-area records, validating the model's
    /// structural preconditions.
    pub fn new(records: Vec<AreaRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidDataset("no areas supplied".into()));
        }
        let p = records[0].x.len();
        if p == 0 {
            return Err(Error::InvalidDataset(
                "each area needs at least one covariate (use an intercept)".into(),
            ));
        }
        let m = records.len();
        let mut ids = Vec::with_capacity(m);
        let mut y = Vec::with_capacity(m);
        let mut x = Vec::with_capacity(m * p);
        let mut d = Vec::with_capacity(m);
        let mut kappa_e = Vec::with_capacity(m);
        for (i, r) in records.into_iter().enumerate() {
            if r.x.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "area {} has {} covariates, expected {}",
                    r.id,
                    r.x.len(),
                    p
                )));
            }
            if !r.y.is_finite() || !r.d.is_finite() || !r.kappa_e.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "area {} has a non-finite value",
                    r.id
                )));
            }
            if r.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "area {} has a non-finite covariate",
                    r.id
                )));
            }
            if r.d <= 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "area {} has sampling variance {} (must be > 0)",
                    r.id, r.d
                )));
            }
            if r.kappa_e < -2.0 {
                return Err(Error::InvalidDataset(format!(
                    "area {} has kappa_e {} below the kurtosis bound −2",
                    r.id, r.kappa_e
                )));
            }
            if ids.contains(&r.id) {
                return Err(Error::InvalidDataset(format!("duplicate area id {}", r.id)));
            }
            let _ = i;
            ids.push(r.id);
            y.push(r.y);
            x.extend_from_slice(&r.x);
            d.push(r.d);
            kappa_e.push(r.kappa_e);
        }
        if m <= p {
            return Err(Error::InvalidDataset(format!(
                "need more areas than regression parameters (m = {m}, p = {p})"
            )));
        }
        Ok(Self {
            ids,
            y,
            x,
            d,
            kappa_e,
            m,
            p,
        })
    }

    /// Convenience constructor for simulation-style data: intercept-only
    /// design with generated ids.
    pub fn intercept_only(y: Vec<f64>, d: Vec<f64>, kappa_e: Vec<f64>) -> Result<Self> {
        let records = y
            .into_iter()
            .zip(d)
            .zip(kappa_e)
            .enumerate()
            .map(|(i, ((y, d), kappa_e))| AreaRecord {
                id: format!("area_{}", i + 1),
                y,
                d,
                kappa_e,
                x: vec![1.0],
            })
            .collect();
        Self::new(records)
    }

    /// Number of areas.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of regression parameters.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Area identifiers.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Direct estimates.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Sampling variances.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Sampling-error excess kurtoses.
    pub fn kappa_e(&self) -> &[f64] {
        &self.kappa_e
    }

    /// Covariate row for one area.
    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Replace the response vector in place (used by the study engine to
    /// reuse one dataset across Monte Carlo replicates).
    pub fn set_y(&mut self, y: &[f64]) {
        assert_eq!(y.len(), self.m, "response length must equal m");
        self.y.copy_from_slice(y);
    }

    /// Advisory data-quality diagnostics; these never fail a fit.
    ///
    /// Flags high-leverage areas (h_jj > 4p/m) and extreme spread in the
    /// sampling variances (max/min > 1e4).
    pub fn regularity_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if let Ok(fit) = fit_ols(self) {
            let cut = 4.0 * self.p as f64 / self.m as f64;
            for (i, &h) in fit.leverages.iter().enumerate() {
                if h > cut {
                    warnings.push(format!(
                        "area {} has leverage {:.4} above 4p/m = {:.4}",
                        self.ids[i], h, cut
                    ));
                }
            }
        }
        let (dmin, dmax) = self
            .d
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if dmax / dmin > 1e4 {
            warnings.push(format!(
                "sampling-variance ratio max/min = {:.3e} exceeds 1e4; estimates for \
                 low-variance areas may dominate",
                dmax / dmin
            ));
        }
        warnings
    }
}

/// Ordinary least squares fit (identity weights).
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Coefficients β̂.
    pub beta: Vec<f64>,
    /// Residuals `Y_i − x_iᵀβ̂`.
    pub residuals: Vec<f64>,
    /// Hat-matrix diagonal `h_jj = x_jᵀ(XᵀX)⁻¹x_j`.
    pub leverages: Vec<f64>,
}

/// Generalized least squares fit under `Σ(ψ) = diag(ψ + D_j)`.
#[derive(Debug, Clone)]
pub struct GlsFit {
    /// Coefficients β̂(ψ).
    pub beta: Vec<f64>,
    /// Row-major p×p covariance `(XᵀΣ⁻¹X)⁻¹`.
    pub beta_cov: Vec<f64>,
}

/// EBLUP output for one area.
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    /// Shrinkage weight `B_i = ψ/(ψ + D_i)` on the direct estimate.
    pub b: f64,
    /// Predicted area mean `θ̂_i = B_i Y_i + (1 − B_i) x_iᵀβ̂`.
    pub theta: f64,
}

/// Weighted least squares on the diagonal weight vector `w`, optionally
/// leaving one area out (used by the delete-one jackknife).
///
/// Shared core of [`fit_ols`] and [`fit_gls`]: solves
/// `(Xᵀ W X) β = Xᵀ W Y` by Cholesky and returns the coefficient vector along
/// with the inverse normal matrix.
fn fit_weighted(
    data: &AreaDataset,
    w: &[f64],
    skip: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = data.p;
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..data.m {
        if skip == Some(i) {
            continue;
        }
        let xi = data.x_row(i);
        let wi = w[i];
        for a in 0..p {
            xty[a] += wi * xi[a] * data.y[i];
            for b in 0..=a {
                xtx[a * p + b] += wi * xi[a] * xi[b];
            }
        }
    }
    // Mirror the lower triangle; Cholesky reads the full square.
    for a in 0..p {
        for b in a + 1..p {
            xtx[a * p + b] = xtx[b * p + a];
        }
    }
    let chol = Cholesky::factor(&xtx, p)?;
    let beta = chol.solve(&xty);
    Ok((beta, chol.inverse()))
}

/// Ordinary least squares: coefficients, residuals, and leverages.
pub fn fit_ols(data: &AreaDataset) -> Result<OlsFit> {
    let w = vec![1.0; data.m()];
    let (beta, inv) = fit_weighted(data, &w, None)?;
    let residuals: Vec<f64> = (0..data.m())
        .map(|i| {
            let xi = data.x_row(i);
            data.y()[i] - dot(xi, &beta)
        })
        .collect();
    let leverages: Vec<f64> = (0..data.m())
        .map(|i| quadratic_form(&inv, data.x_row(i)))
        .collect();
    Ok(OlsFit {
        beta,
        residuals,
        leverages,
    })
}

/// Generalized least squares at variance component `ψ ≥ 0`:
/// `β̂(ψ) = (XᵀΣ⁻¹X)⁻¹ XᵀΣ⁻¹Y` with `Σ = diag(ψ + D_j)`.
pub fn fit_gls(data: &AreaDataset, psi: f64) -> Result<GlsFit> {
    fit_gls_masked(data, psi, None)
}

/// GLS with one area left out; the deleted area keeps its index so callers can
/// line results up with the full dataset.
pub(crate) fn fit_gls_masked(data: &AreaDataset, psi: f64, skip: Option<usize>) -> Result<GlsFit> {
    if !(psi >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "variance component psi = {psi} must be ≥ 0"
        )));
    }
    let w: Vec<f64> = data.d().iter().map(|&d| 1.0 / (psi + d)).collect();
    let (beta, beta_cov) = fit_weighted(data, &w, skip)?;
    Ok(GlsFit { beta, beta_cov })
}

/// EBLUP of every area mean at the plugged-in variance component `ψ`.
///
/// `θ̂_i = B_i Y_i + (1 − B_i) x_iᵀβ̂(ψ)` with `B_i = ψ/(ψ + D_i)`; at `ψ = 0`
/// the predictor collapses onto the regression synthetic estimate.
pub fn predict_eblup(data: &AreaDataset, psi: f64, fit: &GlsFit) -> Vec<Prediction> {
    (0..data.m())
        .map(|i| {
            let b = psi / (psi + data.d()[i]);
            let synthetic = dot(data.x_row(i), &fit.beta);
            Prediction {
                b,
                theta: b * data.y()[i] + (1.0 - b) * synthetic,
            }
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn intercept_data(y: &[f64], d: &[f64]) -> AreaDataset {
        AreaDataset::intercept_only(y.to_vec(), d.to_vec(), vec![0.0; y.len()]).unwrap()
    }

    #[test]
    fn ols_intercept_mean_and_leverage() {
        let data = intercept_data(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]);
        let fit = fit_ols(&data).unwrap();
        assert_relative_eq!(fit.beta[0], 2.0, epsilon = 1e-14);
        for h in fit.leverages {
            assert_relative_eq!(h, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn ols_simple_regression() {
        // X columns (1,1,1) and (0,1,2); Y = (0,1,2) → β̂ = (0, 1).
        let records = vec![
            AreaRecord {
                id: "a".into(),
                y: 0.0,
                d: 1.0,
                kappa_e: 0.0,
                x: vec![1.0, 0.0],
            },
            AreaRecord {
                id: "b".into(),
                y: 1.0,
                d: 1.0,
                kappa_e: 0.0,
                x: vec![1.0, 1.0],
            },
            AreaRecord {
                id: "c".into(),
                y: 2.0,
                d: 1.0,
                kappa_e: 0.0,
                x: vec![1.0, 2.0],
            },
        ];
        let data = AreaDataset::new(records).unwrap();
        let fit = fit_ols(&data).unwrap();
        assert_relative_eq!(fit.beta[0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(fit.beta[1], 1.0, epsilon = 1e-13);
        for r in &fit.residuals {
            assert_relative_eq!(*r, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn saturated_design_rejected() {
        // m = p = 1 after validation; more directly m == p.
        let records = vec![AreaRecord {
            id: "only".into(),
            y: 1.0,
            d: 1.0,
            kappa_e: 0.0,
            x: vec![1.0],
        }];
        assert!(matches!(
            AreaDataset::new(records),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn gls_balanced_is_mean_with_known_cov() {
        let data = intercept_data(&[1.0, 2.0, 3.0, 6.0], &[2.0; 4]);
        let psi = 1.0;
        let fit = fit_gls(&data, psi).unwrap();
        assert_relative_eq!(fit.beta[0], 3.0, epsilon = 1e-14);
        // cov = (ψ + D)/m.
        assert_relative_eq!(fit.beta_cov[0], 3.0 / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn gls_weights_two_areas() {
        // D = (1, 3), ψ = 1, Y = (0, 4): weights (1/2, 1/4) → β̂ = 4/3.
        let data = intercept_data(&[0.0, 4.0], &[1.0, 3.0]);
        let fit = fit_gls(&data, 1.0).unwrap();
        assert_relative_eq!(fit.beta[0], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gls_approaches_ols_for_huge_psi() {
        let data = intercept_data(&[0.0, 1.0, 5.0], &[0.5, 1.0, 4.0]);
        let gls = fit_gls(&data, 1e8).unwrap();
        let ols = fit_ols(&data).unwrap();
        assert_relative_eq!(gls.beta[0], ols.beta[0], epsilon = 1e-6);
    }

    #[test]
    fn eblup_zero_psi_is_synthetic() {
        let data = intercept_data(&[5.0, -1.0, 2.0], &[1.0, 2.0, 3.0]);
        let fit = fit_gls(&data, 0.0).unwrap();
        for pred in predict_eblup(&data, 0.0, &fit) {
            assert_eq!(pred.b, 0.0);
            assert_relative_eq!(pred.theta, fit.beta[0], epsilon = 1e-14);
        }
    }

    #[test]
    fn eblup_balanced_shrinkage() {
        // Balanced m=3, Y = (2, −2, 0), ψ = 3, D = 1: B = 3/4, β̂ = 0.
        let data = intercept_data(&[2.0, -2.0, 0.0], &[1.0; 3]);
        let fit = fit_gls(&data, 3.0).unwrap();
        let preds = predict_eblup(&data, 3.0, &fit);
        let want = [1.5, -1.5, 0.0];
        for (pred, w) in preds.iter().zip(want) {
            assert_relative_eq!(pred.b, 0.75, epsilon = 1e-14);
            assert_relative_eq!(pred.theta, w, epsilon = 1e-14);
        }
    }

    #[test]
    fn validation_rejects_bad_rows() {
        let bad_d = AreaDataset::intercept_only(vec![1.0, 2.0], vec![1.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(bad_d, Err(Error::InvalidDataset(_))));
        let bad_kappa =
            AreaDataset::intercept_only(vec![1.0, 2.0], vec![1.0, 1.0], vec![0.0, -2.5]);
        assert!(matches!(bad_kappa, Err(Error::InvalidDataset(_))));
        let bad_y =
            AreaDataset::intercept_only(vec![1.0, f64::NAN], vec![1.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(bad_y, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn warnings_flag_extreme_variance_ratio() {
        let data = intercept_data(&[1.0, 2.0, 3.0], &[1e-3, 1.0, 2e1 * 1e3]);
        let warnings = data.regularity_warnings();
        assert!(warnings
            .iter()
            .any(|w| w.contains("sampling-variance ratio")));
    }

    #[test]
    fn warnings_flag_high_leverage() {
        // One far-out covariate dominates the hat matrix. The threshold 4p/m
        // only bites once m > 4p, so use m = 9, p = 2.
        let mut records: Vec<AreaRecord> = (0..8)
            .map(|i| AreaRecord {
                id: format!("a{i}"),
                y: i as f64 / 10.0,
                d: 1.0,
                kappa_e: 0.0,
                x: vec![1.0, i as f64 / 10.0],
            })
            .collect();
        records.push(AreaRecord {
            id: "outlier".into(),
            y: 9.0,
            d: 1.0,
            kappa_e: 0.0,
            x: vec![1.0, 50.0],
        });
        let data = AreaDataset::new(records).unwrap();
        let warnings = data.regularity_warnings();
        assert!(warnings.iter().any(|w| w.contains("leverage")));
    }
}
