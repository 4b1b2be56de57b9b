//! Design-based moments of a direct estimator under Poisson sampling.
//!
//! When the area-level observation is a Hájek mean `ȳ_w = Σ_S w_k y_k / N̂`
//! from a within-area Poisson sample (`w_k = 1/π_k`, `N̂ = Σ_S w_k`), both
//! its design variance and the excess kurtosis of the sampling error can be
//! estimated from the sample itself:
//!
//! ```text
//! v   = N̂⁻² Σ_S w_k(w_k − 1)(y_k − ȳ_w)²
//! μ̂4  = Σ_S (1−π_k)[π_k³+(1−π_k)³] ẑ_k⁴/π_k⁴
//!       + 6 Σ_{k<l∈S} (1−π_k)(1−π_l) (ẑ_k²/π_k²)(ẑ_l²/π_l²)
//! κ̂_e = μ̂4/v² − 3,   ẑ_k = (y_k − ȳ_w)/N̂.
//! ```
//!
//! The pair sum is evaluated in O(n) through
//! `6 Σ_{k<l} a_k a_l = 3[(Σa)² − Σa²]` with `a_k = (1−π_k)ẑ_k²/π_k²`; the
//! quadratic-time form is kept alongside it for verification. Both moment
//! estimators are design-unbiased for the corresponding moments of the
//! Horvitz-Thompson error Σ_k ẑ_k(I_k − π_k)/π_k when the `ẑ_k` are held
//! fixed, which is what the enumeration tests check.

use crate::error::{Error, Result};

/// Design-based moment estimates for one area's Poisson sample.
#[derive(Debug, Clone, Copy)]
pub struct SurveyMoments {
    /// Hájek (weighted) mean of the sampled units.
    pub y_bar: f64,
    /// Estimated population size `Σ 1/π_k`.
    pub n_hat: f64,
    /// Estimated design variance of the mean.
    pub v: f64,
    /// Estimated fourth central moment of the sampling error.
    pub mu4: f64,
    /// Excess kurtosis `μ̂4/v² − 3`, clamped at −2.
    pub kappa_e: f64,
    /// The same before clamping.
    pub kappa_unclamped: f64,
}

fn validate(y: &[f64], pi: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::InvalidDataset("empty unit sample".into()));
    }
    if y.len() != pi.len() {
        return Err(Error::InvalidDataset(format!(
            "{} observations but {} inclusion probabilities",
            y.len(),
            pi.len()
        )));
    }
    for (k, (&yk, &pk)) in y.iter().zip(pi).enumerate() {
        if !yk.is_finite() {
            return Err(Error::InvalidDataset(format!(
                "unit {}: non-finite observation {yk}",
                k + 1
            )));
        }
        if !(pk > 0.0 && pk <= 1.0) {
            return Err(Error::InvalidDataset(format!(
                "unit {}: inclusion probability {pk} outside (0, 1]",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Hájek mean and estimated population size `(ȳ_w, N̂)`.
pub fn direct_mean(y: &[f64], pi: &[f64]) -> Result<(f64, f64)> {
    validate(y, pi)?;
    let n_hat: f64 = pi.iter().map(|p| 1.0 / p).sum();
    let total: f64 = y.iter().zip(pi).map(|(yk, pk)| yk / pk).sum();
    Ok((total / n_hat, n_hat))
}

/// Estimated design variance of the Hájek mean under Poisson sampling.
pub fn poisson_variance(y: &[f64], pi: &[f64]) -> Result<f64> {
    let (y_bar, n_hat) = direct_mean(y, pi)?;
    let sum: f64 = y
        .iter()
        .zip(pi)
        .map(|(yk, pk)| {
            let w = 1.0 / pk;
            w * (w - 1.0) * (yk - y_bar) * (yk - y_bar)
        })
        .sum();
    Ok(sum / (n_hat * n_hat))
}

/// Fourth-moment estimator for pre-centered, pre-scaled residuals `z` with
/// their inclusion probabilities, every passed unit being in the sample.
/// Linear time: the cross terms collapse to `3[(Σa)² − Σa²]`.
pub fn centered_fourth_moment(z: &[f64], pi: &[f64]) -> f64 {
    let mut own = 0.0;
    let mut a_sum = 0.0;
    let mut a_sq = 0.0;
    for (&zk, &pk) in z.iter().zip(pi) {
        let q = 1.0 - pk;
        let z2 = zk * zk;
        let a = q * z2 / (pk * pk);
        own += q * (pk * pk * pk + q * q * q) * z2 * z2 / (pk * pk * pk * pk);
        a_sum += a;
        a_sq += a * a;
    }
    own + 3.0 * (a_sum * a_sum - a_sq)
}

/// Quadratic-time reference form of [`centered_fourth_moment`]: the pair
/// sum written out as an explicit double loop.
pub fn centered_fourth_moment_naive(z: &[f64], pi: &[f64]) -> f64 {
    let n = z.len();
    let a: Vec<f64> = z
        .iter()
        .zip(pi)
        .map(|(&zk, &pk)| (1.0 - pk) * zk * zk / (pk * pk))
        .collect();
    let mut own = 0.0;
    for (&zk, &pk) in z.iter().zip(pi) {
        let q = 1.0 - pk;
        own += q * (pk * pk * pk + q * q * q) * zk * zk * zk * zk / (pk * pk * pk * pk);
    }
    let mut pairs = 0.0;
    for k in 0..n {
        for l in (k + 1)..n {
            pairs += 6.0 * a[k] * a[l];
        }
    }
    own + pairs
}

/// Population fourth central moment of the fixed-`z` Horvitz-Thompson error
/// `Σ_k z_k(I_k − π_k)/π_k` — the target the estimator is unbiased for.
pub fn fixed_z_fourth_moment(z: &[f64], pi: &[f64]) -> f64 {
    let mut own = 0.0;
    let mut var_sum = 0.0;
    let mut var_sq = 0.0;
    for (&zk, &pk) in z.iter().zip(pi) {
        let q = 1.0 - pk;
        let z2 = zk * zk;
        let var = q * z2 / pk;
        own += z2 * z2 * q * (pk * pk * pk + q * q * q) / (pk * pk * pk);
        var_sum += var;
        var_sq += var * var;
    }
    own + 3.0 * (var_sum * var_sum - var_sq)
}

/// Population variance of the fixed-`z` Horvitz-Thompson error.
pub fn fixed_z_variance(z: &[f64], pi: &[f64]) -> f64 {
    z.iter()
        .zip(pi)
        .map(|(&zk, &pk)| (1.0 - pk) * zk * zk / pk)
        .sum()
}

/// Estimated fourth central moment of the sampling error of the Hájek mean.
pub fn poisson_fourth_moment(y: &[f64], pi: &[f64]) -> Result<f64> {
    let (y_bar, n_hat) = direct_mean(y, pi)?;
    let z: Vec<f64> = y.iter().map(|yk| (yk - y_bar) / n_hat).collect();
    Ok(centered_fourth_moment(&z, pi))
}

/// All design-based moments plus the excess-kurtosis estimate for one area.
///
/// Fails with [`Error::UndefinedKurtosis`] when the estimated variance is
/// zero (all weights 1, or no dispersion), since κ̂ divides by `v²`.
pub fn sampling_kurtosis(y: &[f64], pi: &[f64]) -> Result<SurveyMoments> {
    let (y_bar, n_hat) = direct_mean(y, pi)?;
    let v = poisson_variance(y, pi)?;
    let mu4 = poisson_fourth_moment(y, pi)?;
    if v <= 0.0 {
        return Err(Error::UndefinedKurtosis(
            "estimated design variance is zero, so kurtosis is undefined \
             (census sample or no dispersion)"
                .into(),
        ));
    }
    let kappa_unclamped = mu4 / (v * v) - 3.0;
    Ok(SurveyMoments {
        y_bar,
        n_hat,
        v,
        mu4,
        kappa_e: kappa_unclamped.max(-2.0),
        kappa_unclamped,
    })
}
