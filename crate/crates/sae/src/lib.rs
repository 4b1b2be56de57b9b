//! Small-area estimation under the Fay-Herriot area-level model, with MSPE
//! estimators that stay second-order unbiased when the random effects or
//! sampling errors are not normal.
//!
//! The model for `m` areas is
//!
//! ```text
//! Y_i = x_i'β + v_i + e_i,
//! ```
//!
//! where the sampling errors `e_i` have known variances `D_i` (and known or
//! estimable excess kurtoses `κ_{e,i}`) and the area effects `v_i` have
//! unknown variance `ψ` and excess kurtosis `κ_v`. Neither distribution is
//! assumed normal — only mean-zero with finite fourth moments.
//!
//! What the crate provides:
//!
//! * [`model`] — datasets, OLS/GLS fitting, and the (E)BLUP
//!   `θ̂_i = B_i Y_i + (1 − B_i) x_i'β̂` with `B_i = ψ̂/(ψ̂ + D_i)`;
//! * [`variance`] — the Prasad-Rao moment estimator and the Fay-Herriot
//!   moment-equation estimator of `ψ`, plus the asymptotic bias/variance
//!   expansions of both under non-normality;
//! * [`mspe`] — the g-term MSPE decomposition and the naive,
//!   normality-based (Prasad-Rao / Datta-Rao-Smith), and kurtosis-robust
//!   MSPE estimators;
//! * [`kurtosis`] — the weighted delete-one jackknife estimate of `κ_v`;
//! * [`survey`] — design-based variance and kurtosis of a weighted direct
//!   estimator under within-area Poisson sampling;
//! * [`simulation`] — a deterministic, parallel Monte Carlo study engine
//!   measuring relative bias and relative squared error of every MSPE
//!   family;
//! * [`io`] — CSV readers and writers for all of the above.
//!
//! # Example
//!
//! ```
//! use sae::{AreaDataset, PsiMethod, SolverConfig};
//!
//! let data = AreaDataset::intercept_only(
//!     vec![2.0, -2.0, 1.0, -1.0],
//!     vec![1.0; 4],
//!     vec![0.0; 4],
//! )?;
//! let report = sae::estimate_mspe(
//!     &data,
//!     PsiMethod::PrasadRao,
//!     None,
//!     &SolverConfig::default(),
//! )?;
//! assert_eq!(report.areas.len(), 4);
//! // With normal sampling errors the robust estimator reduces to the
//! // normality-based one.
//! assert_eq!(report.areas[0].robust, report.areas[0].normal);
//! # Ok::<(), sae::Error>(())
//! ```

pub mod error;
pub mod io;
pub mod kurtosis;
mod linalg;
pub mod model;
pub mod mspe;
pub mod rng;
pub mod simulation;
pub mod survey;
pub mod variance;

pub use error::{Error, Result};
pub use kurtosis::{
    estimate_kappa_v, jackknife_psi_variance, kappa_v_from_variance, JackknifeVariance,
    KappaVEstimate,
};
pub use model::{
    fit_gls, fit_ols, predict_eblup, AreaDataset, AreaRecord, GlsFit, OlsFit, Prediction,
};
pub use mspe::{amspe, estimate_mspe, g_terms, AreaMspe, GTerms, KappaVSource, MspeReport};
pub use simulation::{
    design_type2, format_study_table, run_study, summarize, DesignSpec, DistributionKind,
    EffectDistribution, EstimatorFamily, FamilyStat, GroupStat, StudyConfig, StudyDiagnostics,
    StudyGroup, StudyResult,
};
pub use survey::{
    direct_mean, poisson_fourth_moment, poisson_variance, sampling_kurtosis, SurveyMoments,
};
pub use variance::{
    c_factor, estimate_psi, estimate_psi_pr, fh_moment_residual, psi_moments, PsiEstimate,
    PsiMethod, PsiMoments, SolverConfig,
};
