//! Monte Carlo study engine for the MSPE estimators.
//!
//! Each study draws `R` independent replicates of the model
//! `Y_i = v_i + e_i` (intercept-only mean, still estimated), fits the
//! chosen variance-component estimator, predicts the EBLUPs, and computes
//! every MSPE-estimator family per replicate. The true MSPE of each area is
//! the Monte Carlo mean of `(θ̂_i − θ_i)²` over the same replicates, and
//! the per-area relative bias and relative squared error,
//!
//! ```text
//! RB_i    = 100 · (E(mspe_i) − MSPE_i)/MSPE_i
//! RRMSE_i = 100 · E[(mspe_i − MSPE_i)²]/MSPE_i
//! ```
//!
//! are averaged over areas sharing a sampling variance. Monte Carlo
//! standard errors for RB come from a delta-method linearization and are
//! reported alongside.
//!
//! Randomness is drawn from counter-based substreams keyed by
//! `(master_seed, replicate, area, variable)`, so a study is bit-for-bit
//! reproducible no matter how many threads execute it.

use crate::error::{Error, Result};
use crate::kurtosis;
use crate::model::AreaDataset;
use crate::mspe;
use crate::rng::{substream, StreamTag};
use crate::variance::{estimate_psi, PsiMethod, SolverConfig};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Shape of a mean-zero effect distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Gaussian; excess kurtosis 0.
    Normal,
    /// Laplace; excess kurtosis 3.
    DoubleExponential,
    /// Exponential shifted to mean zero; excess kurtosis 6, support
    /// bounded below at −σ.
    ShiftedExponential,
}

impl DistributionKind {
    /// Excess kurtosis of the shape (scale-free).
    pub fn kurtosis(self) -> f64 {
        match self {
            DistributionKind::Normal => 0.0,
            DistributionKind::DoubleExponential => 3.0,
            DistributionKind::ShiftedExponential => 6.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DistributionKind::Normal => "normal",
            DistributionKind::DoubleExponential => "double-exponential",
            DistributionKind::ShiftedExponential => "shifted-exponential",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(DistributionKind::Normal),
            "double-exponential" => Ok(DistributionKind::DoubleExponential),
            "shifted-exponential" => Ok(DistributionKind::ShiftedExponential),
            other => Err(Error::Parse(format!(
                "unknown distribution '{other}' (expected normal, \
                 double-exponential, or shifted-exponential)"
            ))),
        }
    }
}

/// A mean-zero effect distribution with a concrete variance.
#[derive(Debug, Clone, Copy)]
pub struct EffectDistribution {
    pub kind: DistributionKind,
    pub variance: f64,
}

impl EffectDistribution {
    pub fn new(kind: DistributionKind, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "effect variance must be a positive finite number, got {variance}"
            )));
        }
        Ok(EffectDistribution { kind, variance })
    }

    /// Excess kurtosis (independent of the variance).
    pub fn kurtosis(&self) -> f64 {
        self.kind.kurtosis()
    }

    /// One mean-zero draw with the configured variance.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sd = self.variance.sqrt();
        match self.kind {
            DistributionKind::Normal => {
                let z: f64 = rng.sample(StandardNormal);
                sd * z
            }
            DistributionKind::DoubleExponential => {
                // Difference of two unit exponentials is Laplace with unit
                // scale; scale b = σ/√2 gives variance 2b² = σ².
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                sd / std::f64::consts::SQRT_2 * (e1 - e2)
            }
            DistributionKind::ShiftedExponential => {
                let e: f64 = rng.sample(Exp1);
                sd * (e - 1.0)
            }
        }
    }
}

/// Sampling-variance pattern across areas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignSpec {
    /// Every area shares the sampling variance `d`.
    Balanced { d: f64 },
    /// Five equal groups with variances 2.0, 0.6, 0.5, 0.4, 0.2.
    TypeII,
}

impl fmt::Display for DesignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignSpec::Balanced { d } => write!(f, "balanced:{d}"),
            DesignSpec::TypeII => f.write_str("type2"),
        }
    }
}

impl FromStr for DesignSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "type2" {
            return Ok(DesignSpec::TypeII);
        }
        if let Some(rest) = lower.strip_prefix("balanced:") {
            let d: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("invalid balanced variance '{rest}'")))?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Parse(format!(
                    "balanced variance must be positive and finite, got {d}"
                )));
            }
            return Ok(DesignSpec::Balanced { d });
        }
        Err(Error::Parse(format!(
            "unknown design '{s}' (expected balanced:<D> or type2)"
        )))
    }
}

/// The five group sampling variances of the unbalanced (Type II) pattern.
const TYPE2_D: [f64; 5] = [2.0, 0.6, 0.5, 0.4, 0.2];

/// Sampling variances for the Type II pattern: five equal blocks of `m/5`
/// areas at 2.0, 0.6, 0.5, 0.4, 0.2.
pub fn design_type2(m: usize) -> Result<Vec<f64>> {
    if m == 0 || m % 5 != 0 {
        return Err(Error::InvalidConfig(format!(
            "Type II design needs m divisible by 5, got m = {m}"
        )));
    }
    let block = m / 5;
    let mut d = Vec::with_capacity(m);
    for value in TYPE2_D {
        d.extend(std::iter::repeat(value).take(block));
    }
    Ok(d)
}

/// Full specification of one Monte Carlo study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Number of areas.
    pub m: usize,
    /// Sampling-variance pattern.
    pub design: DesignSpec,
    /// True area-effect variance ψ.
    pub psi_true: f64,
    /// Shape of the area effects `v_i` (variance ψ).
    pub dist_v: DistributionKind,
    /// Shape of the sampling errors `e_i` (variance `D_i`).
    pub dist_e: DistributionKind,
    /// Number of replicates `R`.
    pub replicates: usize,
    /// Variance-component estimator driving the MSPE families.
    pub method: PsiMethod,
    /// Seed of every substream in the study.
    pub master_seed: u64,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 areas, got m = {}",
                self.m
            )));
        }
        if !(self.psi_true > 0.0 && self.psi_true.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "psi must be positive and finite, got {}",
                self.psi_true
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("need at least 1 replicate".into()));
        }
        if let DesignSpec::Balanced { d } = self.design {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "balanced sampling variance must be positive and finite, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Per-area sampling variances implied by the design.
    pub fn design_d(&self) -> Result<Vec<f64>> {
        match self.design {
            DesignSpec::Balanced { d } => Ok(vec![d; self.m]),
            DesignSpec::TypeII => design_type2(self.m),
        }
    }
}

/// RB/RRMSE of one estimator family over one group, with its Monte Carlo
/// standard error for RB.
#[derive(Debug, Clone, Copy)]
pub struct FamilyStat {
    /// Group-averaged relative bias, percent.
    pub rb_pct: f64,
    /// Group-averaged relative squared error, percent.
    pub rrmse_pct: f64,
    /// Monte Carlo standard error of `rb_pct`.
    pub mc_se_rb: f64,
}

/// Identifies one of the three MSPE estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorFamily {
    Naive,
    /// Normality-based second-order estimator (Prasad-Rao or
    /// Datta-Rao-Smith, depending on the ψ method).
    Normal,
    Robust,
}

impl EstimatorFamily {
    pub const ALL: [EstimatorFamily; 3] = [
        EstimatorFamily::Naive,
        EstimatorFamily::Normal,
        EstimatorFamily::Robust,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorFamily::Naive => "naive",
            EstimatorFamily::Normal => "normal",
            EstimatorFamily::Robust => "robust",
        }
    }
}

/// Summary of one group of equal-variance areas.
#[derive(Debug, Clone)]
pub struct StudyGroup {
    /// 1-based group number, in order of first appearance.
    pub group: usize,
    /// Shared sampling variance.
    pub d: f64,
    /// How many areas the group averages over.
    pub n_areas: usize,
    pub naive: FamilyStat,
    pub normal: FamilyStat,
    pub robust: FamilyStat,
}

impl StudyGroup {
    pub fn stat(&self, family: EstimatorFamily) -> &FamilyStat {
        match family {
            EstimatorFamily::Naive => &self.naive,
            EstimatorFamily::Normal => &self.normal,
            EstimatorFamily::Robust => &self.robust,
        }
    }
}

/// Study-level diagnostics aggregated over the used replicates.
#[derive(Debug, Clone)]
pub struct StudyDiagnostics {
    /// Mean fitted ψ̂ across replicates.
    pub mean_psi_hat: f64,
    /// Fraction of replicates where ψ̂ truncated at 0.
    pub truncation_rate: f64,
    /// Mean jackknife κ̂_v (FH method only).
    pub mean_kappa_v: Option<f64>,
    /// Replicates that entered the averages.
    pub replicates_used: usize,
    /// Replicates recorded and skipped after estimation failures.
    pub failed_replicates: usize,
    /// Set when fewer than 30 replicates were usable; the summaries are
    /// then too noisy to interpret.
    pub low_precision: bool,
}

/// Complete result of one Monte Carlo study.
#[derive(Debug, Clone)]
pub struct StudyResult {
    /// The configuration the study ran under.
    pub config: StudyConfig,
    /// Group summaries in first-appearance order of the D values.
    pub groups: Vec<StudyGroup>,
    /// Monte Carlo true MSPE per area.
    pub true_mspe: Vec<f64>,
    pub diagnostics: StudyDiagnostics,
}

/// Everything recorded from one successful replicate.
struct Replicate {
    sq_err: Vec<f64>,
    naive: Vec<f64>,
    normal: Vec<f64>,
    robust: Vec<f64>,
    psi_hat: f64,
    truncated: bool,
    kappa_v: Option<f64>,
}

fn run_replicate(
    cfg: &StudyConfig,
    data: &mut AreaDataset,
    dist_v: EffectDistribution,
    dist_e: &[EffectDistribution],
    solver: &SolverConfig,
    r: usize,
) -> Result<Replicate> {
    let m = cfg.m;
    let mut theta = vec![0.0; m];
    let mut y = vec![0.0; m];
    for i in 0..m {
        let mut rng_v = substream(cfg.master_seed, r as u64, i as u64, StreamTag::AreaEffect);
        let mut rng_e = substream(
            cfg.master_seed,
            r as u64,
            i as u64,
            StreamTag::SamplingError,
        );
        let v = dist_v.draw(&mut rng_v);
        let e = dist_e[i].draw(&mut rng_e);
        theta[i] = v;
        y[i] = v + e;
    }
    data.set_y(&y);
    let psi = estimate_psi(data, cfg.method, solver)?;
    let kappa_v = match cfg.method {
        PsiMethod::PrasadRao => None,
        PsiMethod::FayHerriot => {
            Some(kurtosis::estimate_kappa_v_with_psi(data, &psi, solver)?.value)
        }
    };
    let (predictions, areas) = mspe::mspe_with_psi(data, cfg.method, &psi, kappa_v)?;
    let mut sq_err = vec![0.0; m];
    for i in 0..m {
        let dev = predictions[i].theta - theta[i];
        sq_err[i] = dev * dev;
    }
    Ok(Replicate {
        sq_err,
        naive: areas.iter().map(|a| a.naive).collect(),
        normal: areas.iter().map(|a| a.normal).collect(),
        robust: areas.iter().map(|a| a.robust).collect(),
        psi_hat: psi.value,
        truncated: psi.truncated,
        kappa_v,
    })
}

/// Group areas by sampling variance (absolute tolerance `tol`), in order of
/// first appearance.
fn group_areas(d: &[f64], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &di) in d.iter().enumerate() {
        match groups.iter_mut().find(|(key, _)| (di - *key).abs() <= tol) {
            Some((_, members)) => members.push(i),
            None => groups.push((di, vec![i])),
        }
    }
    groups
}

/// Group summary of one estimator family against per-replicate truth draws.
///
/// `a[r][i]` are the MSPE estimates, `b[r][i]` the squared prediction
/// errors whose replicate mean is the true MSPE. The RB standard error
/// linearizes the ratio in both numerator and denominator.
fn family_stats(
    groups: &[(f64, Vec<usize>)],
    a: &[&[f64]],
    b: &[&[f64]],
    truth: &[f64],
    a_bar: &[f64],
) -> Result<Vec<FamilyStat>> {
    let r_used = a.len();
    let mut out = Vec::with_capacity(groups.len());
    for (_, members) in groups {
        let mut rb_sum = 0.0;
        let mut rrmse_sum = 0.0;
        for &i in members {
            if truth[i] == 0.0 {
                return Err(Error::UndefinedRatio(format!(
                    "true MSPE for area {} is zero",
                    i + 1
                )));
            }
            rb_sum += 100.0 * (a_bar[i] - truth[i]) / truth[i];
            let mut sq = 0.0;
            for draws in a {
                let dev = draws[i] - truth[i];
                sq += dev * dev;
            }
            rrmse_sum += 100.0 * (sq / r_used as f64) / truth[i];
        }
        let n = members.len() as f64;

        // Influence of replicate r on the group RB: the linearization of
        // mean_i 100(Ā_i − B̄_i)/B̄_i in (Ā, B̄) around their limits.
        let mut h_sum = 0.0;
        let mut h_sq = 0.0;
        for r in 0..r_used {
            let mut h = 0.0;
            for &i in members {
                let da = a[r][i] - a_bar[i];
                let db = b[r][i] - truth[i];
                h += 100.0 * (da - (a_bar[i] / truth[i]) * db) / truth[i];
            }
            h /= n;
            h_sum += h;
            h_sq += h * h;
        }
        let mc_se_rb = if r_used >= 2 {
            let mean = h_sum / r_used as f64;
            let var = (h_sq - r_used as f64 * mean * mean) / (r_used as f64 - 1.0);
            (var.max(0.0) / r_used as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push(FamilyStat {
            rb_pct: rb_sum / n,
            rrmse_pct: rrmse_sum / n,
            mc_se_rb,
        });
    }
    Ok(out)
}

/// Summary row produced by [`summarize`].
#[derive(Debug, Clone, Copy)]
pub struct GroupStat {
    /// 1-based group number in order of first appearance.
    pub group: usize,
    /// Shared sampling variance.
    pub d: f64,
    pub n_areas: usize,
    pub rb_pct: f64,
    pub rrmse_pct: f64,
    /// Monte Carlo standard error of the RB (truth treated as fixed).
    pub mc_se_rb: f64,
}

/// Summarize one estimator family's draws against known true MSPEs.
///
/// `draws[r][i]` is the estimate for area `i` in replicate `r`; `truth[i]`
/// the true MSPE it chases. Areas are grouped by `d` within 1e−12 and the
/// per-area RB and relative squared error are averaged within groups.
pub fn summarize(d: &[f64], truth: &[f64], draws: &[Vec<f64>]) -> Result<Vec<GroupStat>> {
    let m = d.len();
    if truth.len() != m {
        return Err(Error::InvalidConfig(format!(
            "{m} sampling variances but {} true MSPE values",
            truth.len()
        )));
    }
    if draws.is_empty() {
        return Err(Error::InvalidConfig(
            "no replicate draws to summarize".into(),
        ));
    }
    for (r, row) in draws.iter().enumerate() {
        if row.len() != m {
            return Err(Error::InvalidConfig(format!(
                "replicate {} has {} draws for {m} areas",
                r + 1,
                row.len()
            )));
        }
    }
    let r_used = draws.len();
    let groups = group_areas(d, 1e-12);
    let mut out = Vec::with_capacity(groups.len());
    for (g, (key, members)) in groups.iter().enumerate() {
        let mut rb_sum = 0.0;
        let mut rrmse_sum = 0.0;
        let mut a_bar = vec![0.0; members.len()];
        for (slot, &i) in members.iter().enumerate() {
            if truth[i] == 0.0 {
                return Err(Error::UndefinedRatio(format!(
                    "true MSPE for area {} is zero",
                    i + 1
                )));
            }
            let mut mean = 0.0;
            let mut sq = 0.0;
            for row in draws {
                mean += row[i];
                let dev = row[i] - truth[i];
                sq += dev * dev;
            }
            mean /= r_used as f64;
            a_bar[slot] = mean;
            rb_sum += 100.0 * (mean - truth[i]) / truth[i];
            rrmse_sum += 100.0 * (sq / r_used as f64) / truth[i];
        }
        let n = members.len() as f64;
        let mut h_sum = 0.0;
        let mut h_sq = 0.0;
        for row in draws {
            let mut h = 0.0;
            for (slot, &i) in members.iter().enumerate() {
                h += 100.0 * (row[i] - a_bar[slot]) / truth[i];
            }
            h /= n;
            h_sum += h;
            h_sq += h * h;
        }
        let mc_se_rb = if r_used >= 2 {
            let mean = h_sum / r_used as f64;
            let var = (h_sq - r_used as f64 * mean * mean) / (r_used as f64 - 1.0);
            (var.max(0.0) / r_used as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push(GroupStat {
            group: g + 1,
            d: *key,
            n_areas: members.len(),
            rb_pct: rb_sum / n,
            rrmse_pct: rrmse_sum / n,
            mc_se_rb,
        });
    }
    Ok(out)
}

/// Run a full Monte Carlo study.
///
/// Replicates execute in parallel but aggregate in replicate order, so the
/// result is bit-identical for a given `master_seed` regardless of thread
/// count. Replicates whose estimation fails are recorded and skipped as
/// long as they stay under 0.1% of `R`; beyond that the study aborts,
/// reporting the first failing replicate.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let d = cfg.design_d()?;
    let kappa_e = cfg.dist_e.kurtosis();
    let template = AreaDataset::intercept_only(vec![0.0; cfg.m], d.clone(), vec![kappa_e; cfg.m])?;
    let dist_v = EffectDistribution::new(cfg.dist_v, cfg.psi_true)?;
    let dist_e: Vec<EffectDistribution> = d
        .iter()
        .map(|&di| EffectDistribution::new(cfg.dist_e, di))
        .collect::<Result<_>>()?;
    let solver = SolverConfig::default();

    let outcomes: Vec<std::result::Result<Replicate, (usize, Error)>> = (0..cfg.replicates)
        .into_par_iter()
        .map_init(
            || template.clone(),
            |data, r| run_replicate(cfg, data, dist_v, &dist_e, &solver, r).map_err(|e| (r, e)),
        )
        .collect();

    let mut used: Vec<Replicate> = Vec::with_capacity(cfg.replicates);
    let mut failures: Vec<(usize, Error)> = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(rep) => used.push(rep),
            Err(f) => failures.push(f),
        }
    }
    let failed = failures.len();
    if failed > 0 {
        let limit = 0.001 * cfg.replicates as f64;
        if (failed as f64) >= limit {
            let (r, e) = &failures[0];
            return Err(Error::StudyAborted(format!(
                "{failed} of {} replicates failed (0.1% limit); first failure at \
                 replicate {}: {e}",
                cfg.replicates,
                r + 1
            )));
        }
    }
    if used.is_empty() {
        return Err(Error::StudyAborted("every replicate failed".into()));
    }

    let r_used = used.len();
    let m = cfg.m;
    let mut truth = vec![0.0; m];
    let mut a_bar_naive = vec![0.0; m];
    let mut a_bar_normal = vec![0.0; m];
    let mut a_bar_robust = vec![0.0; m];
    for rep in &used {
        for i in 0..m {
            truth[i] += rep.sq_err[i];
            a_bar_naive[i] += rep.naive[i];
            a_bar_normal[i] += rep.normal[i];
            a_bar_robust[i] += rep.robust[i];
        }
    }
    for i in 0..m {
        truth[i] /= r_used as f64;
        a_bar_naive[i] /= r_used as f64;
        a_bar_normal[i] /= r_used as f64;
        a_bar_robust[i] /= r_used as f64;
    }

    let groups = group_areas(&d, 1e-12);
    let b_rows: Vec<&[f64]> = used.iter().map(|rep| rep.sq_err.as_slice()).collect();
    let naive_rows: Vec<&[f64]> = used.iter().map(|rep| rep.naive.as_slice()).collect();
    let normal_rows: Vec<&[f64]> = used.iter().map(|rep| rep.normal.as_slice()).collect();
    let robust_rows: Vec<&[f64]> = used.iter().map(|rep| rep.robust.as_slice()).collect();
    let naive_stats = family_stats(&groups, &naive_rows, &b_rows, &truth, &a_bar_naive)?;
    let normal_stats = family_stats(&groups, &normal_rows, &b_rows, &truth, &a_bar_normal)?;
    let robust_stats = family_stats(&groups, &robust_rows, &b_rows, &truth, &a_bar_robust)?;

    let group_summaries = groups
        .iter()
        .enumerate()
        .map(|(g, (key, members))| StudyGroup {
            group: g + 1,
            d: *key,
            n_areas: members.len(),
            naive: naive_stats[g],
            normal: normal_stats[g],
            robust: robust_stats[g],
        })
        .collect();

    let mean_psi_hat = used.iter().map(|rep| rep.psi_hat).sum::<f64>() / r_used as f64;
    let truncation_rate = used.iter().filter(|rep| rep.truncated).count() as f64 / r_used as f64;
    let mean_kappa_v = match cfg.method {
        PsiMethod::PrasadRao => None,
        PsiMethod::FayHerriot => Some(
            used.iter()
                .map(|rep| rep.kappa_v.unwrap_or(0.0))
                .sum::<f64>()
                / r_used as f64,
        ),
    };

    Ok(StudyResult {
        config: cfg.clone(),
        groups: group_summaries,
        true_mspe: truth,
        diagnostics: StudyDiagnostics {
            mean_psi_hat,
            truncation_rate,
            mean_kappa_v,
            replicates_used: r_used,
            failed_replicates: failed,
            low_precision: r_used < 30,
        },
    })
}

/// Render the study as an aligned plain-text table: one row per group,
/// three RB/RRMSE column pairs (with the RB Monte Carlo standard error).
pub fn format_study_table(result: &StudyResult) -> String {
    let cfg = &result.config;
    let diag = &result.diagnostics;
    let mut out = String::new();
    out.push_str("Monte Carlo MSPE study\n");
    out.push_str(&format!(
        "  method: {}   design: {}   m: {}   psi: {}   replicates: {}   seed: {}\n",
        cfg.method, cfg.design, cfg.m, cfg.psi_true, cfg.replicates, cfg.master_seed
    ));
    out.push_str(&format!(
        "  area effects: {}   sampling errors: {}\n",
        cfg.dist_v, cfg.dist_e
    ));
    out.push_str(&format!(
        "  replicates used: {} ({} failed)   mean psi-hat: {:.4}   truncation rate: {:.4}",
        diag.replicates_used, diag.failed_replicates, diag.mean_psi_hat, diag.truncation_rate
    ));
    if let Some(k) = diag.mean_kappa_v {
        out.push_str(&format!("   mean kappa-v-hat: {k:.4}"));
    }
    if diag.low_precision {
        out.push_str("\n  WARNING: fewer than 30 usable replicates; summaries are low-precision");
    }
    out.push_str("\n\n");

    let block = |label: &str| format!("{label:^32}");
    out.push_str(&format!(
        "{:>6} {:>8}  {}{}{}\n",
        "",
        "",
        block("naive"),
        block("normality-based"),
        block("robust")
    ));
    let sub = format!("{:>10} {:>10} {:>10} ", "RB%", "RRMSE%", "se(RB)");
    out.push_str(&format!("{:>6} {:>8}  {sub}{sub}{sub}\n", "group", "D"));
    for g in &result.groups {
        let mut row = format!("{:>6} {:>8.3}  ", format!("G{}", g.group), g.d);
        for family in EstimatorFamily::ALL {
            let s = g.stat(family);
            row.push_str(&format!(
                "{:>10.2} {:>10.2} {:>10.3} ",
                s.rb_pct, s.rrmse_pct, s.mc_se_rb
            ));
        }
        row.push('\n');
        out.push_str(&row);
    }
    out
}
