//! `sae` — small-area EBLUP fitting, MSPE estimation, kurtosis estimation,
//! and Monte Carlo studies from the command line.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sae::{
    estimate_kappa_v, estimate_mspe, estimate_psi, fit_gls, predict_eblup, run_study,
    sampling_kurtosis, AreaDataset, DesignSpec, DistributionKind, KappaVSource, PsiMethod,
    SolverConfig, StudyConfig,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sae",
    version,
    about = "Small-area estimation: EBLUP under the Fay-Herriot model with \
             kurtosis-robust MSPE estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Prasad-Rao moment estimator of the area-effect variance.
    Pr,
    /// Fay-Herriot moment-equation estimator.
    Fh,
}

impl From<MethodArg> for PsiMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pr => PsiMethod::PrasadRao,
            MethodArg::Fh => PsiMethod::FayHerriot,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model and write per-area EBLUPs as CSV.
    Fit(FitArgs),
    /// Fit the model and write per-area MSPE estimates as CSV.
    Mspe(MspeArgs),
    /// Estimate the area-effect kurtosis by the delete-one jackknife.
    Kurtosis(KurtosisArgs),
    /// Estimate per-area sampling-error kurtosis from unit-level data.
    UnitKurtosis(UnitKurtosisArgs),
    /// Run a Monte Carlo study of the MSPE estimator families.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Area-level dataset CSV (header: id,y,D,kappa_e,x1,...,xp).
    input: PathBuf,
    /// Variance-component estimator.
    #[arg(long, value_enum, default_value = "pr")]
    method: MethodArg,
    /// Output CSV path (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MspeArgs {
    /// Area-level dataset CSV (header: id,y,D,kappa_e,x1,...,xp).
    input: PathBuf,
    /// Variance-component estimator.
    #[arg(long, value_enum, default_value = "pr")]
    method: MethodArg,
    /// Area-effect kurtosis for the FH robust estimator: `auto` for the
    /// jackknife, or a fixed value. Invalid with --method pr.
    #[arg(long)]
    kappa_v: Option<String>,
    /// Output CSV path (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct KurtosisArgs {
    /// Area-level dataset CSV (header: id,y,D,kappa_e,x1,...,xp).
    input: PathBuf,
    /// Output path (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct UnitKurtosisArgs {
    /// Unit-level sample CSV (header: area_id,y,pi).
    input: PathBuf,
    /// Output CSV path (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of areas.
    #[arg(long)]
    m: usize,
    /// Sampling-variance pattern: `balanced:<D>` or `type2`.
    #[arg(long)]
    design: String,
    /// True area-effect variance.
    #[arg(long)]
    psi: f64,
    /// Area-effect distribution: normal | double-exponential | shifted-exponential.
    #[arg(long)]
    dist_v: String,
    /// Sampling-error distribution: normal | double-exponential | shifted-exponential.
    #[arg(long)]
    dist_e: String,
    /// Number of Monte Carlo replicates.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Variance-component estimator.
    #[arg(long, value_enum, default_value = "pr")]
    method: MethodArg,
    /// Master seed for the replicate substreams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path for the long-format summary (the aligned text table
    /// always goes to stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Open the output sink: a file when a path is given, stdout otherwise.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(
            std::fs::File::create(p)
                .with_context(|| format!("cannot create output file {}", p.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn read_dataset(path: &Path) -> Result<AreaDataset> {
    let data = sae::io::read_area_csv(path)
        .with_context(|| format!("cannot read dataset {}", path.display()))?;
    for warning in data.regularity_warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(data)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let data = read_dataset(&args.input)?;
    let solver = SolverConfig::default();
    let psi = estimate_psi(&data, args.method.into(), &solver)?;
    let fit = fit_gls(&data, psi.value)?;
    let predictions = predict_eblup(&data, psi.value, &fit);
    let out = open_output(args.output.as_deref())?;
    sae::io::write_fit_csv(out, &data, psi.value, &predictions)?;
    Ok(())
}

fn parse_kappa_v(raw: Option<&str>) -> Result<Option<KappaVSource>> {
    match raw {
        None => Ok(None),
        Some("auto") => Ok(Some(KappaVSource::Jackknife)),
        Some(text) => {
            let value: f64 = text
                .parse()
                .map_err(|_| anyhow!("--kappa-v must be 'auto' or a number, got '{text}'"))?;
            Ok(Some(KappaVSource::Fixed(value)))
        }
    }
}

fn cmd_mspe(args: &MspeArgs) -> Result<()> {
    let data = read_dataset(&args.input)?;
    let kappa_v = parse_kappa_v(args.kappa_v.as_deref())?;
    let solver = SolverConfig::default();
    let report = estimate_mspe(&data, args.method.into(), kappa_v, &solver)?;
    let out = open_output(args.output.as_deref())?;
    sae::io::write_mspe_csv(out, &data, &report)?;
    Ok(())
}

fn cmd_kurtosis(args: &KurtosisArgs) -> Result<()> {
    let data = read_dataset(&args.input)?;
    let est = estimate_kappa_v(&data, &SolverConfig::default())?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "psi_hat_fh,{}", est.psi)?;
    writeln!(out, "v_wj,{}", est.v_wj)?;
    writeln!(out, "kappa_v_unclamped,{}", est.unclamped)?;
    writeln!(out, "kappa_v,{}", est.value)?;
    writeln!(out, "unstable,{}", est.unstable)?;
    Ok(())
}

fn cmd_unit_kurtosis(args: &UnitKurtosisArgs) -> Result<()> {
    let samples = sae::io::read_unit_csv(&args.input)
        .with_context(|| format!("cannot read unit data {}", args.input.display()))?;
    let mut rows = Vec::with_capacity(samples.len());
    for sample in &samples {
        let moments = sampling_kurtosis(&sample.y, &sample.pi)
            .with_context(|| format!("area '{}'", sample.area_id))?;
        rows.push((sample.area_id.clone(), moments));
    }
    let out = open_output(args.output.as_deref())?;
    sae::io::write_unit_kurtosis_csv(out, &rows)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let design: DesignSpec = args.design.parse()?;
    let dist_v: DistributionKind = args.dist_v.parse()?;
    let dist_e: DistributionKind = args.dist_e.parse()?;
    let cfg = StudyConfig {
        m: args.m,
        design,
        psi_true: args.psi,
        dist_v,
        dist_e,
        replicates: args.reps,
        method: args.method.into(),
        master_seed: args.seed,
    };
    let result = run_study(&cfg)?;
    if let Some(path) = &args.output {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create output file {}", path.display()))?;
        sae::io::write_study_csv(file, &result)?;
    }
    print!("{}", sae::format_study_table(&result));
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("SAE_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| anyhow!("SAE_THREADS must be a positive integer, got '{raw}'"))?;
        if n == 0 {
            return Err(anyhow!("SAE_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure thread pool")?;
    }
    Ok(())
}

fn run() -> Result<()> {
    configure_threads()?;
    let cli = Cli::parse();
    match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Mspe(args) => cmd_mspe(args),
        Command::Kurtosis(args) => cmd_kurtosis(args),
        Command::UnitKurtosis(args) => cmd_unit_kurtosis(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
