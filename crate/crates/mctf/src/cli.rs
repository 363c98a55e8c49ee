//! Command-line front end: synthetic data generation, mask sampling,
//! completion runs, quality metrics and batch experiments.
//!
//! Exit codes are part of the contract: 0 on success, 2 for usage or input
//! errors, 3 for numerical divergence. The `MCTF_THREADS` environment
//! variable sizes the worker pool used to run experiment grid cells; it
//! never affects numerical results or output ordering.

use crate::data::{
    apply_mask, load_mask, load_tensor, rank_heuristic, sample_uniform, save_mask, save_tensor,
    synth_mctf, RANK_FRACTION_DEFAULT,
};
use crate::metrics::{quality_report, QualityReport};
use crate::solver::{
    solve, CompletionResult, Init, SolverConfig, Variant, C_RATIO_DEFAULT,
};
use crate::tensor::Tensor3;
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Thread-count environment variable. Only parallel scheduling is affected;
/// results are identical for any value.
pub const THREADS_ENV: &str = "MCTF_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mctf",
    about = "Low-rank tensor completion by multi-modal core tensor factorization",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth tensor plus its factor sidecar.
    Synth(SynthArgs),
    /// Sample a uniform observation mask for a tensor.
    Mask(MaskArgs),
    /// Complete a partially observed tensor.
    Complete(CompleteArgs),
    /// Compare two tensors with PSNR/SSIM/ERGAS/SAM.
    Metrics(MetricsArgs),
    /// Run a mask -> complete -> metrics grid from a JSON spec.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Tensor shape as n1,n2,n3.
    #[arg(long, value_parser = parse_shape)]
    shape: (usize, usize, usize),
    /// Per-mode ranks as r1,r2,r3.
    #[arg(long, value_parser = parse_shape)]
    ranks: (usize, usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of elementwise Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Output TNS1 path; the factors go to <out>.factors.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MaskArgs {
    /// Tensor whose shape the mask is for.
    #[arg(long)]
    input: PathBuf,
    /// Sampling ratio in [0, 1].
    #[arg(long)]
    sr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output mask path (conventionally .msk).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompleteArgs {
    /// Zero-filled observation tensor (TNS1).
    #[arg(long)]
    input: PathBuf,
    /// Observation mask (.msk).
    #[arg(long)]
    mask: PathBuf,
    /// Penalty variant.
    #[arg(long, default_value = "mctf")]
    variant: Variant,
    /// "auto" or fixed ranks r1,r2,r3.
    #[arg(long, default_value = "auto")]
    ranks: RanksArg,
    /// JSON file with solver settings (flat SolverConfig keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path for the completed tensor (TNS1).
    #[arg(long)]
    out: PathBuf,
    /// Run record path; defaults to <out>.run.json.
    #[arg(long)]
    record_out: Option<PathBuf>,
    /// Optional objective trace CSV (iter, objective, rel_change).
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Reference tensor (TNS1).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Estimate tensor (TNS1).
    #[arg(long)]
    est: PathBuf,
    /// Dynamic-range scalar for PSNR/SSIM.
    #[arg(long)]
    peak: f64,
    /// ERGAS scale ratio.
    #[arg(long, default_value_t = 1.0)]
    scale_ratio: f64,
    /// Report JSON path; per-slice CSV goes to <out>.slices.csv unless
    /// --slices-out is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    slices_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Clone)]
enum RanksArg {
    Auto,
    Fixed([usize; 3]),
}

impl std::str::FromStr for RanksArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(RanksArg::Auto);
        }
        let (a, b, c) = parse_shape(s)?;
        Ok(RanksArg::Fixed([a, b, c]))
    }
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<_> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got {s:?}"));
    }
    let mut v = [0usize; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|e| format!("bad dimension {p:?}: {e}"))?;
    }
    Ok((v[0], v[1], v[2]))
}

/// Partial solver settings as stored in a JSON config file. Keys mirror the
/// `SolverConfig` fields; `tau` may instead be derived as
/// `c_ratio * lambda`. Command-line flags override file values.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfigFile {
    pub variant: Option<Variant>,
    pub ranks: Option<[usize; 3]>,
    pub alpha: Option<[f64; 3]>,
    pub tau: Option<[f64; 3]>,
    pub lambda: Option<[f64; 3]>,
    /// Ratio tau_n / lambda_n used when `tau` itself is absent.
    pub c_ratio: Option<f64>,
    pub rho: Option<[f64; 3]>,
    pub rho_growth: Option<f64>,
    pub mu_max: Option<f64>,
    pub log_eps: Option<f64>,
    pub stop_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub init: Option<Init>,
}

impl SolverConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidArgument(format!("bad config file {}: {e}", path.display()))
        })
    }

    /// Overlays the file on top of defaults for the given variant/ranks.
    pub fn build(&self, variant: Variant, ranks: [usize; 3]) -> SolverConfig {
        let variant = self.variant.unwrap_or(variant);
        let ranks = self.ranks.unwrap_or(ranks);
        let mut config = SolverConfig::new(variant, ranks);
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        if let Some(lambda) = self.lambda {
            config.lambda = lambda;
        }
        config.tau = match self.tau {
            Some(tau) => tau,
            None => {
                let c = self.c_ratio.unwrap_or(C_RATIO_DEFAULT);
                config.lambda.map(|l| c * l)
            }
        };
        if let Some(rho) = self.rho {
            config.rho = rho;
        }
        if let Some(v) = self.rho_growth {
            config.rho_growth = v;
        }
        if let Some(v) = self.mu_max {
            config.mu_max = v;
        }
        if let Some(v) = self.log_eps {
            config.log_eps = v;
        }
        if let Some(v) = self.stop_tol {
            config.stop_tol = v;
        }
        if let Some(v) = self.max_iter {
            config.max_iter = v;
        }
        if let Some(v) = self.init {
            config.init = v;
        }
        config
    }
}

/// Everything that affected one completion run, for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: String,
    pub input: String,
    pub mask: String,
    pub sr: f64,
    /// Mask seed when the mask was drawn inside this process.
    pub seed: Option<u64>,
    pub ranks: [usize; 3],
    pub config: SolverConfig,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub quality: Option<QualityReport>,
    pub trace_path: Option<String>,
}

/// Batch experiment description: the cross product of inputs, sampling
/// ratios, variants and mask seeds, one CSV row per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub inputs: Vec<String>,
    pub srs: Vec<f64>,
    pub variants: Vec<String>,
    pub seeds: Vec<u64>,
    /// Fixed ranks; absent means the per-mode count heuristic on the
    /// zero-filled observation.
    #[serde(default)]
    pub ranks: Option<[usize; 3]>,
    /// PSNR/SSIM peak; absent means the dynamic range of each input.
    #[serde(default)]
    pub peak: Option<f64>,
    #[serde(default = "default_scale_ratio")]
    pub scale_ratio: f64,
    #[serde(default)]
    pub config: Option<SolverConfigFile>,
    pub out_csv: String,
}

fn default_scale_ratio() -> f64 {
    1.0
}

pub const EXPERIMENT_CSV_HEADER: &str =
    "input,sr,variant,seed,r1,r2,r3,iterations,converged,psnr,ssim,ergas,sam";

fn factors_sidecar_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".factors.json");
    PathBuf::from(os)
}

fn derived_path(out: &Path, suffix: &str) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

#[derive(Serialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    /// Column-major entries.
    data: Vec<f64>,
}

#[derive(Serialize)]
struct TensorJson {
    shape: (usize, usize, usize),
    data: Vec<f64>,
}

#[derive(Serialize)]
struct FactorsSidecar {
    seed: u64,
    ranks: (usize, usize, usize),
    noise_sigma: f64,
    alpha: [f64; 3],
    x: Vec<MatrixJson>,
    g: Vec<TensorJson>,
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let (tensor, factors) = synth_mctf(args.shape, args.ranks, args.seed, args.noise)?;
    save_tensor(&tensor, &args.out)?;
    let sidecar = FactorsSidecar {
        seed: args.seed,
        ranks: args.ranks,
        noise_sigma: args.noise,
        alpha: factors.alpha,
        x: factors
            .x
            .iter()
            .map(|m| MatrixJson {
                rows: m.nrows(),
                cols: m.ncols(),
                data: m.as_slice().to_vec(),
            })
            .collect(),
        g: factors
            .g
            .iter()
            .map(|t| TensorJson {
                shape: t.shape(),
                data: t.data().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(factors_sidecar_path(&args.out), json)?;
    Ok(())
}

fn cmd_mask(args: &MaskArgs) -> Result<()> {
    let tensor = load_tensor(&args.input)?;
    let mask = sample_uniform(tensor.shape(), args.sr, args.seed)?;
    save_mask(&mask, &args.out)
}

fn resolve_ranks(ranks: &RanksArg, observed: &Tensor3) -> Result<[usize; 3]> {
    match ranks {
        RanksArg::Fixed(r) => Ok(*r),
        RanksArg::Auto => {
            let (a, b, c) = rank_heuristic(observed, RANK_FRACTION_DEFAULT)?;
            Ok([a, b, c])
        }
    }
}

fn write_trace(path: &Path, result: &CompletionResult) -> Result<()> {
    let mut text = String::from("iter,objective,rel_change\n");
    for (k, (obj, rc)) in result
        .objective_trace
        .iter()
        .zip(&result.rel_change_trace)
        .enumerate()
    {
        writeln!(text, "{},{},{}", k + 1, obj, rc).expect("string write");
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_complete(args: &CompleteArgs) -> Result<()> {
    let input = load_tensor(&args.input)?;
    let mask = load_mask(&args.mask)?;
    if input.shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "input {:?} vs mask {:?}",
            input.shape(),
            mask.shape()
        )));
    }
    // The solver expects the zero-filled observation; enforce that here so
    // inputs that carry values off the mask behave identically.
    let observed = apply_mask(&input, &mask)?;
    let ranks = resolve_ranks(&args.ranks, &observed)?;
    let file = match &args.config {
        Some(path) => SolverConfigFile::load(path)?,
        None => SolverConfigFile::default(),
    };
    let mut config = file.build(args.variant, ranks);
    // Flags override the file.
    config.variant = args.variant;
    if let RanksArg::Fixed(r) = args.ranks {
        config.ranks = r;
    }

    let start = Instant::now();
    let result = solve(&observed, &mask, &config)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    save_tensor(&result.y_hat, &args.out)?;
    let trace_path = match &args.trace_out {
        Some(path) => {
            write_trace(path, &result)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let record = RunRecord {
        variant: config.variant.as_str().to_string(),
        input: args.input.display().to_string(),
        mask: args.mask.display().to_string(),
        sr: mask.sr(),
        seed: None,
        ranks: config.ranks,
        config: config.clone(),
        iterations: result.iterations,
        converged: result.converged,
        wall_time_s,
        quality: None,
        trace_path,
    };
    let record_path = args
        .record_out
        .clone()
        .unwrap_or_else(|| derived_path(&args.out, ".run.json"));
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    std::fs::write(record_path, json)?;
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let reference = load_tensor(&args.reference)?;
    let estimate = load_tensor(&args.est)?;
    let report = quality_report(&reference, &estimate, args.peak, args.scale_ratio)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&args.out, json)?;

    let slices_path = args
        .slices_out
        .clone()
        .unwrap_or_else(|| derived_path(&args.out, ".slices.csv"));
    let mut text = String::from("slice,psnr,ssim,fsim\n");
    for k in 0..report.per_slice_psnr.len() {
        writeln!(
            text,
            "{},{},{},",
            k, report.per_slice_psnr[k], report.per_slice_ssim[k]
        )
        .expect("string write");
    }
    std::fs::write(slices_path, text)?;
    Ok(())
}

/// Dynamic range of a tensor, used as the default PSNR peak.
fn dynamic_range(t: &Tensor3) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in t.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range > 0.0 {
        range
    } else {
        1.0
    }
}

struct ExperimentCell {
    input_idx: usize,
    sr: f64,
    variant: Variant,
    seed: u64,
}

struct ExperimentRow {
    input: String,
    sr: f64,
    variant: Variant,
    seed: u64,
    ranks: [usize; 3],
    iterations: usize,
    converged: bool,
    report: QualityReport,
}

/// Runs the full grid and returns the CSV text (also written to
/// `spec.out_csv`). Cells run in parallel; row order follows the grid
/// definition.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<String> {
    if spec.inputs.is_empty() || spec.srs.is_empty() || spec.variants.is_empty() || spec.seeds.is_empty()
    {
        return Err(Error::InvalidArgument(
            "experiment spec needs at least one input, sr, variant and seed".into(),
        ));
    }
    for &sr in &spec.srs {
        if !(0.0..=1.0).contains(&sr) {
            return Err(Error::InvalidArgument(format!(
                "sampling ratio {sr} outside [0, 1]"
            )));
        }
    }
    let variants: Vec<Variant> = spec
        .variants
        .iter()
        .map(|v| v.parse())
        .collect::<Result<_>>()?;

    let tensors: Vec<Tensor3> = spec
        .inputs
        .iter()
        .map(load_tensor)
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (input_idx, _) in spec.inputs.iter().enumerate() {
        for &sr in &spec.srs {
            for &variant in &variants {
                for &seed in &spec.seeds {
                    cells.push(ExperimentCell {
                        input_idx,
                        sr,
                        variant,
                        seed,
                    });
                }
            }
        }
    }

    let rows: Vec<Result<ExperimentRow>> = cells
        .par_iter()
        .map(|cell| -> Result<ExperimentRow> {
            let reference = &tensors[cell.input_idx];
            let mask = sample_uniform(reference.shape(), cell.sr, cell.seed)?;
            let observed = apply_mask(reference, &mask)?;
            let ranks = match spec.ranks {
                Some(r) => r,
                None => {
                    let (a, b, c) = rank_heuristic(&observed, RANK_FRACTION_DEFAULT)?;
                    [a, b, c]
                }
            };
            let config = spec
                .config
                .clone()
                .unwrap_or_default()
                .build(cell.variant, ranks);
            let mut config = config;
            config.variant = cell.variant;
            config.ranks = ranks;
            let result = solve(&observed, &mask, &config)?;
            let peak = spec.peak.unwrap_or_else(|| dynamic_range(reference));
            let report = quality_report(reference, &result.y_hat, peak, spec.scale_ratio)?;
            Ok(ExperimentRow {
                input: spec.inputs[cell.input_idx].clone(),
                sr: cell.sr,
                variant: cell.variant,
                seed: cell.seed,
                ranks,
                iterations: result.iterations,
                converged: result.converged,
                report,
            })
        })
        .collect();

    let mut csv = String::from(EXPERIMENT_CSV_HEADER);
    csv.push('\n');
    for row in rows {
        let row = row?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.input,
            row.sr,
            row.variant.as_str(),
            row.seed,
            row.ranks[0],
            row.ranks[1],
            row.ranks[2],
            row.iterations,
            row.converged,
            row.report.psnr,
            row.report.ssim,
            row.report.ergas,
            row.report.sam
        )
        .expect("string write");
    }
    std::fs::write(&spec.out_csv, &csv)?;
    Ok(csv)
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)?;
    let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidArgument(format!("bad experiment spec {}: {e}", args.spec.display()))
    })?;
    run_experiment(&spec)?;
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } | Error::NumericalConsistency(_) => 3,
        _ => 2,
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|e| format!("{THREADS_ENV}={raw:?} is not a thread count: {e}"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be at least 1"));
    }
    // Ignore a second initialization (tests may run several commands in
    // one process).
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Binary entry point.
pub fn run() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Mask(args) => cmd_mask(args),
        Command::Complete(args) => cmd_complete(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
