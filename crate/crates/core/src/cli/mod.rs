//! Command-line frontend.
//!
//! Settings come from flags, then the `--config` TOML file, then defaults.
//! The resolved [`RunConfig`] is hashed and the hash is written into every
//! output; output directory, worker count and verbosity are not part of it,
//! so the same configuration gives byte-identical files on any machine.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("acfid ", env!("CARGO_PKG_VERSION"));

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const RESOURCE: i32 = 3;
}

#[derive(Parser, Debug)]
#[command(name = "acfid", version, about = "Detect avoided crossings through the fidelity change S_n(lambda)")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML file with [global] and per-command sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Probe step for S; defaults to a hundredth of the grid step.
    #[arg(long = "delta-lambda", global = true)]
    pub delta_lambda: Option<f64>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Fixed peak threshold on S; defaults to the spacing rule.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Histogram bins for densities and width histograms.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Two-level crossing H = lambda sigma_z + g sigma_x against the closed form.
    TwoLevel(TwoLevelArgs),
    /// Three coupled levels with diagonal (-lambda, 0, lambda).
    Triple(TripleArgs),
    /// Width statistics of cos(l) H1 + sin(l) H2 with GOE H1, H2.
    Rmt(RmtArgs),
    /// Tilted Bose-Hubbard ring (Floquet) or chain, swept over 1/F.
    BoseHubbard(BoseHubbardArgs),
    /// Re-run detection and statistics on saved sweeps.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelArgs {
    /// Coupling; the crossing width is 2g.
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleArgs {
    /// Coupling of levels 1 and 2.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Coupling of levels 1 and 3.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Coupling of levels 2 and 3.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmtArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of independent (H1, H2) pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Ring in the accelerated frame; Floquet quasienergies.
    Periodic,
    /// Open chain with a static tilt.
    Hardwall,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoseHubbardArgs {
    /// Particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sites.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub inv_f_min: Option<f64>,
    #[arg(long)]
    pub inv_f_max: Option<f64>,
    /// Quasimomentum sector index k (kappa = 2 pi k / L).
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, value_enum)]
    pub boundary: Option<Boundary>,
    #[arg(long)]
    pub basis_cap: Option<usize>,
    /// Integrator steps per operator; 0 calibrates by step doubling.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Windows in 1/F for chi-squared and density, e.g. "5:10,20:40".
    #[arg(long)]
    pub windows: Option<String>,
    #[arg(long)]
    pub chi2_bins: Option<usize>,
    /// Fit the chaotic weight gamma to the widths.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fit_gamma: Option<bool>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    /// Sweep files (.csv or .json of a saved pair).
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGlobal {
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    delta_lambda: Option<f64>,
    grid: Option<usize>,
    threshold: Option<f64>,
    bins: Option<usize>,
    verbose: Option<u8>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    global: FileGlobal,
    two_level: Option<TwoLevelArgs>,
    triple: Option<TripleArgs>,
    rmt: Option<RmtArgs>,
    bose_hubbard: Option<BoseHubbardArgs>,
    analyze: Option<AnalyzeArgs>,
}

macro_rules! overlay {
    ($a:expr, $b:expr; $($f:ident),*) => {{
        let (a, b) = ($a, $b);
        $( let $f = a.$f.or(b.$f); )*
        ($($f),*)
    }};
}

/// Detection and histogram settings; `analyze` may change only these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub threshold: Option<f64>,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelConfig {
    pub g: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleConfig {
    pub a: f64,
    pub b: f64,
    pub c_coupling: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmtConfig {
    pub dim: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoseHubbardConfig {
    pub n: usize,
    pub l: usize,
    pub j: f64,
    pub u: f64,
    pub inv_f_min: f64,
    pub inv_f_max: f64,
    pub kappa: usize,
    pub boundary: Boundary,
    pub basis_cap: usize,
    pub steps: usize,
    pub windows: Vec<(f64, f64)>,
    pub chi2_bins: usize,
    pub fit_gamma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandConfig {
    TwoLevel(TwoLevelConfig),
    Triple(TripleConfig),
    Rmt(RmtConfig),
    BoseHubbard(BoseHubbardConfig),
    Analyze(AnalyzeConfig),
}

/// Everything that determines the content of the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool_version: String,
    pub seed: u64,
    pub grid: usize,
    pub delta_lambda: Option<f64>,
    pub analysis: AnalysisConfig,
    #[serde(flatten)]
    pub command: CommandConfig,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Settings that do not affect output content.
#[derive(Debug, Clone, PartialEq)]
pub struct Runtime {
    pub out: PathBuf,
    pub workers: usize,
    pub verbose: u8,
}

pub fn parse_windows(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("window '{part}' is not lo:hi")))?;
        let lo: f64 = a.trim().parse().map_err(|_| Error::invalid(format!("bad window bound '{a}'")))?;
        let hi: f64 = b.trim().parse().map_err(|_| Error::invalid(format!("bad window bound '{b}'")))?;
        if !(hi > lo) {
            return Err(Error::invalid(format!("window {lo}:{hi} is empty")));
        }
        out.push((lo, hi));
    }
    Ok(out)
}

fn read_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Merge flags, config file and defaults.
pub fn resolve(cli: &Cli) -> Result<(RunConfig, Runtime)> {
    let file = read_file_config(cli.global.config.as_ref())?;
    let g = &cli.global;
    let fg = file.global.clone();
    let runtime = Runtime {
        out: g.out.clone().or(fg.out).unwrap_or_else(|| PathBuf::from("out")),
        workers: g.workers.or(fg.workers).unwrap_or(0),
        verbose: if g.verbose > 0 { g.verbose } else { fg.verbose.unwrap_or(0) },
    };
    let grid_arg = g.grid.or(fg.grid);
    let analysis = AnalysisConfig { threshold: g.threshold.or(fg.threshold), bins: g.bins.or(fg.bins).unwrap_or(35) };
    if let Some(t) = analysis.threshold {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("threshold must be positive, got {t}")));
        }
    }
    if analysis.bins == 0 {
        return Err(Error::invalid("bins must be positive"));
    }
    let (command, grid) = match &cli.command {
        Command::TwoLevel(a) => {
            let f = file.two_level.clone().unwrap_or_default();
            let (g_, lambda_min, lambda_max) = overlay!(a.clone(), f; g, lambda_min, lambda_max);
            let c = TwoLevelConfig {
                g: g_.unwrap_or(1.0),
                lambda_min: lambda_min.unwrap_or(-5.0),
                lambda_max: lambda_max.unwrap_or(5.0),
            };
            (CommandConfig::TwoLevel(c), grid_arg.unwrap_or(2001))
        }
        Command::Triple(a) => {
            let f = file.triple.clone().unwrap_or_default();
            let (a_, b, c, lambda_min, lambda_max) = overlay!(a.clone(), f; a, b, c, lambda_min, lambda_max);
            let c = TripleConfig {
                a: a_.unwrap_or(0.0),
                b: b.unwrap_or(2.0),
                c_coupling: c.unwrap_or(3.0),
                lambda_min: lambda_min.unwrap_or(-6.0),
                lambda_max: lambda_max.unwrap_or(6.0),
            };
            (CommandConfig::Triple(c), grid_arg.unwrap_or(1201))
        }
        Command::Rmt(a) => {
            let f = file.rmt.clone().unwrap_or_default();
            let (dim, pairs) = overlay!(a.clone(), f; dim, pairs);
            let c = RmtConfig { dim: dim.unwrap_or(128), pairs: pairs.unwrap_or(40) };
            let grid = grid_arg.unwrap_or((40 * c.dim).max(100));
            (CommandConfig::Rmt(c), grid)
        }
        Command::BoseHubbard(a) => {
            let f = file.bose_hubbard.clone().unwrap_or_default();
            let (n, l, j, u, inv_f_min, inv_f_max, kappa, boundary, basis_cap, steps, windows, chi2_bins, fit_gamma) = overlay!(
                a.clone(), f;
                n, l, j, u, inv_f_min, inv_f_max, kappa, boundary, basis_cap, steps, windows, chi2_bins, fit_gamma
            );
            let c = BoseHubbardConfig {
                n: n.unwrap_or(5),
                l: l.unwrap_or(5),
                j: j.unwrap_or(0.038),
                u: u.unwrap_or(0.032),
                inv_f_min: inv_f_min.unwrap_or(5.0),
                inv_f_max: inv_f_max.unwrap_or(40.0),
                kappa: kappa.unwrap_or(0),
                boundary: boundary.unwrap_or(Boundary::Periodic),
                basis_cap: basis_cap.unwrap_or(crate::bose_hubbard::DEFAULT_BASIS_CAP),
                steps: steps.unwrap_or(0),
                windows: parse_windows(windows.as_deref().unwrap_or("5:10,10:20,20:40"))?,
                chi2_bins: chi2_bins.unwrap_or(20),
                fit_gamma: fit_gamma.unwrap_or(false),
            };
            let span = c.inv_f_max - c.inv_f_min;
            let grid = grid_arg.unwrap_or(((20.0 * span).round() as usize).max(100));
            (CommandConfig::BoseHubbard(c), grid)
        }
        Command::Analyze(a) => {
            let inputs = if a.inputs.is_empty() {
                file.analyze.clone().unwrap_or_default().inputs
            } else {
                a.inputs.clone()
            };
            if inputs.is_empty() {
                return Err(Error::invalid("analyze needs at least one sweep file"));
            }
            (CommandConfig::Analyze(AnalyzeConfig { inputs }), grid_arg.unwrap_or(0))
        }
    };
    let cfg = RunConfig {
        tool_version: TOOL_VERSION.into(),
        seed: g.seed.or(fg.seed).unwrap_or(0),
        grid,
        delta_lambda: g.delta_lambda.or(fg.delta_lambda),
        analysis,
        command,
    };
    Ok((cfg, runtime))
}

/// Map an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResourceCap { .. } => exit::RESOURCE,
        e if e.is_numerical() => exit::NUMERICAL,
        Error::Statistics(_) => exit::NUMERICAL,
        _ => exit::USAGE,
    }
}

/// Outcome of a run that finished writing its files.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    /// Set when the run finished but a check failed (exit code 2).
    pub failed_check: Option<String>,
}

/// Execute a resolved configuration inside a pool of `runtime.workers`.
pub fn execute(cfg: &RunConfig, runtime: &Runtime) -> Result<Outcome> {
    std::fs::create_dir_all(&runtime.out)
        .map_err(|e| Error::Io(format!("{}: {e}", runtime.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(runtime.workers)
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    pool.install(|| commands::run(cfg, &runtime.out))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

/// Parse `args` and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, runtime) = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    init_logging(runtime.verbose);
    match execute(&cfg, &runtime) {
        Ok(out) => {
            for a in &out.artifacts {
                println!("{}", a.display());
            }
            match out.failed_check {
                Some(msg) => {
                    eprintln!("check failed: {msg}");
                    exit::NUMERICAL
                }
                None => exit::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
