use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pinning_cli::{
    parse_grid, parse_n_list, run, CliError, CliResult, Command, CommandOptions, ExperimentManifest, ModelConfig,
    TOOL_VERSION,
};

/// Numerics for pinning of a renewal process at a defect site with i.i.d.
/// disorder.
///
/// Exit status: 0 success, 2 configuration error, 3 numerical error,
/// 4 inconclusive statistics.
#[derive(Parser, Debug)]
#[command(name = "pinning", version)]
struct Args {
    /// Command to run; may be omitted when --manifest is given.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Re-run a manifest written by an earlier run; model and grid flags
    /// are then ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Model file: {"law": {...}, "disorder": {...}}.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<f64>,

    /// Inverse temperatures lo:hi:step.
    #[arg(long)]
    beta_grid: Option<String>,

    #[arg(long, allow_hyphen_values = true, conflicts_with = "u_grid")]
    u: Option<f64>,

    /// Pinning strengths lo:hi:step.
    #[arg(long, allow_hyphen_values = true)]
    u_grid: Option<String>,

    #[arg(long, conflicts_with = "n_list")]
    n: Option<usize>,

    /// Comma-separated system sizes.
    #[arg(long)]
    n_list: Option<String>,

    #[arg(long, default_value_t = 32)]
    replicas: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    delta: Option<f64>,

    #[arg(long)]
    eta: Option<f64>,

    /// Number of path draws (sample).
    #[arg(long, default_value_t = 1)]
    draws: usize,

    /// One-sided confidence level of statistical tests.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,

    /// Target width of quenched critical-point intervals.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn manifest(args: &Args) -> CliResult<ExperimentManifest> {
    if let Some(path) = &args.manifest {
        let mut m: ExperimentManifest = read_json(path)?;
        if let Some(c) = args.command {
            m.command = c;
        }
        return Ok(m);
    }
    let command = args
        .command
        .ok_or_else(|| CliError::Config("a command or --manifest is required".into()))?;
    let config = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let model: ModelConfig = read_json(config)?;
    let beta = match &args.beta_grid {
        Some(g) => parse_grid(g)?,
        None => vec![args.beta.unwrap_or(1.0)],
    };
    let u = match &args.u_grid {
        Some(g) => parse_grid(g)?,
        None => vec![args.u.unwrap_or(0.0)],
    };
    let n = match &args.n_list {
        Some(s) => parse_n_list(s)?,
        None => vec![args.n.unwrap_or(1024)],
    };
    Ok(ExperimentManifest {
        tool_version: TOOL_VERSION.into(),
        command,
        model,
        beta,
        u,
        n,
        replicas: args.replicas,
        seed: args.seed,
        options: CommandOptions {
            delta: args.delta,
            eta: args.eta,
            draws: args.draws,
            confidence: args.confidence,
            tol: args.tol,
        },
        outputs: Vec::new(),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(pinning_cli::EXIT_CONFIG as u8);
        }
    }
    let result = manifest(&args).and_then(|m| run(&m, &args.out));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.inconclusive {
                eprintln!("inconclusive: a statistical estimate did not reach the requested precision");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
