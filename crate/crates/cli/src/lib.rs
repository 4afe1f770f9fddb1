//! Experiment manifests and the command runners behind the `pinning` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pinning_core::critical::{self, classify_phase, one_sided_z, EstimateStatus, QuenchedConfig};
use pinning_core::extreal;
use pinning_core::partition::{contact_resolved, DEFAULT_CONTACT_CAP};
use pinning_core::rng::derive_seed;
use pinning_core::sampler::{block_stats, good_block_diagnostic, PathSampler};
use pinning_core::tail_bounds::{corollary17_verdict, optimize_threshold};
use pinning_core::{
    free_energy_annealed, free_energy_det, free_energy_quenched_mc, DisorderLaw, DisorderSpec, ExcursionLaw,
    ExcursionSpec, PinningError, PinningSystem,
};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Largest system size accepted by any command.
pub const MAX_N: usize = 1 << 20;
pub const MAX_REPLICAS: usize = 1 << 16;
pub const MAX_GRID: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FeDet,
    FeAnnealed,
    FeQuenched,
    Critical,
    LdCheck,
    Sample,
    Lowerbound,
    PhaseScan,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FeDet => "fe-det",
            Command::FeAnnealed => "fe-annealed",
            Command::FeQuenched => "fe-quenched",
            Command::Critical => "critical",
            Command::LdCheck => "ld-check",
            Command::Sample => "sample",
            Command::Lowerbound => "lowerbound",
            Command::PhaseScan => "phase-scan",
        }
    }
}

fn degenerate() -> DisorderSpec {
    DisorderLaw::degenerate().spec().clone()
}

/// `{"law": {...}, "disorder": {...}}`; the disorder defaults to `V ≡ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub law: ExcursionSpec,
    #[serde(default = "degenerate")]
    pub disorder: DisorderSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandOptions {
    /// Lower edge of the contact-density window (`ld-check`, `sample`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Upper edge of the contact-density window (`ld-check`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Target width of quenched critical-point intervals.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_draws() -> usize {
    1
}
fn default_confidence() -> f64 {
    0.95
}
fn default_tol() -> f64 {
    0.01
}

impl Default for CommandOptions {
    fn default() -> Self {
        Self {
            delta: None,
            eta: None,
            draws: default_draws(),
            confidence: default_confidence(),
            tol: default_tol(),
        }
    }
}

/// Everything needed to reproduce a run; the thread count is deliberately
/// absent because outputs do not depend on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool_version: String,
    pub command: Command,
    pub model: ModelConfig,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    pub n: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub options: CommandOptions,
    /// Files written by the run, relative to the output directory.
    #[serde(default)]
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<PinningError> for CliError {
    fn from(e: PinningError) -> Self {
        match e {
            PinningError::Io(e) => CliError::Io(e.to_string()),
            PinningError::Csv(e) => CliError::Io(e.to_string()),
            e if e.is_config() => CliError::Config(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `lo:hi:step` into `lo, lo + step, ...` up to `hi` inclusive.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Config(format!("grid must be lo:hi:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(CliError::Config(format!("invalid grid {s:?}: need finite lo <= hi and step > 0")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID {
        return Err(CliError::Config(format!("grid {s:?} has {count} points, limit {MAX_GRID}")));
    }
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// Parses a comma-separated list of sizes.
pub fn parse_n_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("invalid size {p:?} in {s:?}")))
        })
        .collect()
}

fn validate(m: &ExperimentManifest) -> CliResult<()> {
    if m.beta.is_empty() || m.u.is_empty() || m.n.is_empty() {
        return Err(CliError::Config("beta, u and n lists must be nonempty".into()));
    }
    if let Some(b) = m.beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(CliError::Config(format!("beta must be finite and nonnegative, got {b}")));
    }
    if matches!(m.command, Command::Critical | Command::PhaseScan) && m.beta.contains(&0.0) {
        return Err(CliError::Config(format!("{} needs beta > 0", m.command.name())));
    }
    if let Some(u) = m.u.iter().find(|u| !u.is_finite()) {
        return Err(CliError::Config(format!("u must be finite, got {u}")));
    }
    if let Some(n) = m.n.iter().find(|&&n| n == 0 || n > MAX_N) {
        return Err(CliError::Config(format!("n must lie in [1, {MAX_N}], got {n}")));
    }
    if m.replicas > MAX_REPLICAS {
        return Err(CliError::Config(format!("at most {MAX_REPLICAS} replicas, got {}", m.replicas)));
    }
    Ok(())
}

struct Model {
    law: ExcursionLaw,
    disorder: DisorderLaw,
}

impl Model {
    fn new(cfg: &ModelConfig) -> CliResult<Self> {
        Ok(Self {
            law: ExcursionLaw::new(cfg.law.clone())?,
            disorder: DisorderLaw::new(cfg.disorder.clone())?,
        })
    }

    fn system(&self, beta: f64, u: f64) -> CliResult<PinningSystem> {
        Ok(PinningSystem::new(beta, u, self.law.clone(), self.disorder.clone())?)
    }
}

/// Result of a successful run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Some statistical result did not reach the requested precision.
    pub inconclusive: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

fn fmt(x: f64) -> String {
    extreal::format(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

struct Csv {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Csv {
    fn create(dir: &Path, name: &str, header: &[&str]) -> CliResult<Self> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, cells: &[String]) -> CliResult<()> {
        Ok(self.writer.write_record(cells)?)
    }

    fn finish(mut self, outcome: &mut Outcome) -> CliResult<()> {
        self.writer.flush()?;
        outcome.files.push(self.path);
        Ok(())
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outcome: &mut Outcome) -> CliResult<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    outcome.files.push(path);
    Ok(())
}

fn check_finite(x: f64, what: &str) -> CliResult<()> {
    if x.is_nan() {
        Err(CliError::Numeric(format!("{what} evaluated to NaN")))
    } else {
        Ok(())
    }
}

const FE_HEADER: [&str; 11] = [
    "u",
    "beta",
    "n",
    "method",
    "value",
    "stderr",
    "replicas",
    "seed",
    "argmax_delta",
    "replica_sd",
    "finite_size_correction",
];

fn fe_row(u: f64, beta: f64, e: &pinning_core::FreeEnergyEstimate, seed: u64) -> Vec<String> {
    vec![
        fmt(u),
        fmt(beta),
        e.n.to_string(),
        e.method.as_str().into(),
        fmt(e.value),
        fmt(e.stderr),
        e.samples.to_string(),
        e.seed.unwrap_or(seed).to_string(),
        opt(e.argmax_delta),
        opt(e.replica_sd),
        opt(e.finite_size_correction),
    ]
}

/// Runs a manifest, writing every artifact plus the resolved manifest into
/// `out`.
pub fn run(manifest: &ExperimentManifest, out: &Path) -> CliResult<Outcome> {
    validate(manifest)?;
    let model = Model::new(&manifest.model)?;
    fs::create_dir_all(out)?;
    let mut outcome = Outcome::default();
    match manifest.command {
        Command::FeDet => fe_det(manifest, &model, out, &mut outcome)?,
        Command::FeAnnealed => fe_annealed(manifest, &model, out, &mut outcome)?,
        Command::FeQuenched => fe_quenched(manifest, &model, out, &mut outcome)?,
        Command::Critical => critical_cmd(manifest, &model, out, &mut outcome)?,
        Command::LdCheck => ld_check(manifest, &model, out, &mut outcome)?,
        Command::Sample => sample(manifest, &model, out, &mut outcome)?,
        Command::Lowerbound => lowerbound(manifest, &model, out, &mut outcome)?,
        Command::PhaseScan => phase_scan(manifest, &model, out, &mut outcome)?,
    }
    let mut resolved = manifest.clone();
    resolved.tool_version = TOOL_VERSION.into();
    resolved.outputs = outcome
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    resolved.outputs.push(MANIFEST_FILE.into());
    write_json(out, MANIFEST_FILE, &resolved, &mut outcome)?;
    Ok(outcome)
}

fn fe_det(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let mut csv = Csv::create(out, "fe-det.csv", &FE_HEADER)?;
    for &beta in &m.beta {
        for &u in &m.u {
            let e = free_energy_det(beta, u, &model.law);
            check_finite(e.value, "deterministic free energy")?;
            csv.row(&fe_row(u, beta, &e, m.seed))?;
        }
    }
    csv.finish(o)
}

fn fe_annealed(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let mut csv = Csv::create(out, "fe-annealed.csv", &FE_HEADER)?;
    for &beta in &m.beta {
        for &u in &m.u {
            let e = free_energy_annealed(beta, u, &model.law, &model.disorder)?;
            check_finite(e.value, "annealed free energy")?;
            csv.row(&fe_row(u, beta, &e, m.seed))?;
        }
    }
    csv.finish(o)
}

fn fe_quenched(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let mut csv = Csv::create(out, "fe-quenched.csv", &FE_HEADER)?;
    for &beta in &m.beta {
        for &u in &m.u {
            let sys = model.system(beta, u)?;
            for &n in &m.n {
                let e = free_energy_quenched_mc(&sys, n, m.replicas, m.seed)?;
                check_finite(e.value, "quenched free energy")?;
                csv.row(&fe_row(u, beta, &e, m.seed))?;
            }
        }
    }
    csv.finish(o)
}

fn quenched_config(m: &ExperimentManifest) -> QuenchedConfig {
    QuenchedConfig {
        n_list: m.n.clone(),
        replicas: m.replicas,
        confidence: m.options.confidence,
        seed: m.seed,
        tol: m.options.tol,
        ..QuenchedConfig::default()
    }
}

fn critical_cmd(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let cfg = quenched_config(m);
    let mut reports = Vec::new();
    for &beta in &m.beta {
        let quenched = (m.replicas >= 2).then_some(&cfg);
        let r = critical::critical_report(beta, &model.law, &model.disorder, &m.u, quenched)?;
        if r.u_c_quenched.as_ref().is_some_and(|q| q.status == EstimateStatus::Inconclusive) {
            o.inconclusive = true;
        }
        reports.push(r);
    }
    write_json(out, "critical.json", &reports, o)
}

#[derive(Serialize)]
struct LdRow {
    delta: f64,
    eta: f64,
    rate: f64,
}

fn ld_check(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let (delta, eta) = match (m.options.delta, m.options.eta) {
        (Some(d), Some(e)) => (d, e),
        _ => return Err(CliError::Config("ld-check needs --delta and --eta".into())),
    };
    let rate = critical::ld_rate_contacts(&model.law, delta, eta)?;
    let mut csv = Csv::create(out, "ld-check.csv", &["delta", "eta", "n", "method", "value", "seed"])?;
    csv.row(&[fmt(delta), fmt(eta), "0".into(), "variational".into(), fmt(rate), m.seed.to_string()])?;
    // the rate concerns the free chain, so every finite-n check uses β = 0
    let free = PinningSystem::deterministic(0.0, 0.0, model.law.clone())?;
    for &n in &m.n {
        let cr = contact_resolved(&free, &pinning_core::DisorderRealization::zeros(n), n, DEFAULT_CONTACT_CAP)?;
        let log_p = cr.window(delta, eta);
        csv.row(&[
            fmt(delta),
            fmt(eta),
            n.to_string(),
            "contact_resolved".into(),
            fmt(-log_p / n as f64),
            m.seed.to_string(),
        ])?;
    }
    write_json(out, "ld-check.json", &LdRow { delta, eta, rate }, o)?;
    csv.finish(o)
}

fn sample(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let (beta, u, n) = (m.beta[0], m.u[0], m.n[0]);
    let sys = model.system(beta, u)?;
    let realization = model.disorder.sample(n, m.seed);
    let sampler = PathSampler::new(&sys, &realization, n)?;
    let draw_seed = derive_seed(m.seed, 1);
    let paths = sampler.draw_many(m.options.draws, draw_seed);
    let has_blocks = model.law.r2().is_some();
    let mut summary = Csv::create(
        out,
        "sample-summary.csv",
        &["draw", "contacts", "escaped", "num_blocks", "good_blocks", "targets_hit", "seed", "n", "method"],
    )?;
    let mut returns = Csv::create(out, "sample-paths.csv", &["draw", "j", "return_time", "seed", "n", "method"])?;
    for (i, p) in paths.iter().enumerate() {
        let (nb, gb, th) = if has_blocks {
            let b = block_stats(p, &model.law)?;
            (b.num_blocks.to_string(), b.good_blocks.to_string(), b.targets_hit.to_string())
        } else {
            Default::default()
        };
        summary.row(&[
            i.to_string(),
            p.contacts().to_string(),
            p.escaped.to_string(),
            nb,
            gb,
            th,
            m.seed.to_string(),
            n.to_string(),
            "backward".into(),
        ])?;
        for (j, t) in p.return_times.iter().enumerate() {
            returns.row(&[
                i.to_string(),
                (j + 1).to_string(),
                t.to_string(),
                m.seed.to_string(),
                n.to_string(),
                "backward".into(),
            ])?;
        }
    }
    summary.finish(o)?;
    returns.finish(o)?;
    if let Some(delta) = m.options.delta {
        let report = good_block_diagnostic(&sys, &realization, n, delta, m.options.draws, draw_seed)?;
        if report.status == EstimateStatus::Inconclusive {
            o.inconclusive = true;
        }
        write_json(out, "good-blocks.json", &report, o)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LowerboundReport {
    verdict: pinning_core::VerdictReport,
    bounds: Vec<pinning_core::StrategyBound>,
}

fn lowerbound(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    let replicas = m.replicas.max(1);
    let mut csv = Csv::create(
        out,
        "lowerbound.csv",
        &[
            "u", "beta", "n", "method", "replica", "m", "l1", "j_plus", "j_minus", "log_z_lower", "per_site_rate", "seed",
        ],
    )?;
    let mut bounds = Vec::new();
    let n_max = *m.n.iter().max().expect("validated");
    for &beta in &m.beta {
        for &u in &m.u {
            let sys = model.system(beta, u)?;
            for r in 0..replicas {
                let seed = derive_seed(m.seed, r as u64);
                let realization = model.disorder.sample(n_max, seed);
                for &n in &m.n {
                    let b = optimize_threshold(&sys, &realization, n)?;
                    csv.row(&[
                        fmt(u),
                        fmt(beta),
                        n.to_string(),
                        "greedy_optimized".into(),
                        r.to_string(),
                        fmt(b.m),
                        b.l1.to_string(),
                        b.j_plus.len().to_string(),
                        b.j_minus.len().to_string(),
                        fmt(b.log_z_lower),
                        fmt(b.per_site_rate),
                        seed.to_string(),
                    ])?;
                    if r == 0 && n == n_max {
                        bounds.push(b);
                    }
                }
            }
        }
    }
    csv.finish(o)?;
    let report = LowerboundReport {
        verdict: corollary17_verdict(&model.law, &model.disorder),
        bounds,
    };
    write_json(out, "lowerbound.json", &report, o)
}

fn phase_scan(m: &ExperimentManifest, model: &Model, out: &Path, o: &mut Outcome) -> CliResult<()> {
    if m.replicas < 2 {
        return Err(CliError::Config("phase-scan needs at least 2 replicas".into()));
    }
    let n = *m.n.iter().max().expect("validated");
    let z = one_sided_z(m.options.confidence);
    let mut csv = Csv::create(out, "phase-scan.csv", &["beta", "u", "phase", "n", "method", "replicas", "seed"])?;
    for &beta in &m.beta {
        for &u in &m.u {
            let phase = classify_phase(beta, u, &model.law, &model.disorder, n, m.replicas, m.seed, z)?;
            csv.row(&[
                fmt(beta),
                fmt(u),
                phase.as_str().into(),
                n.to_string(),
                "quenched_test".into(),
                m.replicas.to_string(),
                m.seed.to_string(),
            ])?;
        }
    }
    csv.finish(o)
}
