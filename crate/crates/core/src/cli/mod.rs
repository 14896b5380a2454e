//! Command-line front end: `rooms train`, `rooms eval` and `rooms table1`.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 I/O failure,
//! 4 training divergence (non-finite loss).

mod output;

pub use output::{
    attention_csv, load_policy, metrics_jsonl, save_policy, table_csv, table_markdown, write_file, PolicyFile, TableRow,
    POLICY_FORMAT,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{evaluate_seeds, run_experiment, AgentError, AgentKind, CellSummary, EvalReport, TrainConfig};
use crate::env::{EnvConfig, EnvError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("training diverged: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Diverged(m) => CliError::Diverged(m),
            AgentError::Env(EnvError::Io(m)) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// One Table 1 cell: which agent, at what capacity, on which configs.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub env_config: PathBuf,
    pub train_config: PathBuf,
    pub agent: String,
    pub capacity: usize,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// A manifest with configs loaded and CLI overrides applied.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub agent: AgentKind,
    pub capacity: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Run only this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Agent kind: humemai, humemai-episodic-only, humemai-semantic-only, baseline.
    #[arg(long)]
    pub agent: Option<String>,
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Training episodes per phase.
    #[arg(long)]
    pub episodes: Option<usize>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Loads referenced configs and applies overrides. Every invariant
    /// violation is reported as a config error.
    pub fn resolve(&self, base: &Path, ov: &Overrides) -> Result<ResolvedRun, CliError> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let env_path = at(&self.env_config);
        let train_path = at(&self.train_config);
        for p in [&env_path, &train_path] {
            if !p.is_file() {
                return Err(CliError::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        let env = EnvConfig::from_path(&env_path).map_err(|e| CliError::Config(format!("{}: {e}", env_path.display())))?;
        let text = std::fs::read_to_string(&train_path).map_err(|e| CliError::Config(format!("{}: {e}", train_path.display())))?;
        let mut train = TrainConfig::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", train_path.display())))?;
        let agent_name = ov.agent.as_deref().unwrap_or(&self.agent);
        let agent = AgentKind::parse(agent_name).ok_or_else(|| CliError::Config(format!("unknown agent kind {agent_name:?}")))?;
        let capacity = ov.capacity.unwrap_or(self.capacity);
        if capacity == 0 {
            return Err(CliError::Config("capacity must be positive".into()));
        }
        if let Some(e) = ov.episodes {
            train.episodes_per_phase = e;
        }
        let seeds = match ov.seed {
            Some(s) => vec![s],
            None if !self.seeds.is_empty() => self.seeds.clone(),
            None => train.seeds.clone(),
        };
        if seeds.is_empty() {
            return Err(CliError::Config("no seeds given".into()));
        }
        let output_dir = ov.out.clone().unwrap_or_else(|| at(&self.output_dir));
        Ok(ResolvedRun {
            env,
            train,
            agent,
            capacity,
            seeds,
            output_dir,
        })
    }
}

pub fn load_manifest(path: &Path, ov: &Overrides) -> Result<ResolvedRun, CliError> {
    let m = RunManifest::load(path)?;
    m.resolve(path.parent().unwrap_or(Path::new(".")), ov)
}

#[derive(Debug, Parser)]
#[command(name = "rooms", about = "Train and evaluate memory agents in the Rooms environment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one agent per seed, then evaluate it greedily.
    Train {
        /// Run manifest (TOML).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate a saved policy on the given env seeds.
    Eval {
        /// `policy.json` written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Environment config (TOML or JSON).
        #[arg(long)]
        config: PathBuf,
        /// Env seeds, one episode each.
        #[arg(long = "seed", required = true, num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long, default_value = "test")]
        label: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every manifest's cell and write the Table 1 reproduction.
    Table1 {
        /// One manifest per cell.
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn write_report(dir: &Path, stem: &str, report: &EvalReport) -> Result<(), CliError> {
    write_file(&dir.join(format!("{stem}.json")), &serde_json::to_string_pretty(report).expect("report serializes"))?;
    write_file(&dir.join(format!("{stem}_attention.csv")), &attention_csv(report))?;
    if let Some(dot) = &report.final_memory_dot {
        write_file(&dir.join(format!("{stem}_memory.dot")), dot)?;
    }
    Ok(())
}

/// Seed results of one run: (phase-one mean, final mean) test rewards.
fn train_run(run: &ResolvedRun, quiet: bool) -> Result<Vec<(Option<f64>, f64)>, CliError> {
    let mut results = Vec::new();
    for &seed in &run.seeds {
        let dir = run.output_dir.join(format!("seed-{seed}"));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let out = run_experiment(&run.env, &run.train, run.agent, run.capacity, seed, &mut |row| {
            if !quiet && row.eval_reward.is_some() {
                eprintln!(
                    "[{} cap {} seed {seed}] {} episode {} eval {:.1}",
                    run.agent,
                    run.capacity,
                    row.phase,
                    row.episode,
                    row.eval_reward.unwrap_or(0.0)
                );
            }
        })?;
        write_file(&dir.join("metrics.jsonl"), &metrics_jsonl(&out.metrics))?;
        save_policy(&dir, &out.policy)?;
        write_report(&dir, "eval", &out.report)?;
        if let Some(p1) = &out.phase1_report {
            write_report(&dir, "phase1_eval", p1)?;
        }
        results.push((out.phase1_report.map(|r| r.mean), out.report.mean));
    }
    let summary = CellSummary::new(run.agent, run.capacity, run.seeds.clone(), results.iter().map(|r| r.1).collect());
    write_file(
        &run.output_dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(results)
}

pub fn cmd_train(config: &Path, ov: &Overrides) -> Result<(), CliError> {
    let run = load_manifest(config, ov)?;
    train_run(&run, false).map(|_| ())
}

pub fn cmd_eval(checkpoint: &Path, env_config: &Path, seeds: &[u64], label: &str, out: &Path) -> Result<(), CliError> {
    let policy = load_policy(checkpoint)?;
    let env = EnvConfig::from_path(env_config).map_err(|e| CliError::Config(format!("{}: {e}", env_config.display())))?;
    let report = evaluate_seeds(&policy, &env, seeds, label).map_err(|e| match e {
        AgentError::Nn(n) => CliError::Config(format!("checkpoint does not fit this environment: {n}")),
        other => other.into(),
    })?;
    write_report(out, label, &report)
}

pub fn cmd_table1(configs: &[PathBuf], ov: &Overrides) -> Result<(), CliError> {
    let runs: Vec<ResolvedRun> = configs.iter().map(|c| load_manifest(c, ov)).collect::<Result<_, _>>()?;
    let out_dir = ov
        .out
        .clone()
        .or_else(|| runs.first().and_then(|r| r.output_dir.parent().map(Path::to_path_buf)))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut rows = Vec::new();
    let mut first_err: Option<CliError> = None;
    for run in &runs {
        let mut run = run.clone();
        if ov.out.is_some() {
            run.output_dir = out_dir.join(format!("{}-{}", run.agent, run.capacity));
        }
        let mut row = TableRow {
            capacity: run.capacity,
            agent: run.agent,
            phase1: Vec::new(),
            phase2: Vec::new(),
            failure: None,
        };
        match train_run(&run, false) {
            Ok(results) => {
                row.phase1 = results.iter().filter_map(|r| r.0).collect();
                row.phase2 = results.iter().map(|r| r.1).collect();
            }
            Err(e) => {
                row.failure = Some(e.to_string());
                first_err.get_or_insert(e);
            }
        }
        rows.push(row);
    }
    write_file(&out_dir.join("table1.md"), &table_markdown(&rows))?;
    write_file(&out_dir.join("table1.csv"), &table_csv(&rows))?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, overrides } => cmd_train(&config, &overrides),
        Command::Eval {
            checkpoint,
            config,
            seeds,
            label,
            out,
        } => cmd_eval(&checkpoint, &config, &seeds, &label, &out),
        Command::Table1 { configs, overrides } => cmd_table1(&configs, &overrides),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
