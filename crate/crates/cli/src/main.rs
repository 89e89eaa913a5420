//! `twoway`: run, sweep and cross-check two-way QKD simulations.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 insufficient control
//! or message samples, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use twoway_core::harness::{
    emit_to, run_simulation, sweep, AttackKind, ConfigError, Destination, Format, HarnessError, Report, RunConfig,
};
use twoway_core::{Probe, Protocol};

#[derive(Debug, Parser)]
#[command(
    name = "twoway",
    version,
    about = "Monte Carlo simulator for two-way QKD under eavesdropping"
)]
struct Args {
    /// Protocol to simulate: lm05, pingpong or bb84.
    #[arg(long)]
    protocol: Option<Protocol>,
    /// Eavesdropping strategy: none, ir (intercept-resend) or qmm.
    #[arg(long)]
    attack: Option<AttackKind>,
    /// Probability that a round is attacked.
    #[arg(long)]
    fraction: Option<f64>,
    /// Probability of a control-mode round.
    #[arg(long = "control-prob")]
    control_prob: Option<f64>,
    /// Number of rounds per run.
    #[arg(long)]
    rounds: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated attack fractions; one run per value.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Emit exact enumeration values alongside the estimates.
    #[arg(long)]
    oracle: bool,
    /// Output format: json or csv.
    #[arg(long, default_value = "json")]
    format: Format,
    /// Output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` config file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Substitute qubit used by QMM against Ping-Pong: zero or plus.
    #[arg(long = "pingpong-probe")]
    pingpong_probe: Option<Probe>,
    /// Intercept-resend also attacks the backward leg.
    #[arg(long = "ir-both-paths")]
    ir_both_paths: bool,
    /// LM05: include the backward leg in the control-mode check.
    #[arg(long = "backward-check")]
    backward_check: bool,
    /// Keep full round records only up to this many rounds.
    #[arg(long = "record-limit")]
    record_limit: Option<u64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Harness(HarnessError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Harness(HarnessError::InsufficientSamples { .. }) => 3,
            CliError::Harness(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Config(c),
            other => CliError::Harness(other),
        }
    }
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        config.apply_file_str(&text)?;
    }
    if let Some(p) = args.protocol {
        config.protocol = p;
    }
    if let Some(a) = args.attack {
        config.attack = a;
    }
    if let Some(f) = args.fraction {
        config.attack_fraction = f;
    }
    if let Some(c) = args.control_prob {
        config.control_prob = c;
    }
    if let Some(n) = args.rounds {
        config.rounds = n;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(p) = args.pingpong_probe {
        config.pingpong_probe = p;
    }
    if let Some(l) = args.record_limit {
        config.record_limit = l;
    }
    config.ir_both_paths |= args.ir_both_paths;
    config.backward_check |= args.backward_check;
    config.validate()?;
    Ok(config)
}

fn run(args: &Args) -> Result<(), CliError> {
    let config = build_config(args)?;
    let destination = match &args.out {
        Some(path) => Destination::File(path.clone()),
        None => Destination::Stdout,
    };
    let (report, point_failure) = match &args.sweep {
        Some(grid) => {
            let table = sweep(&config, grid)?;
            let failure = table.points.iter().find_map(|p| p.outcome.clone().err());
            (Report::sweep(table, args.oracle), failure)
        }
        None => (Report::run(run_simulation(&config)?, args.oracle), None),
    };
    emit_to(&report, args.format, &destination).map_err(|source| CliError::Io {
        context: "writing output".into(),
        source,
    })?;
    match point_failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twoway: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
