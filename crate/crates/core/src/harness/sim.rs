use std::ops::Range;
use std::thread;

use thiserror::Error;

use crate::adversary::{AttackStrategy, InterceptResend, NoAttack, Qmm};
use crate::analysis::{AnalysisError, RunStatistics, Tally};
use crate::protocol::{run_round_bb84, run_round_lm05, run_round_pingpong, Protocol, RoundRecord, RoundSettings};
use crate::rng::RoundRng;

use super::config::{AttackKind, ConfigError, RunConfig};
use super::oracle::eve_model_for;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{source}; {hint}")]
    InsufficientSamples { source: AnalysisError, hint: String },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Analysis(AnalysisError),
}

impl From<AnalysisError> for HarnessError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::NoControlSamples => HarnessError::InsufficientSamples {
                source: e,
                hint: "increase --rounds or --control-prob".into(),
            },
            AnalysisError::NoMessageSamples => HarnessError::InsufficientSamples {
                source: e,
                hint: "increase --rounds or lower --control-prob".into(),
            },
            other => HarnessError::Analysis(other),
        }
    }
}

/// Result of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub config: RunConfig,
    pub tally: Tally,
    pub statistics: RunStatistics,
    /// Every round in index order, kept when `rounds <= record_limit`.
    pub records: Option<Vec<RoundRecord>>,
}

/// Executes round `index` of `config` with the given strategy.
pub fn run_round<A: AttackStrategy>(config: &RunConfig, attack: &A, index: u64) -> RoundRecord {
    let mut rng = RoundRng::new(config.master_seed, index);
    let settings = RoundSettings {
        control_prob: config.control_prob,
        backward_check: config.backward_check,
    };
    match config.protocol {
        Protocol::Lm05 => run_round_lm05(&mut rng, &settings, attack),
        Protocol::PingPong => run_round_pingpong(&mut rng, &settings, attack),
        Protocol::Bb84 => run_round_bb84(&mut rng, attack),
    }
}

fn run_range<A: AttackStrategy>(
    config: &RunConfig,
    attack: &A,
    range: Range<u64>,
    keep: bool,
) -> (Tally, Vec<RoundRecord>) {
    let mut tally = Tally::default();
    let mut records = Vec::new();
    for index in range {
        let record = run_round(config, attack, index);
        tally.add(&record);
        if keep {
            records.push(record);
        }
    }
    (tally, records)
}

/// Splits `0..n` into `parts` contiguous ranges.
fn partition(n: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = (parts as u64).clamp(1, n.max(1));
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn run_with<A: AttackStrategy>(config: &RunConfig, attack: &A) -> (Tally, Option<Vec<RoundRecord>>) {
    let keep = config.rounds <= config.record_limit;
    let ranges = partition(config.rounds, config.workers);
    let parts: Vec<(Tally, Vec<RoundRecord>)> = if ranges.len() == 1 {
        vec![run_range(config, attack, ranges[0].clone(), keep)]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .into_iter()
                .map(|r| scope.spawn(move || run_range(config, attack, r, keep)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .collect()
        })
    };
    let mut tally = Tally::default();
    let mut records = keep.then(Vec::new);
    for (part, recs) in parts {
        tally.merge(&part);
        if let Some(all) = records.as_mut() {
            all.extend(recs);
        }
    }
    (tally, records)
}

/// Runs `config.rounds` rounds and aggregates them.
///
/// Round `i` always draws from the stream keyed by `(master_seed, i)`, so
/// results are identical for every worker count.
pub fn run_simulation(config: &RunConfig) -> Result<Simulation, HarnessError> {
    config.validate()?;
    let (tally, records) = match config.attack {
        AttackKind::None => run_with(config, &NoAttack),
        AttackKind::InterceptResend => run_with(
            config,
            &InterceptResend {
                fraction: config.attack_fraction,
                both_paths: config.ir_both_paths,
            },
        ),
        AttackKind::Qmm => run_with(
            config,
            &Qmm {
                fraction: config.attack_fraction,
                pair_probe: config.pingpong_probe,
            },
        ),
    };
    let statistics = RunStatistics::from_tally(config.protocol, &tally, eve_model_for(config))?;
    Ok(Simulation {
        config: config.clone(),
        tally,
        statistics,
        records,
    })
}
