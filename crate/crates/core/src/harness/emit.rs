//! JSON and CSV output.
//!
//! JSON documents carry `"schema": 1`, keys in sorted (canonical) order and
//! every float rounded to 12 significant digits, so re-serializing a parsed
//! document reproduces it byte for byte. CSV uses the fixed [`CSV_HEADER`].

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use crate::analysis::{key_rate, mutual_information_ab, EveModel, RunStatistics};

use super::config::RunConfig;
use super::oracle::{eve_model_for, exact_round_distribution, ExactDistribution};
use super::sim::{HarnessError, Simulation};
use super::sweep::SweepTable;

pub const SCHEMA_VERSION: u64 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

pub const CSV_HEADER: [&str; 27] = [
    "protocol",
    "attack",
    "fraction",
    "control_prob",
    "rounds",
    "seed",
    "status",
    "rounds_mm",
    "rounds_cm",
    "rounds_cm_matched",
    "e_cm",
    "e_cm_ci_low",
    "e_cm_ci_high",
    "qber_mm",
    "qber_mm_ci_low",
    "qber_mm_ci_high",
    "i_ab",
    "i_e",
    "f_hat",
    "key_rate",
    "aborted",
    "eve_accuracy",
    "e_cm_exact",
    "qber_mm_exact",
    "eve_accuracy_exact",
    "key_rate_exact",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// Exact distribution plus the key rate obtained by pushing it through the
/// same estimator pipeline as the Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    #[serde(flatten)]
    pub distribution: ExactDistribution,
    pub i_ab: f64,
    pub i_e: f64,
    pub key_rate: f64,
}

impl OracleReport {
    pub fn for_config(config: &RunConfig) -> Self {
        let distribution = exact_round_distribution(config);
        let model = eve_model_for(config);
        let qber = distribution.qber_mm_exact;
        let i_ab = mutual_information_ab(qber).unwrap_or(0.0);
        let i_e = model
            .eve_information(distribution.e_cm_exact, qber)
            .expect("oracle rates lie in [0, 1]");
        OracleReport {
            distribution,
            i_ab,
            i_e,
            key_rate: key_rate(i_ab, i_e),
        }
    }
}

// One report per invocation, so the unboxed run variant costs nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Run {
        simulation: Simulation,
        oracle: Option<OracleReport>,
    },
    Sweep {
        table: SweepTable,
        oracle: Vec<Option<OracleReport>>,
    },
}

impl Report {
    pub fn run(simulation: Simulation, with_oracle: bool) -> Self {
        let oracle = with_oracle.then(|| OracleReport::for_config(&simulation.config));
        Report::Run { simulation, oracle }
    }

    pub fn sweep(table: SweepTable, with_oracle: bool) -> Self {
        let oracle = table
            .points
            .iter()
            .map(|p| with_oracle.then(|| OracleReport::for_config(&p.config)))
            .collect();
        Report::Sweep { table, oracle }
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn fmt_float(x: f64) -> String {
    round_sig(x).to_string()
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *n = Number::from_f64(round_sig(x)).expect("finite float");
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn config_echo(config: &RunConfig) -> Value {
    // Worker count and record retention do not influence results.
    json!({
        "protocol": config.protocol,
        "attack": config.attack,
        "fraction": config.attack_fraction,
        "control_prob": config.control_prob,
        "rounds": config.rounds,
        "seed": config.master_seed,
        "pingpong_probe": config.pingpong_probe,
        "ir_both_paths": config.ir_both_paths,
        "backward_check": config.backward_check,
    })
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn statistics_value(stats: &RunStatistics) -> Value {
    let mut v = to_value(stats);
    if matches!(stats.eve_model, EveModel::BinaryChannel { .. }) {
        v["eve_model"]["convention"] =
            Value::String("artifact: calibrated on the exact fully-attacked distribution".into());
    }
    v
}

/// The JSON document for `report`.
pub fn to_json_value(report: &Report) -> Value {
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    match report {
        Report::Run { simulation, oracle } => {
            doc.insert("kind".into(), json!("run"));
            doc.insert("config".into(), config_echo(&simulation.config));
            doc.insert("statistics".into(), statistics_value(&simulation.statistics));
            if let Some(o) = oracle {
                doc.insert("oracle".into(), to_value(o));
            }
        }
        Report::Sweep { table, oracle } => {
            doc.insert("kind".into(), json!("sweep"));
            doc.insert("config".into(), config_echo(&table.template));
            let points = table
                .points
                .iter()
                .zip(oracle)
                .map(|(p, o)| {
                    let mut point = Map::new();
                    point.insert("index".into(), json!(p.index));
                    point.insert("fraction".into(), json!(p.config.attack_fraction));
                    point.insert("seed".into(), json!(p.config.master_seed));
                    match &p.outcome {
                        Ok(stats) => {
                            point.insert("status".into(), json!("ok"));
                            point.insert("statistics".into(), statistics_value(stats));
                        }
                        Err(e) => {
                            point.insert("status".into(), json!(status_of(e)));
                            point.insert("error".into(), json!(e.to_string()));
                        }
                    }
                    if let Some(o) = o {
                        point.insert("oracle".into(), to_value(o));
                    }
                    Value::Object(point)
                })
                .collect();
            doc.insert("points".into(), Value::Array(points));
        }
    }
    let mut doc = Value::Object(doc);
    round_floats(&mut doc);
    doc
}

pub fn to_json_string(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&to_json_value(report)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn status_of(e: &HarnessError) -> &'static str {
    match e {
        HarnessError::InsufficientSamples { .. } => "insufficient_samples",
        _ => "error",
    }
}

fn csv_row(
    config: &RunConfig,
    outcome: Result<&RunStatistics, &HarnessError>,
    oracle: Option<&OracleReport>,
) -> Vec<String> {
    let mut row = vec![
        config.protocol.to_string(),
        config.attack.to_string(),
        fmt_float(config.attack_fraction),
        fmt_float(config.control_prob),
        config.rounds.to_string(),
        config.master_seed.to_string(),
    ];
    match outcome {
        Ok(s) => {
            row.push("ok".into());
            row.extend([s.rounds_mm, s.rounds_cm, s.rounds_cm_matched].map(|n| n.to_string()));
            row.extend(
                [
                    s.e_cm.rate,
                    s.e_cm.ci_low,
                    s.e_cm.ci_high,
                    s.qber_mm.rate,
                    s.qber_mm.ci_low,
                    s.qber_mm.ci_high,
                    s.i_ab,
                    s.i_e,
                    s.f_hat,
                    s.key_rate,
                ]
                .map(fmt_float),
            );
            row.push(s.aborted.to_string());
            row.push(s.eve_empirical_accuracy.map(fmt_float).unwrap_or_default());
        }
        Err(e) => {
            row.push(status_of(e).into());
            row.extend(std::iter::repeat_n(String::new(), 15));
        }
    }
    match oracle {
        Some(o) => {
            row.push(fmt_float(o.distribution.e_cm_exact));
            row.push(fmt_float(o.distribution.qber_mm_exact));
            row.push(o.distribution.eve_accuracy_exact.map(fmt_float).unwrap_or_default());
            row.push(fmt_float(o.key_rate));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
    row.push(outcome.err().map(|e| e.to_string()).unwrap_or_default());
    debug_assert_eq!(row.len(), CSV_HEADER.len());
    row
}

pub fn write_csv<W: Write>(report: &Report, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    match report {
        Report::Run { simulation, oracle } => {
            w.write_record(csv_row(&simulation.config, Ok(&simulation.statistics), oracle.as_ref()))?;
        }
        Report::Sweep { table, oracle } => {
            for (p, o) in table.points.iter().zip(oracle) {
                w.write_record(csv_row(&p.config, p.outcome.as_ref(), o.as_ref()))?;
            }
        }
    }
    w.flush()
}

/// Serializes `report` in `format` into `out`.
pub fn emit<W: Write>(report: &Report, format: Format, mut out: W) -> io::Result<()> {
    match format {
        Format::Json => {
            out.write_all(to_json_string(report).as_bytes())?;
            out.flush()
        }
        Format::Csv => write_csv(report, out),
    }
}

pub fn emit_to(report: &Report, format: Format, destination: &Destination) -> io::Result<()> {
    match destination {
        Destination::Stdout => emit(report, format, io::stdout().lock()),
        Destination::File(path) => emit(report, format, BufWriter::new(File::create(path)?)),
    }
}
