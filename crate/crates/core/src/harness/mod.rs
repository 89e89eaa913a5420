//! Monte Carlo driver, exact-enumeration oracle, configuration, sweeps and
//! output emitters.

pub mod config;
pub mod emit;
pub mod oracle;
pub mod sim;
pub mod sweep;

pub use config::{AttackKind, ConfigError, RunConfig};
pub use emit::{emit, emit_to, Destination, Format, OracleReport, Report, CSV_HEADER, SCHEMA_VERSION};
pub use oracle::{eve_model_for, exact_round_distribution, ExactDistribution};
pub use sim::{run_round, run_simulation, HarnessError, Simulation};
pub use sweep::{sweep, SweepPoint, SweepTable};
