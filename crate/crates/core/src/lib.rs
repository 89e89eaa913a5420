//! Simulation and analysis toolkit for two-way quantum key distribution.
//!
//! The crate models LM05 and Ping-Pong (plus a BB84 baseline) round by
//! round on exact state vectors, lets an eavesdropper intercept the
//! forward and backward legs, and turns the resulting transcripts into
//! control-mode error rates, message-mode QBER, mutual information and the
//! asymptotic secret key rate `R = I_AB - I_E`.
//!
//! ```
//! use twoway_core::harness::{run_simulation, AttackKind, RunConfig};
//!
//! let config = RunConfig {
//!     attack: AttackKind::Qmm,
//!     attack_fraction: 1.0,
//!     rounds: 20_000,
//!     ..RunConfig::default()
//! };
//! let sim = run_simulation(&config).unwrap();
//! assert_eq!(sim.statistics.qber_mm.rate, 0.0);
//! assert!((sim.statistics.e_cm.rate - 0.5).abs() < 0.05);
//! ```

pub mod adversary;
pub mod analysis;
pub mod harness;
pub mod protocol;
pub mod qubit;
pub mod rng;

pub use adversary::{AttackStrategy, InterceptResend, NoAttack, PairLink, Probe, Qmm, QmmContext};
pub use analysis::{
    bb84_rate, binary_entropy, empirical_eve_accuracy, estimate_cm_error, estimate_mm_qber, eve_bound_qmm, key_rate,
    mutual_information_ab, AnalysisError, EveModel, RateEstimate, RunStatistics, Tally,
};
pub use protocol::{
    run_round_bb84, run_round_lm05, run_round_pingpong, AliceAction, EncodingOp, Preparation, Protocol, RoundMode,
    RoundRecord, RoundSettings,
};
pub use qubit::{Basis, BellKind, Complex, PureState, QubitError, TwoQubitState, Unitary2};
pub use rng::{Draws, RoundRng};
