//! Exact per-round statistics by exhaustive branch enumeration.
//!
//! Every discrete choice of a round (preparation, mode, Alice's basis or
//! operation, Eve's basis, each Born outcome) is expanded with its exact
//! weight. The round physics is re-derived here directly from the state
//! kernel; it does not go through the protocol or adversary modules, so it
//! serves as an independent check on them. The attack fraction is mixed in
//! analytically rather than sampled.

use serde::{Deserialize, Serialize};

use crate::adversary::Probe;
use crate::analysis::EveModel;
use crate::protocol::{EncodingOp, Protocol};
use crate::qubit::{
    apply_on_wire, apply_single, bell_probabilities, prepare, Basis, BellKind, PureState, TwoQubitState,
};

use super::config::{AttackKind, RunConfig};

pub const METHOD: &str = "exhaustive-enumeration";

/// Exact expectations for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    /// Matched-basis control error rate (sifted QBER for BB84).
    pub e_cm_exact: f64,
    /// Error rate over key-carrying rounds.
    pub qber_mm_exact: f64,
    /// Eve's key-guess accuracy over attacked key rounds; `None` when she
    /// never forms a guess.
    pub eve_accuracy_exact: Option<f64>,
    /// Probability that a round is a matched-basis control round (sifted for BB84).
    pub p_check: f64,
    /// Probability that a round carries key material.
    pub p_key: f64,
    pub branches: u64,
    pub method: String,
}

#[derive(Default)]
struct Acc {
    check: f64,
    check_err: f64,
    key: f64,
    key_err: f64,
    guess: f64,
    guess_ok: f64,
    branches: u64,
}

impl Acc {
    fn check(&mut self, w: f64, err: bool) {
        self.branches += 1;
        self.check += w;
        if err {
            self.check_err += w;
        }
    }

    fn key(&mut self, w: f64, err: bool, guess_ok: Option<bool>) {
        self.branches += 1;
        self.key += w;
        if err {
            self.key_err += w;
        }
        if let Some(ok) = guess_ok {
            self.guess += w;
            if ok {
                self.guess_ok += w;
            }
        }
    }

    fn discard(&mut self) {
        self.branches += 1;
    }
}

/// Born branches of a single-qubit measurement: `(outcome, probability)`.
fn born(s: &PureState, basis: Basis) -> impl Iterator<Item = (u8, f64)> + '_ {
    (0..2u8)
        .map(move |bit| (bit, s.probability(basis, bit)))
        .filter(|&(_, p)| p > 1e-15)
}

fn born_wire(s: &TwoQubitState, wire: usize, basis: Basis) -> Vec<(u8, f64, TwoQubitState)> {
    (0..2u8)
        .filter_map(|bit| {
            s.collapse(wire, basis, bit)
                .expect("wire index is 0 or 1")
                .map(|(p, post)| (bit, p, post))
        })
        .collect()
}

const BASES: [(Basis, f64); 2] = [(Basis::Z, 0.5), (Basis::X, 0.5)];
const OPS: [(EncodingOp, f64); 2] = [(EncodingOp::Pass, 0.5), (EncodingOp::Flip, 0.5)];

/// What Eve carries from the forward to the backward leg of one branch.
#[derive(Clone, Copy)]
enum Memory {
    Clean,
    Measured(u8),
    Held(PureState),
}

struct Scenario {
    attack: AttackKind,
    attacked: bool,
    control_prob: f64,
    ir_both_paths: bool,
    backward_check: bool,
    probe: Probe,
}

impl Scenario {
    fn active(&self) -> Option<AttackKind> {
        (self.attacked && self.attack != AttackKind::None).then_some(self.attack)
    }

    /// Forward leg on a single qubit: `(weight, delivered, memory)`.
    fn forward(&self, s: PureState) -> Vec<(f64, PureState, Memory)> {
        match self.active() {
            None => vec![(1.0, s, Memory::Clean)],
            Some(AttackKind::InterceptResend) => BASES
                .iter()
                .flat_map(|&(basis, wb)| {
                    born(&s, basis)
                        .map(move |(v, p)| (wb * p, prepare(basis, v), Memory::Measured(v)))
                        .collect::<Vec<_>>()
                })
                .collect(),
            Some(AttackKind::Qmm) => vec![(1.0, PureState::zero(), Memory::Held(s))],
            Some(AttackKind::None) => unreachable!(),
        }
    }

    /// Backward leg on a single qubit: `(weight, delivered, Eve's key guess)`.
    fn backward(&self, returned: PureState, memory: Memory) -> Vec<(f64, PureState, Option<u8>)> {
        match memory {
            Memory::Clean => vec![(1.0, returned, None)],
            Memory::Measured(first) if self.ir_both_paths => BASES
                .iter()
                .flat_map(|&(basis, wb)| {
                    born(&returned, basis)
                        .map(move |(v, p)| (wb * p, prepare(basis, v), Some(first ^ v)))
                        .collect::<Vec<_>>()
                })
                .collect(),
            Memory::Measured(_) => vec![(1.0, returned, None)],
            Memory::Held(stored) => born(&returned, Basis::Z)
                .map(|(v, p)| {
                    let op = EncodingOp::from_bit(v);
                    (p, apply_single(&op.lm05_unitary(), &stored), Some(v))
                })
                .collect(),
        }
    }

    fn lm05(&self, acc: &mut Acc, weight: f64) {
        let c = self.control_prob;
        for &(prep_basis, wb) in &BASES {
            for prep_bit in 0..2u8 {
                let w_prep = weight * wb * 0.5;
                for (wf, delivered, memory) in self.forward(prepare(prep_basis, prep_bit)) {
                    // Control mode.
                    for &(alice_basis, wa) in &BASES {
                        for (alice_bit, pa) in born(&delivered, alice_basis) {
                            let w = w_prep * wf * c * wa * pa;
                            if alice_basis != prep_basis {
                                acc.discard();
                                continue;
                            }
                            let forward_err = alice_bit != prep_bit;
                            if !self.backward_check {
                                acc.check(w, forward_err);
                                continue;
                            }
                            for (wk, to_bob, _) in self.backward(prepare(alice_basis, alice_bit), memory) {
                                for (bob_bit, pb) in born(&to_bob, prep_basis) {
                                    acc.check(w * wk * pb, forward_err || bob_bit != alice_bit);
                                }
                            }
                        }
                    }
                    // Message mode.
                    for &(op, wo) in &OPS {
                        let returned = apply_single(&op.lm05_unitary(), &delivered);
                        for (wk, to_bob, guess) in self.backward(returned, memory) {
                            for (bob_bit, pb) in born(&to_bob, prep_basis) {
                                let w = w_prep * wf * (1.0 - c) * wo * wk * pb;
                                let decoded = bob_bit ^ prep_bit;
                                acc.key(w, decoded != op.bit(), guess.map(|g| g == op.bit()));
                            }
                        }
                    }
                }
            }
        }
    }

    fn bb84(&self, acc: &mut Acc, weight: f64) {
        for &(prep_basis, wb) in &BASES {
            for prep_bit in 0..2u8 {
                for (wf, delivered, memory) in self.forward(prepare(prep_basis, prep_bit)) {
                    let guess = match memory {
                        Memory::Measured(v) => Some(v == prep_bit),
                        _ => None,
                    };
                    for &(bob_basis, wr) in &BASES {
                        for (bob_bit, pb) in born(&delivered, bob_basis) {
                            if bob_basis != prep_basis {
                                acc.discard();
                                continue;
                            }
                            let w = weight * wb * 0.5 * wf * wr * pb;
                            acc.key(w, bob_bit != prep_bit, guess);
                        }
                    }
                }
            }
        }
    }

    fn pingpong(&self, acc: &mut Acc, weight: f64) {
        let c = self.control_prob;
        let source = crate::qubit::bell_state(BellKind::PsiPlus);
        let forward: Vec<(f64, Leg, Option<u8>)> = match self.active() {
            None => vec![(1.0, Leg::Direct(source), None)],
            Some(AttackKind::InterceptResend) => BASES
                .iter()
                .flat_map(|&(basis, wb)| {
                    born_wire(&source, 1, basis)
                        .into_iter()
                        .map(move |(v, p, post)| (wb * p, Leg::Direct(post), Some(v)))
                })
                .collect(),
            Some(AttackKind::Qmm) => vec![(1.0, Leg::Substituted(source, self.probe.state()), None)],
            Some(AttackKind::None) => unreachable!(),
        };

        for (wf, leg, first) in forward {
            // Control mode: Alice and Bob both measure Z and expect opposite bits.
            match leg {
                Leg::Direct(pair) => {
                    for (a, pa, post) in born_wire(&pair, 1, Basis::Z) {
                        for (h, ph, _) in born_wire(&post, 0, Basis::Z) {
                            acc.check(weight * wf * c * pa * ph, a == h);
                        }
                    }
                }
                Leg::Substituted(withheld, probe) => {
                    for (a, pa) in born(&probe, Basis::Z) {
                        for (h, ph, _) in born_wire(&withheld, 0, Basis::Z) {
                            acc.check(weight * wf * c * pa * ph, a == h);
                        }
                    }
                }
            }
            // Message mode.
            for &(op, wo) in &OPS {
                let u = op.pingpong_unitary();
                let returned: Vec<(f64, TwoQubitState, Option<u8>)> = match leg {
                    Leg::Direct(pair) => {
                        let pair = apply_on_wire(&u, 1, &pair).expect("wire 1");
                        match first {
                            Some(v) if self.ir_both_paths => BASES
                                .iter()
                                .flat_map(|&(basis, wb)| {
                                    born_wire(&pair, 1, basis)
                                        .into_iter()
                                        .map(move |(v2, p, post)| (wb * p, post, Some(v ^ v2)))
                                })
                                .collect(),
                            _ => vec![(1.0, pair, None)],
                        }
                    }
                    Leg::Substituted(withheld, probe) => {
                        let probe = apply_single(&u, &probe);
                        born(&probe, self.probe.basis())
                            .map(|(v, p)| {
                                let replay = EncodingOp::from_bit(v).pingpong_unitary();
                                (p, apply_on_wire(&replay, 1, &withheld).expect("wire 1"), Some(v))
                            })
                            .collect()
                    }
                };
                for (wk, pair, guess) in returned {
                    let w = weight * wf * (1.0 - c) * wo * wk;
                    let guess_ok = guess.map(|g| g == op.bit());
                    for (kind, pk) in BellKind::ALL.into_iter().zip(bell_probabilities(&pair)) {
                        if pk <= 1e-15 {
                            continue;
                        }
                        let err = match kind {
                            BellKind::PsiPlus => op.bit() != 0,
                            BellKind::PsiMinus => op.bit() != 1,
                            BellKind::PhiPlus | BellKind::PhiMinus => true,
                        };
                        acc.key(w * pk, err, guess_ok);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Leg {
    Direct(TwoQubitState),
    /// Withheld pair and the substitute in Alice's hands.
    Substituted(TwoQubitState, PureState),
}

/// Enumerates every branch of one round of `config`.
pub fn exact_round_distribution(config: &RunConfig) -> ExactDistribution {
    let f = if config.attack == AttackKind::None {
        0.0
    } else {
        config.attack_fraction
    };
    let mut acc = Acc::default();
    for (attacked, weight) in [(false, 1.0 - f), (true, f)] {
        if attacked && config.attack == AttackKind::None {
            continue;
        }
        let scenario = Scenario {
            attack: config.attack,
            attacked,
            control_prob: config.control_prob,
            ir_both_paths: config.ir_both_paths,
            backward_check: config.backward_check,
            probe: config.pingpong_probe,
        };
        match config.protocol {
            Protocol::Lm05 => scenario.lm05(&mut acc, weight),
            Protocol::PingPong => scenario.pingpong(&mut acc, weight),
            Protocol::Bb84 => scenario.bb84(&mut acc, weight),
        }
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let qber = ratio(acc.key_err, acc.key);
    let (e_cm, p_check) = match config.protocol {
        Protocol::Bb84 => (qber, acc.key),
        _ => (ratio(acc.check_err, acc.check), acc.check),
    };
    ExactDistribution {
        e_cm_exact: e_cm,
        qber_mm_exact: qber,
        eve_accuracy_exact: (acc.guess > 0.0).then(|| acc.guess_ok / acc.guess),
        p_check,
        p_key: acc.key,
        branches: acc.branches,
        method: METHOD.to_string(),
    }
}

/// Eve-information model for a configuration, calibrated on the oracle's
/// fully attacked distribution.
pub fn eve_model_for(config: &RunConfig) -> EveModel {
    match (config.protocol, config.attack) {
        (Protocol::Bb84, _) => EveModel::Bb84,
        (_, AttackKind::None) => EveModel::NoEve,
        (Protocol::Lm05, AttackKind::Qmm) if !config.backward_check => EveModel::Qmm,
        _ => {
            let full = RunConfig {
                attack_fraction: 1.0,
                ..config.clone()
            };
            let exact = exact_round_distribution(&full);
            EveModel::BinaryChannel {
                cm_signature: exact.e_cm_exact,
                key_accuracy: exact.eve_accuracy_exact.unwrap_or(0.5),
            }
        }
    }
}
