//! One-round state machines for LM05, Ping-Pong and a BB84 baseline.
//!
//! Each round draws its classical choices up front from the round's random
//! source, then threads the traveling qubit through the attack hooks. Hooks
//! only ever receive quantum states, so Eve cannot see Alice's mode or Bob's
//! preparation even though they are already fixed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackStrategy, PairLink};
use crate::qubit::{apply_single, bell_measure, bell_state, measure, prepare, Basis, BellKind, Unitary2};
use crate::rng::Draws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Lm05,
    PingPong,
    Bb84,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Lm05, Protocol::PingPong, Protocol::Bb84];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Lm05 => "lm05",
            Protocol::PingPong => "pingpong",
            Protocol::Bb84 => "bb84",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lm05" => Ok(Protocol::Lm05),
            "pingpong" | "ping-pong" => Ok(Protocol::PingPong),
            "bb84" => Ok(Protocol::Bb84),
            other => Err(format!("unknown protocol `{other}` (expected lm05, pingpong or bb84)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundMode {
    Message,
    Control,
}

/// Alice's message-mode operation; `Pass` encodes 0 and `Flip` encodes 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingOp {
    Pass,
    Flip,
}

impl EncodingOp {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            EncodingOp::Pass
        } else {
            EncodingOp::Flip
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            EncodingOp::Pass => 0,
            EncodingOp::Flip => 1,
        }
    }

    /// LM05 realization: identity or `iY`.
    pub fn lm05_unitary(self) -> Unitary2 {
        match self {
            EncodingOp::Pass => Unitary2::IDENTITY,
            EncodingOp::Flip => Unitary2::I_PAULI_Y,
        }
    }

    /// Ping-Pong realization: identity or Pauli Z on the travel qubit.
    pub fn pingpong_unitary(self) -> Unitary2 {
        match self {
            EncodingOp::Pass => Unitary2::IDENTITY,
            EncodingOp::Flip => Unitary2::PAULI_Z,
        }
    }
}

/// State prepared by the sending party: Bob in the two-way protocols,
/// Alice in BB84.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preparation {
    Qubit { basis: Basis, bit: u8 },
    Bell(BellKind),
}

/// What Alice did with the qubit in a two-way round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AliceAction {
    Encode(EncodingOp),
    Measure { basis: Basis, outcome: u8 },
}

/// Transcript of one round: public announcements plus the private values
/// needed to score it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub protocol: Protocol,
    pub mode: RoundMode,
    pub prep: Preparation,
    /// `None` for BB84, where Alice is the sender.
    pub alice_action: Option<AliceAction>,
    /// BB84 receiver basis.
    pub receiver_basis: Option<Basis>,
    pub attacked: bool,
    pub eve_inferred_bit: Option<u8>,
    /// Decoded key bit in message mode, Bob's check measurement in control mode.
    pub bob_outcome: u8,
    pub cm_basis_matched: Option<bool>,
    pub cm_error: Option<bool>,
    /// Present for every two-way message round and for sifted BB84 rounds.
    pub mm_error: Option<bool>,
    /// BB84 only: whether the bases agreed.
    pub sifted: Option<bool>,
}

impl RoundRecord {
    /// Key bit held by the party that defines the key, when the round
    /// carries key material.
    pub fn key_bit(&self) -> Option<u8> {
        match (self.protocol, self.alice_action, self.prep) {
            (Protocol::Bb84, _, Preparation::Qubit { bit, .. }) if self.sifted == Some(true) => Some(bit),
            (_, Some(AliceAction::Encode(op)), _) => Some(op.bit()),
            _ => None,
        }
    }

    /// Structural population rules for a record.
    pub fn validate(&self) -> Result<(), String> {
        if self.eve_inferred_bit.is_some() && !(self.attacked && self.mode == RoundMode::Message) {
            return Err("eve_inferred_bit set on an unattacked or control round".into());
        }
        match (self.protocol, self.mode) {
            (Protocol::Bb84, RoundMode::Message) => {
                let sifted = self.sifted.ok_or("BB84 round without sifting flag")?;
                if self.mm_error.is_some() != sifted {
                    return Err("BB84 error flag must be present iff the round is sifted".into());
                }
                if self.cm_basis_matched.is_some() || self.cm_error.is_some() || self.alice_action.is_some() {
                    return Err("BB84 round carries two-way fields".into());
                }
            }
            (Protocol::Bb84, RoundMode::Control) => return Err("BB84 has no control mode".into()),
            (_, RoundMode::Message) => {
                if self.mm_error.is_none() || self.cm_basis_matched.is_some() || self.cm_error.is_some() {
                    return Err("message round must carry exactly the mm_error flag".into());
                }
                if !matches!(self.alice_action, Some(AliceAction::Encode(_))) {
                    return Err("message round without an encoding".into());
                }
            }
            (_, RoundMode::Control) => {
                let matched = self.cm_basis_matched.ok_or("control round without basis-match flag")?;
                if self.mm_error.is_some() || self.cm_error.is_some() != matched {
                    return Err("control round must carry cm_error iff bases matched".into());
                }
                if !matches!(self.alice_action, Some(AliceAction::Measure { .. })) {
                    return Err("control round without a measurement".into());
                }
            }
        }
        if self.sifted.is_some() != (self.protocol == Protocol::Bb84) {
            return Err("sifting flag is BB84-only".into());
        }
        Ok(())
    }
}

/// Alice's pre-drawn decision for a two-way round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceChoice {
    Encode(EncodingOp),
    Measure(Basis),
}

impl AliceChoice {
    fn sample(draws: &mut dyn Draws, control_prob: f64) -> Self {
        if draws.bernoulli(control_prob) {
            AliceChoice::Measure(Basis::from_uniform(draws.uniform()))
        } else {
            AliceChoice::Encode(EncodingOp::from_bit(draws.bit()))
        }
    }
}

/// Per-run knobs shared by the two-way round functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSettings {
    /// Probability `c` of a control round.
    pub control_prob: f64,
    /// LM05: also score Alice's resent qubit against Bob's backward measurement.
    pub backward_check: bool,
}

impl RoundSettings {
    pub fn new(control_prob: f64) -> Self {
        RoundSettings {
            control_prob,
            backward_check: false,
        }
    }
}

/// Classical choices of an LM05 round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lm05Choices {
    pub prep_basis: Basis,
    pub prep_bit: u8,
    pub attacked: bool,
    pub alice: AliceChoice,
}

impl Lm05Choices {
    pub fn sample<A: AttackStrategy>(draws: &mut dyn Draws, control_prob: f64, attack: &A) -> Self {
        let prep_basis = Basis::from_uniform(draws.uniform());
        let prep_bit = draws.bit();
        let attacked = attack.decide(draws.uniform());
        let alice = AliceChoice::sample(draws, control_prob);
        Lm05Choices {
            prep_basis,
            prep_bit,
            attacked,
            alice,
        }
    }
}

/// Runs one LM05 round with freshly drawn choices.
pub fn run_round_lm05<A: AttackStrategy>(draws: &mut dyn Draws, settings: &RoundSettings, attack: &A) -> RoundRecord {
    let choices = Lm05Choices::sample(draws, settings.control_prob, attack);
    play_lm05(&choices, settings, attack, draws)
}

/// Executes an LM05 round for fixed classical choices; `draws` supplies
/// Born-rule and attack randomness.
pub fn play_lm05<A: AttackStrategy>(
    choices: &Lm05Choices,
    settings: &RoundSettings,
    attack: &A,
    draws: &mut dyn Draws,
) -> RoundRecord {
    let Lm05Choices {
        prep_basis,
        prep_bit,
        attacked,
        alice,
    } = *choices;
    let mut ctx = A::Context::default();
    let sent = prepare(prep_basis, prep_bit);
    let delivered = if attacked {
        attack.forward_intercept(sent, &mut ctx, draws)
    } else {
        sent
    };

    let mut record = RoundRecord {
        protocol: Protocol::Lm05,
        mode: RoundMode::Message,
        prep: Preparation::Qubit {
            basis: prep_basis,
            bit: prep_bit,
        },
        alice_action: None,
        receiver_basis: None,
        attacked,
        eve_inferred_bit: None,
        bob_outcome: 0,
        cm_basis_matched: None,
        cm_error: None,
        mm_error: None,
        sifted: None,
    };

    match alice {
        AliceChoice::Encode(op) => {
            let returned = apply_single(&op.lm05_unitary(), &delivered);
            let (to_bob, inferred) = if attacked {
                attack.backward_intercept(returned, &mut ctx, draws)
            } else {
                (returned, None)
            };
            let (outcome, _) = measure(&to_bob, prep_basis, draws.uniform());
            let decoded = outcome ^ prep_bit;
            record.alice_action = Some(AliceAction::Encode(op));
            record.eve_inferred_bit = inferred;
            record.bob_outcome = decoded;
            record.mm_error = Some(decoded != op.bit());
        }
        AliceChoice::Measure(alice_basis) => {
            let (alice_outcome, resent) = measure(&delivered, alice_basis, draws.uniform());
            let to_bob = if attacked {
                attack.backward_intercept(resent, &mut ctx, draws).0
            } else {
                resent
            };
            let (bob_outcome, _) = measure(&to_bob, prep_basis, draws.uniform());
            let matched = alice_basis == prep_basis;
            record.mode = RoundMode::Control;
            record.alice_action = Some(AliceAction::Measure {
                basis: alice_basis,
                outcome: alice_outcome,
            });
            record.bob_outcome = bob_outcome;
            record.cm_basis_matched = Some(matched);
            record.cm_error = matched.then(|| {
                let forward = alice_outcome != prep_bit;
                let backward = settings.backward_check && bob_outcome != alice_outcome;
                forward || backward
            });
        }
    }
    debug_assert_eq!(record.validate(), Ok(()));
    record
}

/// Classical choices of a Ping-Pong round. Bob always prepares `PsiPlus`
/// and the control check is always in Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PingPongChoices {
    pub attacked: bool,
    pub alice: AliceChoice,
}

impl PingPongChoices {
    pub fn sample<A: AttackStrategy>(draws: &mut dyn Draws, control_prob: f64, attack: &A) -> Self {
        let attacked = attack.decide(draws.uniform());
        let alice = if draws.bernoulli(control_prob) {
            AliceChoice::Measure(Basis::Z)
        } else {
            AliceChoice::Encode(EncodingOp::from_bit(draws.bit()))
        };
        PingPongChoices { attacked, alice }
    }
}

pub fn run_round_pingpong<A: AttackStrategy>(
    draws: &mut dyn Draws,
    settings: &RoundSettings,
    attack: &A,
) -> RoundRecord {
    let choices = PingPongChoices::sample(draws, settings.control_prob, attack);
    play_pingpong(&choices, attack, draws)
}

pub fn play_pingpong<A: AttackStrategy>(choices: &PingPongChoices, attack: &A, draws: &mut dyn Draws) -> RoundRecord {
    let PingPongChoices { attacked, alice } = *choices;
    let mut ctx = A::Context::default();
    let source = PairLink::Direct(bell_state(BellKind::PsiPlus));
    let link = if attacked {
        attack.forward_pair(source, &mut ctx, draws)
    } else {
        source
    };

    let mut record = RoundRecord {
        protocol: Protocol::PingPong,
        mode: RoundMode::Message,
        prep: Preparation::Bell(BellKind::PsiPlus),
        alice_action: None,
        receiver_basis: None,
        attacked,
        eve_inferred_bit: None,
        bob_outcome: 0,
        cm_basis_matched: None,
        cm_error: None,
        mm_error: None,
        sifted: None,
    };

    match alice {
        AliceChoice::Encode(op) => {
            let link = link.alice_apply(&op.pingpong_unitary());
            let (pair, inferred) = if attacked {
                attack.backward_pair(link, &mut ctx, draws)
            } else {
                (link.expect_direct(), None)
            };
            let (decoded, error) = match bell_measure(&pair, draws.uniform()) {
                BellKind::PsiPlus => (0, op.bit() != 0),
                BellKind::PsiMinus => (1, op.bit() != 1),
                // Not a valid codeword; the bit only exists for accounting.
                BellKind::PhiPlus | BellKind::PhiMinus => (draws.bit(), true),
            };
            record.alice_action = Some(AliceAction::Encode(op));
            record.eve_inferred_bit = inferred;
            record.bob_outcome = decoded;
            record.mm_error = Some(error);
        }
        AliceChoice::Measure(basis) => {
            let (alice_outcome, link) = link.measure_travel(basis, draws.uniform());
            let (home, _) = link.measure_home(basis, draws.uniform());
            record.mode = RoundMode::Control;
            record.alice_action = Some(AliceAction::Measure {
                basis,
                outcome: alice_outcome,
            });
            record.bob_outcome = home;
            record.cm_basis_matched = Some(true);
            record.cm_error = Some(alice_outcome == home);
        }
    }
    debug_assert_eq!(record.validate(), Ok(()));
    record
}

/// Classical choices of a BB84 round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bb84Choices {
    pub prep_basis: Basis,
    pub prep_bit: u8,
    pub attacked: bool,
    pub bob_basis: Basis,
}

impl Bb84Choices {
    pub fn sample<A: AttackStrategy>(draws: &mut dyn Draws, attack: &A) -> Self {
        let prep_basis = Basis::from_uniform(draws.uniform());
        let prep_bit = draws.bit();
        let attacked = attack.decide(draws.uniform());
        let bob_basis = Basis::from_uniform(draws.uniform());
        Bb84Choices {
            prep_basis,
            prep_bit,
            attacked,
            bob_basis,
        }
    }
}

/// One-way baseline round: Alice → Bob, forward intercept only.
pub fn run_round_bb84<A: AttackStrategy>(draws: &mut dyn Draws, attack: &A) -> RoundRecord {
    let choices = Bb84Choices::sample(draws, attack);
    play_bb84(&choices, attack, draws)
}

pub fn play_bb84<A: AttackStrategy>(choices: &Bb84Choices, attack: &A, draws: &mut dyn Draws) -> RoundRecord {
    let Bb84Choices {
        prep_basis,
        prep_bit,
        attacked,
        bob_basis,
    } = *choices;
    let mut ctx = A::Context::default();
    let sent = prepare(prep_basis, prep_bit);
    let (delivered, guess) = if attacked {
        let delivered = attack.forward_intercept(sent, &mut ctx, draws);
        (delivered, attack.one_way_guess(&ctx))
    } else {
        (sent, None)
    };
    let (outcome, _) = measure(&delivered, bob_basis, draws.uniform());
    let sifted = bob_basis == prep_basis;
    let record = RoundRecord {
        protocol: Protocol::Bb84,
        mode: RoundMode::Message,
        prep: Preparation::Qubit {
            basis: prep_basis,
            bit: prep_bit,
        },
        alice_action: None,
        receiver_basis: Some(bob_basis),
        attacked,
        eve_inferred_bit: guess,
        bob_outcome: outcome,
        cm_basis_matched: None,
        cm_error: None,
        mm_error: sifted.then_some(outcome != prep_bit),
        sifted: Some(sifted),
    };
    debug_assert_eq!(record.validate(), Ok(()));
    record
}
