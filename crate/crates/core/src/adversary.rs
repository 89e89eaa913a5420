//! Eavesdropping strategies.
//!
//! A strategy sees only what travels on the quantum channel. The round
//! engine asks [`AttackStrategy::decide`] once per round; hooks are invoked
//! only for attacked rounds, so unattacked rounds pass through untouched.

use serde::{Deserialize, Serialize};

use crate::protocol::EncodingOp;
use crate::qubit::{
    apply_on_wire, apply_single, measure, measure_wire, prepare, swap_gate, Basis, PureState, TwoQubitState, Unitary2,
};
use crate::rng::Draws;

/// Ping-Pong pair in flight. Wire 0 of every pair is Bob's home qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairLink {
    /// Alice holds wire 1 of the pair.
    Direct(TwoQubitState),
    /// Eve withholds the pair's travel wire; Alice holds her substitute.
    Substituted {
        withheld: TwoQubitState,
        substitute: PureState,
    },
}

impl PairLink {
    /// Applies `u` to whatever qubit Alice currently holds.
    pub fn alice_apply(&self, u: &Unitary2) -> PairLink {
        match *self {
            PairLink::Direct(pair) => PairLink::Direct(apply_on_wire(u, 1, &pair).expect("wire 1 is valid")),
            PairLink::Substituted { withheld, substitute } => PairLink::Substituted {
                withheld,
                substitute: apply_single(u, &substitute),
            },
        }
    }

    /// Measures the qubit that is on the channel (or in Alice's hands).
    pub fn measure_travel(&self, basis: Basis, rand: f64) -> (u8, PairLink) {
        match *self {
            PairLink::Direct(pair) => {
                let (bit, post) = measure_wire(&pair, 1, basis, rand).expect("wire 1 is valid");
                (bit, PairLink::Direct(post))
            }
            PairLink::Substituted { withheld, substitute } => {
                let (bit, post) = measure(&substitute, basis, rand);
                (
                    bit,
                    PairLink::Substituted {
                        withheld,
                        substitute: post,
                    },
                )
            }
        }
    }

    /// Measures Bob's home qubit.
    pub fn measure_home(&self, basis: Basis, rand: f64) -> (u8, PairLink) {
        match *self {
            PairLink::Direct(pair) => {
                let (bit, post) = measure_wire(&pair, 0, basis, rand).expect("wire 0 is valid");
                (bit, PairLink::Direct(post))
            }
            PairLink::Substituted { withheld, substitute } => {
                let (bit, post) = measure_wire(&withheld, 0, basis, rand).expect("wire 0 is valid");
                (
                    bit,
                    PairLink::Substituted {
                        withheld: post,
                        substitute,
                    },
                )
            }
        }
    }

    /// The pair as Bob receives it. Panics if Eve still withholds the travel wire.
    pub fn expect_direct(self) -> TwoQubitState {
        match self {
            PairLink::Direct(pair) => pair,
            PairLink::Substituted { .. } => panic!("travel qubit was never returned to Bob"),
        }
    }
}

/// Behavioral contract for an eavesdropper.
///
/// `Context` is private per-round state; the engine creates a fresh one for
/// every round and drops it afterwards.
pub trait AttackStrategy: Sync {
    type Context: Default;

    /// Probability that a given round is attacked.
    fn fraction(&self) -> f64;

    fn decide(&self, round_rand: f64) -> bool {
        round_rand < self.fraction()
    }

    /// Bob → Alice leg for single-qubit protocols (LM05, and BB84's only leg).
    fn forward_intercept(&self, travel: PureState, ctx: &mut Self::Context, draws: &mut dyn Draws) -> PureState;

    /// Alice → Bob leg for LM05. Returns the qubit delivered to Bob and Eve's
    /// guess of the key bit, if she forms one.
    fn backward_intercept(
        &self,
        returned: PureState,
        ctx: &mut Self::Context,
        draws: &mut dyn Draws,
    ) -> (PureState, Option<u8>);

    /// Bob → Alice leg for Ping-Pong.
    fn forward_pair(&self, link: PairLink, ctx: &mut Self::Context, draws: &mut dyn Draws) -> PairLink;

    /// Alice → Bob leg for Ping-Pong.
    fn backward_pair(
        &self,
        link: PairLink,
        ctx: &mut Self::Context,
        draws: &mut dyn Draws,
    ) -> (TwoQubitState, Option<u8>);

    /// Eve's key guess on a one-way (BB84) round after the forward leg.
    fn one_way_guess(&self, _ctx: &Self::Context) -> Option<u8> {
        None
    }
}

/// Passive channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAttack;

impl AttackStrategy for NoAttack {
    type Context = ();

    fn fraction(&self) -> f64 {
        0.0
    }

    fn decide(&self, _round_rand: f64) -> bool {
        false
    }

    fn forward_intercept(&self, travel: PureState, _: &mut (), _: &mut dyn Draws) -> PureState {
        travel
    }

    fn backward_intercept(&self, returned: PureState, _: &mut (), _: &mut dyn Draws) -> (PureState, Option<u8>) {
        (returned, None)
    }

    fn forward_pair(&self, link: PairLink, _: &mut (), _: &mut dyn Draws) -> PairLink {
        link
    }

    fn backward_pair(&self, link: PairLink, _: &mut (), _: &mut dyn Draws) -> (TwoQubitState, Option<u8>) {
        (link.expect_direct(), None)
    }
}

/// Measure-and-resend in a uniformly random basis.
///
/// By default only the forward leg is attacked and Eve forms no guess of the
/// two-way key bit. With `both_paths` she also measures the returned qubit in
/// a fresh random basis and guesses the key bit as the XOR of her two
/// outcomes.
#[derive(Debug, Clone, Copy)]
pub struct InterceptResend {
    pub fraction: f64,
    pub both_paths: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InterceptContext {
    pub basis: Option<Basis>,
    pub outcome: Option<u8>,
}

/// Eve measures `travel` in a basis picked by `rand_basis` and forwards the
/// post-measurement eigenstate.
pub fn intercept_resend_forward(
    travel: PureState,
    rand_basis: f64,
    rand_outcome: f64,
    ctx: &mut InterceptContext,
) -> PureState {
    let basis = Basis::from_uniform(rand_basis);
    let (bit, post) = measure(&travel, basis, rand_outcome);
    ctx.basis = Some(basis);
    ctx.outcome = Some(bit);
    post
}

impl AttackStrategy for InterceptResend {
    type Context = InterceptContext;

    fn fraction(&self) -> f64 {
        self.fraction
    }

    fn forward_intercept(&self, travel: PureState, ctx: &mut InterceptContext, draws: &mut dyn Draws) -> PureState {
        let rand_basis = draws.uniform();
        let rand_outcome = draws.uniform();
        intercept_resend_forward(travel, rand_basis, rand_outcome, ctx)
    }

    fn backward_intercept(
        &self,
        returned: PureState,
        ctx: &mut InterceptContext,
        draws: &mut dyn Draws,
    ) -> (PureState, Option<u8>) {
        if !self.both_paths {
            return (returned, None);
        }
        let basis = Basis::from_uniform(draws.uniform());
        let (bit, post) = measure(&returned, basis, draws.uniform());
        (post, ctx.outcome.map(|first| first ^ bit))
    }

    fn forward_pair(&self, link: PairLink, ctx: &mut InterceptContext, draws: &mut dyn Draws) -> PairLink {
        let basis = Basis::from_uniform(draws.uniform());
        let (bit, post) = link.measure_travel(basis, draws.uniform());
        ctx.basis = Some(basis);
        ctx.outcome = Some(bit);
        post
    }

    fn backward_pair(
        &self,
        link: PairLink,
        ctx: &mut InterceptContext,
        draws: &mut dyn Draws,
    ) -> (TwoQubitState, Option<u8>) {
        if !self.both_paths {
            return (link.expect_direct(), None);
        }
        let basis = Basis::from_uniform(draws.uniform());
        let (bit, post) = link.measure_travel(basis, draws.uniform());
        (post.expect_direct(), ctx.outcome.map(|first| first ^ bit))
    }

    fn one_way_guess(&self, ctx: &InterceptContext) -> Option<u8> {
        ctx.outcome
    }
}

/// Substitute qubit Eve sends to Alice in place of the travel qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    /// `|0>`, read out in Z.
    #[default]
    Zero,
    /// `|+>`, read out in X.
    Plus,
}

impl Probe {
    pub fn basis(self) -> Basis {
        match self {
            Probe::Zero => Basis::Z,
            Probe::Plus => Basis::X,
        }
    }

    pub fn state(self) -> PureState {
        prepare(self.basis(), 0)
    }
}

/// Quantum man-in-the-middle: Eve swaps the travel qubit with a probe of her
/// own, reads Alice's operation off the returned probe and replays it onto
/// the withheld qubit.
///
/// LM05 rounds always use the `|0>` probe; `pair_probe` selects the probe for
/// Ping-Pong.
#[derive(Debug, Clone, Copy)]
pub struct Qmm {
    pub fraction: f64,
    pub pair_probe: Probe,
}

/// Eve's private state between the two legs of an attacked round.
#[derive(Debug, Clone, Copy, Default)]
pub struct QmmContext {
    pub stored_bob_qubit: Option<PureState>,
    pub withheld_pair: Option<TwoQubitState>,
    pub probe_prep: Option<Probe>,
}

/// Forward leg on LM05: SWAP the travel qubit with a `|0>` probe, keep Bob's
/// qubit and deliver the probe to Alice.
pub fn qmm_forward(travel: PureState, ctx: &mut QmmContext) -> PureState {
    let probe = Probe::Zero;
    let joint = TwoQubitState::product(&travel, &probe.state());
    let (to_alice, kept) = swap_gate(&joint)
        .factor()
        .expect("SWAP of a product state is a product state");
    ctx.stored_bob_qubit = Some(kept);
    ctx.probe_prep = Some(probe);
    to_alice
}

/// Backward leg on LM05: read the returned probe, infer Pass/Flip, apply it
/// to Bob's stored qubit and send that on.
pub fn qmm_backward(returned: PureState, ctx: &mut QmmContext, rand: f64) -> (PureState, u8) {
    let probe = ctx.probe_prep.expect("qmm_backward without a forward leg");
    let stored = ctx
        .stored_bob_qubit
        .take()
        .expect("qmm_backward without a stored qubit");
    let (outcome, _) = measure(&returned, probe.basis(), rand);
    let inferred = EncodingOp::from_bit(outcome);
    (apply_single(&inferred.lm05_unitary(), &stored), inferred.bit())
}

/// Forward leg on Ping-Pong: withhold the entangled travel wire unmeasured
/// and hand Alice the probe.
pub fn qmm_pingpong_forward(link: PairLink, probe: Probe, ctx: &mut QmmContext) -> PairLink {
    let pair = link.expect_direct();
    ctx.withheld_pair = Some(pair);
    ctx.probe_prep = Some(probe);
    PairLink::Substituted {
        withheld: pair,
        substitute: probe.state(),
    }
}

/// Backward leg on Ping-Pong: read the probe in its own basis and replay
/// the inferred encoding onto the withheld travel wire.
pub fn qmm_pingpong_backward(link: PairLink, ctx: &mut QmmContext, rand: f64) -> (TwoQubitState, u8) {
    let probe = ctx.probe_prep.expect("qmm_pingpong_backward without a forward leg");
    let (withheld, substitute) = match link {
        PairLink::Substituted { withheld, substitute } => (withheld, substitute),
        PairLink::Direct(_) => panic!("qmm_pingpong_backward on an unsubstituted link"),
    };
    let (outcome, _) = measure(&substitute, probe.basis(), rand);
    let inferred = EncodingOp::from_bit(outcome);
    let pair = apply_on_wire(&inferred.pingpong_unitary(), 1, &withheld).expect("wire 1 is valid");
    ctx.withheld_pair = None;
    (pair, inferred.bit())
}

impl AttackStrategy for Qmm {
    type Context = QmmContext;

    fn fraction(&self) -> f64 {
        self.fraction
    }

    fn forward_intercept(&self, travel: PureState, ctx: &mut QmmContext, _: &mut dyn Draws) -> PureState {
        qmm_forward(travel, ctx)
    }

    fn backward_intercept(
        &self,
        returned: PureState,
        ctx: &mut QmmContext,
        draws: &mut dyn Draws,
    ) -> (PureState, Option<u8>) {
        let (to_bob, bit) = qmm_backward(returned, ctx, draws.uniform());
        (to_bob, Some(bit))
    }

    fn forward_pair(&self, link: PairLink, ctx: &mut QmmContext, _: &mut dyn Draws) -> PairLink {
        qmm_pingpong_forward(link, self.pair_probe, ctx)
    }

    fn backward_pair(
        &self,
        link: PairLink,
        ctx: &mut QmmContext,
        draws: &mut dyn Draws,
    ) -> (TwoQubitState, Option<u8>) {
        let (pair, bit) = qmm_pingpong_backward(link, ctx, draws.uniform());
        (pair, Some(bit))
    }
}
