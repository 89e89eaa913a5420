//! Per-round random streams.
//!
//! Every round draws from its own ChaCha8 stream selected by
//! `(master_seed, round_index)`; the word position inside the stream is the
//! draw index. A round's randomness therefore never depends on which worker
//! runs it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of uniform draws in `[0, 1)` consumed by protocol rounds and
/// attack hooks.
pub trait Draws {
    fn uniform(&mut self) -> f64;

    /// Fair coin as a bit.
    fn bit(&mut self) -> u8 {
        u8::from(self.uniform() >= 0.5)
    }

    /// `true` with probability `p`.
    fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl<D: Draws + ?Sized> Draws for &mut D {
    fn uniform(&mut self) -> f64 {
        (**self).uniform()
    }
}

/// Counter-keyed generator for one protocol round.
#[derive(Debug, Clone)]
pub struct RoundRng {
    inner: ChaCha8Rng,
}

impl RoundRng {
    pub fn new(master_seed: u64, round_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(round_index);
        RoundRng { inner }
    }

    /// Position of the next draw within this round's stream, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl Draws for RoundRng {
    fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

/// Deterministic child seed for the `index`-th sub-run of a sweep.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    const SWEEP_DOMAIN: u64 = 0x5357_4545_505f_5345;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ SWEEP_DOMAIN);
    rng.set_stream(index);
    rng.next_u64()
}

/// Replays a fixed list of draws; panics when exhausted. Test support.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedDraws {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        ScriptedDraws {
            values: values.into(),
            next: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.values.len() - self.next
    }
}

impl Draws for ScriptedDraws {
    fn uniform(&mut self) -> f64 {
        let v = *self.values.get(self.next).expect("scripted draws exhausted");
        self.next += 1;
        v
    }
}
