//! Security quantities computed from round transcripts.
//!
//! Rates are per message-mode round (per sifted bit for BB84). Everything is
//! built on [`Tally`], an order-independent count fold, so partial tallies
//! from parallel workers merge into exactly the same statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Protocol, RoundMode, RoundRecord};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("QBER {0} above 1/2: decoding convention is inverted upstream")]
    QberAboveHalf(f64),
    #[error("no matched-basis control rounds to estimate the control-mode error rate")]
    NoControlSamples,
    #[error("no message rounds to estimate the message-mode QBER")]
    NoMessageSamples,
    #[error("no attacked message rounds with an eavesdropper key guess")]
    NoEveInferences,
}

/// Shannon entropy of a biased coin, in bits.
pub fn binary_entropy(p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::ProbabilityOutOfRange(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p;
    Ok(-p * p.log2() - q * q.log2())
}

/// Binary-symmetric-channel capacity `1 - h(qber)`.
pub fn mutual_information_ab(qber: f64) -> Result<f64, AnalysisError> {
    if qber > 0.5 {
        return Err(AnalysisError::QberAboveHalf(qber));
    }
    Ok(1.0 - binary_entropy(qber)?)
}

/// Inverts the 50%-per-attacked-round control signature of the QMM attack.
///
/// Returns `(f_hat, i_e)` with `f_hat = min(1, 2 e_cm)`; Eve knows the key
/// bit of every attacked message round, so `i_e = f_hat`.
pub fn eve_bound_qmm(e_cm: f64) -> (f64, f64) {
    let f_hat = (2.0 * e_cm).clamp(0.0, 1.0);
    (f_hat, f_hat)
}

/// `max(0, i_ab - i_e)`.
pub fn key_rate(i_ab: f64, i_e: f64) -> f64 {
    (i_ab - i_e).max(0.0)
}

/// Asymptotic BB84 rate `max(0, 1 - 2 h(qber))` per sifted bit.
pub fn bb84_rate(qber: f64) -> Result<f64, AnalysisError> {
    if qber > 0.5 {
        return Err(AnalysisError::QberAboveHalf(qber));
    }
    Ok((1.0 - 2.0 * binary_entropy(qber)?).max(0.0))
}

/// Unclamped `1 - 2 h(qber)`, for locating the zero crossing.
pub fn bb84_rate_raw(qber: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 - 2.0 * binary_entropy(qber)?)
}

/// Bisection for the QBER where the BB84 rate reaches zero inside `[lo, hi]`.
pub fn bb84_threshold(lo: f64, hi: f64, tol: f64) -> Result<f64, AnalysisError> {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = bb84_rate_raw(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (bb84_rate_raw(mid)? > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A binomial rate with its 95% Wilson score interval and a Hoeffding
/// half-width for worst-case reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub events: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(ci_high - ci_low) / 2`.
    pub ci_half_width: f64,
    pub hoeffding_half_width: f64,
}

impl RateEstimate {
    /// Panics when `trials == 0`.
    pub fn new(events: u64, trials: u64) -> Self {
        assert!(trials > 0, "rate estimate over zero trials");
        let (ci_low, ci_high) = wilson_interval(events, trials, Z_95);
        RateEstimate {
            rate: events as f64 / trials as f64,
            events,
            trials,
            ci_low,
            ci_high,
            ci_half_width: 0.5 * (ci_high - ci_low),
            hoeffding_half_width: hoeffding_half_width(trials, 0.05),
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Wilson score interval for `events` successes in `trials`.
pub fn wilson_interval(events: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The bounds touch 0 and 1 exactly at the extremes; pin them against rounding.
    let low = if events == 0 { 0.0 } else { (center - spread).max(0.0) };
    let high = if events == trials {
        1.0
    } else {
        (center + spread).min(1.0)
    };
    (low, high)
}

/// `sqrt(ln(2/alpha) / 2n)`.
pub fn hoeffding_half_width(trials: u64, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * trials as f64)).sqrt()
}

/// Order-independent counts over a record stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub rounds_total: u64,
    pub rounds_mm: u64,
    pub rounds_cm: u64,
    pub rounds_cm_matched: u64,
    pub cm_errors: u64,
    /// Rounds that carry key material (all two-way MM rounds, sifted BB84).
    pub key_rounds: u64,
    pub key_errors: u64,
    pub rounds_attacked: u64,
    pub eve_guesses: u64,
    pub eve_correct: u64,
}

impl Tally {
    pub fn add(&mut self, r: &RoundRecord) {
        self.rounds_total += 1;
        match r.mode {
            RoundMode::Message => self.rounds_mm += 1,
            RoundMode::Control => self.rounds_cm += 1,
        }
        if r.cm_basis_matched == Some(true) {
            self.rounds_cm_matched += 1;
            self.cm_errors += u64::from(r.cm_error == Some(true));
        }
        if let Some(err) = r.mm_error {
            self.key_rounds += 1;
            self.key_errors += u64::from(err);
        }
        if r.attacked {
            self.rounds_attacked += 1;
        }
        if let (true, Some(guess), Some(key)) = (r.attacked, r.eve_inferred_bit, r.key_bit()) {
            self.eve_guesses += 1;
            self.eve_correct += u64::from(guess == key);
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.rounds_total += other.rounds_total;
        self.rounds_mm += other.rounds_mm;
        self.rounds_cm += other.rounds_cm;
        self.rounds_cm_matched += other.rounds_cm_matched;
        self.cm_errors += other.cm_errors;
        self.key_rounds += other.key_rounds;
        self.key_errors += other.key_errors;
        self.rounds_attacked += other.rounds_attacked;
        self.eve_guesses += other.eve_guesses;
        self.eve_correct += other.eve_correct;
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RoundRecord>) -> Self {
        let mut t = Tally::default();
        for r in records {
            t.add(r);
        }
        t
    }

    pub fn cm_error(&self) -> Result<RateEstimate, AnalysisError> {
        if self.rounds_cm_matched == 0 {
            return Err(AnalysisError::NoControlSamples);
        }
        Ok(RateEstimate::new(self.cm_errors, self.rounds_cm_matched))
    }

    pub fn mm_qber(&self) -> Result<RateEstimate, AnalysisError> {
        if self.key_rounds == 0 {
            return Err(AnalysisError::NoMessageSamples);
        }
        Ok(RateEstimate::new(self.key_errors, self.key_rounds))
    }

    pub fn eve_accuracy(&self) -> Result<f64, AnalysisError> {
        if self.eve_guesses == 0 {
            return Err(AnalysisError::NoEveInferences);
        }
        Ok(self.eve_correct as f64 / self.eve_guesses as f64)
    }
}

/// Matched-basis control-mode error rate.
pub fn estimate_cm_error(records: &[RoundRecord]) -> Result<RateEstimate, AnalysisError> {
    Tally::from_records(records).cm_error()
}

/// Error rate over rounds carrying key material.
pub fn estimate_mm_qber(records: &[RoundRecord]) -> Result<RateEstimate, AnalysisError> {
    Tally::from_records(records).mm_qber()
}

/// Fraction of attacked message rounds where Eve's guess equals the key bit.
pub fn empirical_eve_accuracy(records: &[RoundRecord]) -> Result<f64, AnalysisError> {
    Tally::from_records(records).eve_accuracy()
}

/// How Eve's information is bounded from the observed error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EveModel {
    /// Declared passive channel: `i_e = 0`.
    NoEve,
    /// QMM on LM05: `i_e = f_hat = min(1, 2 e_cm)`.
    Qmm,
    /// Eve attacks a fraction of rounds; each attacked round shows control
    /// error `cm_signature` and gives her a key guess with `key_accuracy`.
    /// `i_e = min(1, e_cm / cm_signature) * (1 - h(key_accuracy))`.
    BinaryChannel { cm_signature: f64, key_accuracy: f64 },
    /// One-way BB84 privacy amplification cost `i_e = h(qber)`.
    Bb84,
}

impl EveModel {
    pub fn eve_information(&self, e_cm: f64, qber: f64) -> Result<f64, AnalysisError> {
        match *self {
            EveModel::NoEve => Ok(0.0),
            EveModel::Qmm => Ok(eve_bound_qmm(e_cm).1),
            EveModel::BinaryChannel {
                cm_signature,
                key_accuracy,
            } => {
                // An attack invisible in control mode cannot be bounded; assume every round.
                let fraction = if cm_signature > 0.0 {
                    (e_cm / cm_signature).min(1.0)
                } else {
                    1.0
                };
                Ok(fraction * (1.0 - binary_entropy(key_accuracy)?))
            }
            EveModel::Bb84 => binary_entropy(qber.min(0.5)),
        }
    }
}

/// Aggregated estimates for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub rounds_total: u64,
    pub rounds_mm: u64,
    pub rounds_cm: u64,
    pub rounds_cm_matched: u64,
    pub rounds_attacked: u64,
    pub e_cm: RateEstimate,
    pub qber_mm: RateEstimate,
    pub i_ab: f64,
    pub i_e: f64,
    pub f_hat: f64,
    /// `i_ab - i_e` before clamping; negative means the key must be discarded.
    pub raw_rate: f64,
    pub key_rate: f64,
    /// Set when `raw_rate < 0` or the QBER exceeds 1/2.
    pub aborted: bool,
    pub eve_empirical_accuracy: Option<f64>,
    pub eve_model: EveModel,
}

impl RunStatistics {
    pub fn from_tally(protocol: Protocol, tally: &Tally, model: EveModel) -> Result<Self, AnalysisError> {
        let qber_mm = tally.mm_qber()?;
        // In BB84 the sifted key doubles as the check sample.
        let e_cm = match protocol {
            Protocol::Bb84 => qber_mm,
            _ => tally.cm_error()?,
        };
        let qber_broken = qber_mm.rate > 0.5;
        let i_ab = if qber_broken {
            0.0
        } else {
            mutual_information_ab(qber_mm.rate)?
        };
        let i_e = model.eve_information(e_cm.rate, qber_mm.rate)?;
        let raw_rate = i_ab - i_e;
        Ok(RunStatistics {
            rounds_total: tally.rounds_total,
            rounds_mm: tally.rounds_mm,
            rounds_cm: tally.rounds_cm,
            rounds_cm_matched: tally.rounds_cm_matched,
            rounds_attacked: tally.rounds_attacked,
            e_cm,
            qber_mm,
            i_ab,
            i_e,
            f_hat: eve_bound_qmm(e_cm.rate).0,
            raw_rate,
            key_rate: key_rate(i_ab, i_e),
            aborted: qber_broken || raw_rate < 0.0,
            eve_empirical_accuracy: tally.eve_accuracy().ok(),
            eve_model: model,
        })
    }
}
