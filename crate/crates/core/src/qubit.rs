//! Exact state-vector kernel for one and two qubits.
//!
//! States are dense complex amplitude vectors. Measurement randomness is
//! always supplied by the caller as a uniform draw in `[0, 1)`, so every
//! operation here is a pure function of its inputs.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amplitude type used throughout the kernel.
pub type Complex = Complex64;

/// Tolerance used when rejecting malformed states or gates at API boundaries.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Branch probabilities below this are treated as rounding noise.
const ZERO_BRANCH: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const MINUS_ONE: Complex = Complex::new(-1.0, 0.0);
const HALF_ROOT: Complex = Complex::new(FRAC_1_SQRT_2, 0.0);
const MINUS_HALF_ROOT: Complex = Complex::new(-FRAC_1_SQRT_2, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QubitError {
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("amplitude is not finite")]
    NonFinite,
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("wire index {0} out of range for a two-qubit state")]
    InvalidWire(usize),
    #[error("two-qubit state is entangled and has no product decomposition")]
    Entangled,
}

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    /// Maps a uniform draw onto a basis with equal probability.
    pub fn from_uniform(u: f64) -> Basis {
        if u < 0.5 {
            Basis::Z
        } else {
            Basis::X
        }
    }

    /// The `bit` eigenvector of this basis as raw amplitudes.
    fn eigenvector(self, bit: u8) -> [Complex; 2] {
        match (self, bit) {
            (Basis::Z, 0) => [ONE, ZERO],
            (Basis::Z, _) => [ZERO, ONE],
            (Basis::X, 0) => [HALF_ROOT, HALF_ROOT],
            (Basis::X, _) => [HALF_ROOT, MINUS_HALF_ROOT],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

fn check_finite(amps: &[Complex]) -> Result<(), QubitError> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(QubitError::NonFinite)
    }
}

fn squared_norm(amps: &[Complex]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

fn inner(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Single-qubit pure state `amp0 |0> + amp1 |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amps: [Complex; 2],
}

impl PureState {
    pub fn new(amp0: Complex, amp1: Complex) -> Result<Self, QubitError> {
        let amps = [amp0, amp1];
        check_finite(&amps)?;
        let n = squared_norm(&amps);
        if (n - 1.0).abs() > BOUNDARY_TOLERANCE {
            return Err(QubitError::NotNormalized(n));
        }
        Ok(PureState { amps })
    }

    pub fn zero() -> Self {
        PureState { amps: [ONE, ZERO] }
    }

    pub fn one() -> Self {
        PureState { amps: [ZERO, ONE] }
    }

    pub fn plus() -> Self {
        prepare(Basis::X, 0)
    }

    pub fn minus() -> Self {
        prepare(Basis::X, 1)
    }

    pub fn amplitudes(&self) -> [Complex; 2] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        squared_norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex {
        inner(&self.amps, &other.amps)
    }

    /// Born probability of outcome `bit` when measuring in `basis`.
    pub fn probability(&self, basis: Basis, bit: u8) -> f64 {
        inner(&basis.eigenvector(bit), &self.amps).norm_sqr()
    }

    /// Equality up to a global phase: `|<a|b>| >= 1 - tol`.
    pub fn approx_eq_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.inner(other).norm() >= 1.0 - tol
    }
}

/// Joint state of two qubits, amplitudes ordered `|00>, |01>, |10>, |11>`.
///
/// Wire 0 is the left (most significant) qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex; 4],
}

#[inline]
fn index(wire: usize, this_bit: usize, other_bit: usize) -> usize {
    if wire == 0 {
        (this_bit << 1) | other_bit
    } else {
        (other_bit << 1) | this_bit
    }
}

impl TwoQubitState {
    pub fn new(amps: [Complex; 4]) -> Result<Self, QubitError> {
        check_finite(&amps)?;
        let n = squared_norm(&amps);
        if (n - 1.0).abs() > BOUNDARY_TOLERANCE {
            return Err(QubitError::NotNormalized(n));
        }
        Ok(TwoQubitState { amps })
    }

    /// Computational basis state `|b0 b1>`.
    pub fn basis_state(b0: u8, b1: u8) -> Self {
        let mut amps = [ZERO; 4];
        amps[(((b0 & 1) << 1) | (b1 & 1)) as usize] = ONE;
        TwoQubitState { amps }
    }

    /// Tensor product `first ⊗ second`.
    pub fn product(first: &PureState, second: &PureState) -> Self {
        let [a0, a1] = first.amps;
        let [b0, b1] = second.amps;
        TwoQubitState {
            amps: [a0 * b0, a0 * b1, a1 * b0, a1 * b1],
        }
    }

    pub fn amplitudes(&self) -> [Complex; 4] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        squared_norm(&self.amps)
    }

    pub fn inner(&self, other: &TwoQubitState) -> Complex {
        inner(&self.amps, &other.amps)
    }

    pub fn approx_eq_up_to_phase(&self, other: &TwoQubitState, tol: f64) -> bool {
        self.inner(other).norm() >= 1.0 - tol
    }

    /// Marginal probability of `bit` on `wire` measured in `basis`.
    pub fn wire_probability(&self, wire: usize, basis: Basis, bit: u8) -> Result<f64, QubitError> {
        check_wire(wire)?;
        Ok(self.project(wire, basis, bit).iter().map(|a| a.norm_sqr()).sum())
    }

    /// Unnormalized amplitudes of the other wire after projecting `wire` onto
    /// the `bit` eigenvector of `basis`.
    fn project(&self, wire: usize, basis: Basis, bit: u8) -> [Complex; 2] {
        let e = basis.eigenvector(bit);
        let mut out = [ZERO; 2];
        for (other, slot) in out.iter_mut().enumerate() {
            *slot = e[0].conj() * self.amps[index(wire, 0, other)] + e[1].conj() * self.amps[index(wire, 1, other)];
        }
        out
    }

    /// Probability of `bit` on `wire` in `basis` and the renormalized
    /// post-measurement state, or `None` for a rounding-noise branch.
    pub fn collapse(&self, wire: usize, basis: Basis, bit: u8) -> Result<Option<(f64, TwoQubitState)>, QubitError> {
        check_wire(wire)?;
        let rest = self.project(wire, basis, bit);
        let p = squared_norm(&rest);
        if p < ZERO_BRANCH {
            return Ok(None);
        }
        let norm = p.sqrt();
        let e = basis.eigenvector(bit);
        let mut amps = [ZERO; 4];
        for this in 0..2 {
            for other in 0..2 {
                amps[index(wire, this, other)] = e[this] * rest[other] / norm;
            }
        }
        Ok(Some((p, TwoQubitState { amps })))
    }

    /// Splits a product state into `(wire 0, wire 1)` factors.
    ///
    /// Factors are defined up to a global phase each.
    pub fn factor(&self) -> Result<(PureState, PureState), QubitError> {
        let [a00, a01, a10, a11] = self.amps;
        if (a00 * a11 - a01 * a10).norm() > BOUNDARY_TOLERANCE {
            return Err(QubitError::Entangled);
        }
        let rows = [[a00, a01], [a10, a11]];
        let pick = if squared_norm(&rows[0]) >= squared_norm(&rows[1]) {
            0
        } else {
            1
        };
        let row_norm = squared_norm(&rows[pick]).sqrt();
        let second = [rows[pick][0] / row_norm, rows[pick][1] / row_norm];
        let first = [inner(&second, &rows[0]), inner(&second, &rows[1])];
        Ok((renormalized(first), renormalized(second)))
    }
}

fn renormalized(amps: [Complex; 2]) -> PureState {
    let n = squared_norm(&amps).sqrt();
    PureState {
        amps: [amps[0] / n, amps[1] / n],
    }
}

fn check_wire(wire: usize) -> Result<(), QubitError> {
    if wire > 1 {
        Err(QubitError::InvalidWire(wire))
    } else {
        Ok(())
    }
}

/// A 2×2 unitary matrix, row-major. Unitarity is checked on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex; 2]; 2],
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2 {
        m: [[ONE, ZERO], [ZERO, ONE]],
    };
    pub const PAULI_X: Unitary2 = Unitary2 {
        m: [[ZERO, ONE], [ONE, ZERO]],
    };
    pub const PAULI_Z: Unitary2 = Unitary2 {
        m: [[ONE, ZERO], [ZERO, MINUS_ONE]],
    };
    /// `iY = Z·X`; flips the bit value in both the Z and X bases.
    pub const I_PAULI_Y: Unitary2 = Unitary2 {
        m: [[ZERO, ONE], [MINUS_ONE, ZERO]],
    };
    pub const HADAMARD: Unitary2 = Unitary2 {
        m: [[HALF_ROOT, HALF_ROOT], [HALF_ROOT, MINUS_HALF_ROOT]],
    };

    pub const NAMED: [(&'static str, Unitary2); 5] = [
        ("I", Unitary2::IDENTITY),
        ("X", Unitary2::PAULI_X),
        ("Z", Unitary2::PAULI_Z),
        ("iY", Unitary2::I_PAULI_Y),
        ("H", Unitary2::HADAMARD),
    ];

    /// Builds a gate, rejecting matrices whose `U†U - I` residual exceeds
    /// [`BOUNDARY_TOLERANCE`].
    pub fn new(m: [[Complex; 2]; 2]) -> Result<Self, QubitError> {
        check_finite(&[m[0][0], m[0][1], m[1][0], m[1][1]])?;
        let u = Unitary2 { m };
        let r = u.unitarity_residual();
        if r > BOUNDARY_TOLERANCE {
            return Err(QubitError::NotUnitary(r));
        }
        Ok(u)
    }

    /// Phase rotation `diag(1, e^{i theta})`.
    pub fn phase(theta: f64) -> Self {
        Unitary2 {
            m: [[ONE, ZERO], [ZERO, Complex::from_polar(1.0, theta)]],
        }
    }

    /// Rotation about Y by `theta`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Unitary2 {
            m: [
                [Complex::new(c, 0.0), Complex::new(-s, 0.0)],
                [Complex::new(s, 0.0), Complex::new(c, 0.0)],
            ],
        }
    }

    pub fn matrix(&self) -> [[Complex; 2]; 2] {
        self.m
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Unitary2) -> Unitary2 {
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Unitary2 { m }
    }

    /// Largest entry magnitude of `U†U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let entry = self.m[0][i].conj() * self.m[0][j] + self.m[1][i].conj() * self.m[1][j];
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((entry - target).norm());
            }
        }
        worst
    }

    fn apply(&self, v: [Complex; 2]) -> [Complex; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

/// The `bit` eigenstate of `basis`.
pub fn prepare(basis: Basis, bit: u8) -> PureState {
    PureState {
        amps: basis.eigenvector(bit),
    }
}

/// Applies `u` to a single qubit.
pub fn apply_single(u: &Unitary2, s: &PureState) -> PureState {
    PureState { amps: u.apply(s.amps) }
}

/// Applies `u` to one wire of a two-qubit state: `u ⊗ I` for wire 0,
/// `I ⊗ u` for wire 1.
pub fn apply_on_wire(u: &Unitary2, wire: usize, s: &TwoQubitState) -> Result<TwoQubitState, QubitError> {
    check_wire(wire)?;
    let mut amps = s.amps;
    for other in 0..2 {
        let i0 = index(wire, 0, other);
        let i1 = index(wire, 1, other);
        let [n0, n1] = u.apply([s.amps[i0], s.amps[i1]]);
        amps[i0] = n0;
        amps[i1] = n1;
    }
    Ok(TwoQubitState { amps })
}

/// Exchanges the two wires. Pure amplitude permutation, so it is an exact
/// involution.
pub fn swap_gate(s: &TwoQubitState) -> TwoQubitState {
    let [a00, a01, a10, a11] = s.amps;
    TwoQubitState {
        amps: [a00, a10, a01, a11],
    }
}

/// Picks the outcome for a two-way split at `p0`, steering away from a
/// branch whose probability is rounding noise.
fn choose(p0: f64, p1: f64, rand: f64) -> u8 {
    let bit = if rand < p0 { 0 } else { 1 };
    let chosen = if bit == 0 { p0 } else { p1 };
    if chosen < ZERO_BRANCH {
        if p0 >= p1 {
            0
        } else {
            1
        }
    } else {
        bit
    }
}

/// Born-rule measurement of a single qubit.
///
/// Returns outcome 0 iff `rand < p0`, together with the post-measurement
/// eigenstate.
pub fn measure(s: &PureState, basis: Basis, rand: f64) -> (u8, PureState) {
    let p0 = s.probability(basis, 0);
    let p1 = s.probability(basis, 1);
    let bit = choose(p0, p1, rand);
    (bit, prepare(basis, bit))
}

/// Measures one wire of a two-qubit state and renormalizes the remainder.
pub fn measure_wire(
    s: &TwoQubitState,
    wire: usize,
    basis: Basis,
    rand: f64,
) -> Result<(u8, TwoQubitState), QubitError> {
    check_wire(wire)?;
    let p0 = s.wire_probability(wire, basis, 0)?;
    let p1 = s.wire_probability(wire, basis, 1)?;
    let bit = choose(p0, p1, rand);
    let (_, post) = s
        .collapse(wire, basis, bit)?
        .expect("chosen branch has non-negligible probability");
    Ok((bit, post))
}

/// One of the four Bell states.
pub fn bell_state(kind: BellKind) -> TwoQubitState {
    let amps = match kind {
        BellKind::PhiPlus => [HALF_ROOT, ZERO, ZERO, HALF_ROOT],
        BellKind::PhiMinus => [HALF_ROOT, ZERO, ZERO, MINUS_HALF_ROOT],
        BellKind::PsiPlus => [ZERO, HALF_ROOT, HALF_ROOT, ZERO],
        BellKind::PsiMinus => [ZERO, HALF_ROOT, MINUS_HALF_ROOT, ZERO],
    };
    TwoQubitState { amps }
}

/// `|<Bell_k|s>|^2` for each kind, in [`BellKind::ALL`] order.
pub fn bell_probabilities(s: &TwoQubitState) -> [f64; 4] {
    BellKind::ALL.map(|k| bell_state(k).inner(s).norm_sqr())
}

/// Projective Bell measurement. Outcomes are laid out on `[0, 1)` in
/// [`BellKind::ALL`] order.
pub fn bell_measure(s: &TwoQubitState, rand: f64) -> BellKind {
    let probs = bell_probabilities(s);
    let mut cumulative = 0.0;
    let mut pick = BellKind::ALL.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p;
        if rand < cumulative {
            pick = i;
            break;
        }
    }
    if probs[pick] < ZERO_BRANCH {
        pick = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
    }
    BellKind::ALL[pick]
}
