//! Code algebra for the dialogue protocols: the two-bit Pauli code table, the
//! Bell and GHZ basis families generated from their seed states, the encoding
//! unitaries, and the XOR-with-phase composition law.
//!
//! Families are generated from the operator definition — code applied to the
//! seed state, global phase stripped — never transcribed from a ket table.
//! Register order is (home, travel, post) = qubits (0, 1, 2).

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    exact_distribution_pure, identity_2x2, Axis, Matrix2, MeasurementSpec, StateVector,
};

/// Two-bit code for a single-qubit Pauli: (0,0)→I, (0,1)→σx, (1,0)→σy, (1,1)→σz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwoBitCode {
    pub a: u8,
    pub b: u8,
}

impl TwoBitCode {
    pub fn new(a: u8, b: u8) -> Self {
        TwoBitCode { a: a & 1, b: b & 1 }
    }

    pub fn xor(self, other: TwoBitCode) -> TwoBitCode {
        TwoBitCode {
            a: self.a ^ other.a,
            b: self.b ^ other.b,
        }
    }

    pub fn is_identity(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// 1 if the Pauli flips computational basis states (σx or σy).
    pub fn flips_bit(self) -> u8 {
        self.a ^ self.b
    }
}

impl std::fmt::Display for TwoBitCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// Two-qubit code (a,b;c,d): a Pauli for the travel qubit and one for the
/// post qubit. Admissible protocol codes have c = 0, which restricts the post
/// operation to I or σx and indexes the eight-member GHZ family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadCode {
    pub t_code: TwoBitCode,
    pub p_code: TwoBitCode,
}

impl QuadCode {
    pub fn new(t_code: TwoBitCode, p_code: TwoBitCode) -> Self {
        QuadCode { t_code, p_code }
    }

    pub fn from_bits(bits: [u8; 4]) -> Self {
        QuadCode {
            t_code: TwoBitCode::new(bits[0], bits[1]),
            p_code: TwoBitCode::new(bits[2], bits[3]),
        }
    }

    pub fn bits(self) -> [u8; 4] {
        [self.t_code.a, self.t_code.b, self.p_code.a, self.p_code.b]
    }

    pub fn is_admissible(self) -> bool {
        self.p_code.a == 0
    }

    fn check_admissible(self) -> Result<()> {
        if !self.is_admissible() {
            return Err(Error::InvalidCode(format!(
                "code {self} has a σy/σz post operation; admissible codes have c = 0"
            )));
        }
        Ok(())
    }

    pub fn xor(self, other: QuadCode) -> QuadCode {
        QuadCode {
            t_code: self.t_code.xor(other.t_code),
            p_code: self.p_code.xor(other.p_code),
        }
    }

    /// Position of this code in the eight-member family (admissible codes only).
    pub fn family_index(self) -> usize {
        debug_assert!(self.is_admissible());
        (self.t_code.a as usize) << 2 | (self.t_code.b as usize) << 1 | self.p_code.b as usize
    }

    pub fn from_family_index(index: usize) -> Self {
        QuadCode {
            t_code: TwoBitCode::new((index >> 2) as u8, (index >> 1) as u8),
            p_code: TwoBitCode::new(0, index as u8),
        }
    }

    /// The eight admissible codes in family order.
    pub fn all_admissible() -> impl Iterator<Item = QuadCode> {
        (0..8).map(QuadCode::from_family_index)
    }
}

impl std::fmt::Display for QuadCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{};{},{})",
            self.t_code.a, self.t_code.b, self.p_code.a, self.p_code.b
        )
    }
}

/// Phase factor from composing Pauli codes, stored exactly as a power of i.
/// Every composition product lands in {1, i, −1, −i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn value(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            0 => write!(f, "1"),
            1 => write!(f, "i"),
            2 => write!(f, "-1"),
            _ => write!(f, "-i"),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The Pauli matrix named by a two-bit code.
pub fn pauli_from_code(code: TwoBitCode) -> Matrix2 {
    let z = Complex64::ZERO;
    match (code.a, code.b) {
        (0, 0) => identity_2x2(),
        (0, _) => [[z, c(1.0, 0.0)], [c(1.0, 0.0), z]],
        (1, 0) => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        _ => [[c(1.0, 0.0), z], [z, c(-1.0, 0.0)]],
    }
}

/// The unique φ with pauli(c1)·pauli(c2) = φ·pauli(c1 ⊕ c2).
///
/// Single-qubit factors are always 1 or ±i: identical or identity-containing
/// pairs give 1, and the cyclic products x→y→z→x give +i (the reverse −i).
pub fn pauli_phase(c1: TwoBitCode, c2: TwoBitCode) -> Phase {
    if c1.is_identity() || c2.is_identity() || c1 == c2 {
        return Phase::ONE;
    }
    // order the three non-identity codes as x(0,1) → y(1,0) → z(1,1)
    fn rank(c: TwoBitCode) -> u8 {
        match (c.a, c.b) {
            (0, _) => 0,
            (1, 0) => 1,
            _ => 2,
        }
    }
    if (rank(c1) + 1) % 3 == rank(c2) {
        Phase::I
    } else {
        Phase::MINUS_I
    }
}

/// Composes two two-qubit codes: componentwise XOR index plus the product of
/// the per-qubit phase factors. Matches matrix multiplication of the
/// corresponding unitaries, first argument on the left.
pub fn compose_codes(qa: QuadCode, qb: QuadCode) -> (QuadCode, Phase) {
    let index = qa.xor(qb);
    let phase = pauli_phase(qa.t_code, qb.t_code) * pauli_phase(qa.p_code, qb.p_code);
    (index, phase)
}

fn epr_seed() -> StateVector {
    // (|01⟩ + |10⟩)/√2 on (home, travel)
    let a = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    StateVector::new(2, vec![Complex64::ZERO, a, a, Complex64::ZERO]).expect("valid seed")
}

fn ghz_seed() -> StateVector {
    // (|000⟩ + |111⟩)/√2 on (home, travel, post)
    let a = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::ZERO;
    StateVector::new(3, vec![a, z, z, z, z, z, z, a]).expect("valid seed")
}

/// The four Bell states indexed by the code applied to the travel qubit of
/// the EPR seed, global phase stripped.
#[derive(Debug)]
pub struct BellFamily {
    members: Vec<StateVector>,
}

impl BellFamily {
    fn build() -> Self {
        let seed = epr_seed();
        let members = (0..4)
            .map(|i| {
                let code = TwoBitCode::new((i >> 1) as u8, i as u8);
                seed.apply_1q(1, &pauli_from_code(code))
                    .expect("pauli is unitary")
                    .strip_global_phase()
            })
            .collect();
        BellFamily { members }
    }

    pub fn member(&self, code: TwoBitCode) -> &StateVector {
        &self.members[(code.a as usize) << 1 | code.b as usize]
    }

    pub fn members(&self) -> &[StateVector] {
        &self.members
    }

    pub fn code_of(&self, index: usize) -> TwoBitCode {
        TwoBitCode::new((index >> 1) as u8, index as u8)
    }
}

/// The eight GHZ states indexed by admissible codes, generated by applying
/// the travel-qubit and post-qubit Paulis to the seed and stripping the
/// global phase. Pairwise orthonormal.
#[derive(Debug)]
pub struct GhzFamily {
    members: Vec<StateVector>,
}

impl GhzFamily {
    fn build() -> Self {
        let seed = ghz_seed();
        let members = (0..8)
            .map(|i| {
                let q = QuadCode::from_family_index(i);
                apply_code(&seed, q).expect("seed is 3 qubits").strip_global_phase()
            })
            .collect();
        GhzFamily { members }
    }

    pub fn member(&self, code: QuadCode) -> Result<&StateVector> {
        code.check_admissible()?;
        Ok(&self.members[code.family_index()])
    }

    pub fn members(&self) -> &[StateVector] {
        &self.members
    }

    pub fn code_of(&self, index: usize) -> QuadCode {
        QuadCode::from_family_index(index)
    }
}

fn apply_code(state: &StateVector, q: QuadCode) -> Result<StateVector> {
    let s = state.apply_1q(1, &pauli_from_code(q.t_code))?;
    s.apply_1q(2, &pauli_from_code(q.p_code))
}

/// Shared Bell family, constructed once.
pub fn bell_family() -> &'static BellFamily {
    static FAMILY: OnceLock<BellFamily> = OnceLock::new();
    FAMILY.get_or_init(BellFamily::build)
}

/// Shared GHZ family, constructed once.
pub fn ghz_family() -> &'static GhzFamily {
    static FAMILY: OnceLock<GhzFamily> = OnceLock::new();
    FAMILY.get_or_init(GhzFamily::build)
}

/// Applies the encoding unitary of an admissible code to a 3-qubit register:
/// the travel Pauli on qubit 1 and the post Pauli on qubit 2.
pub fn encode(state: &StateVector, q: QuadCode) -> Result<StateVector> {
    q.check_admissible()?;
    if state.n_qubits() != 3 {
        return Err(Error::InvalidArgument(format!(
            "encode expects a 3-qubit register, got {}",
            state.n_qubits()
        )));
    }
    apply_code(state, q)
}

/// The measurement triples (h,t,p) that occur with nonzero probability when
/// the named family member is measured qubit-wise in the given basis.
/// Computed from the exact distribution, not from a transcription: the Z set
/// has two triples at probability 1/2, the X set four at 1/4.
pub fn allowed_outcomes(idx: QuadCode, axis: Axis) -> Result<Vec<(u8, u8, u8)>> {
    let member = ghz_family().member(idx)?;
    let spec = [(0, axis), (1, axis), (2, axis)];
    let table = exact_distribution_pure(member, &MeasurementSpec::PerQubit(&spec))?;
    let mut out: Vec<(u8, u8, u8)> = table
        .into_iter()
        .filter(|(_, p)| *p > 1e-9)
        .map(|(bits, _)| (bits[0], bits[1], bits[2]))
        .collect();
    out.sort_unstable();
    Ok(out)
}
