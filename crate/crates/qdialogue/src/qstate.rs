//! Dense state-vector engine for at most four qubits.
//!
//! The register convention is fixed once for the whole crate: qubit 0 is the
//! most significant bit, so the amplitude index of |b0 b1 b2⟩ is
//! `b0*4 + b1*2 + b2`. States are immutable; every operation returns a new
//! value. All sampling draws from an injected generator so transcripts are
//! reproducible byte for byte.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Hard cap on register width. Everything in this crate fits in 4 qubits.
pub const MAX_QUBITS: usize = 4;
/// Normalization / orthogonality tolerance.
pub const NORM_TOL: f64 = 1e-12;
/// Negative probabilities above this floor are rounding noise and clamp to 0.
const PROB_FLOOR: f64 = -1e-15;

pub type Matrix2 = [[Complex64; 2]; 2];

pub fn identity_2x2() -> Matrix2 {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [[o, z], [z, o]]
}

/// Single-qubit measurement axis: Z is {|0⟩,|1⟩}, X is {|+⟩,|−⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    Z,
    X,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Z => write!(f, "Z"),
            Axis::X => write!(f, "X"),
        }
    }
}

/// Normalized amplitude vector over `n_qubits` qubits.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, validating length and norm.
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "n_qubits must be 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                1 << n_qubits
            )));
        }
        let state = StateVector { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized: |ψ| = {norm}"
            )));
        }
        Ok(state)
    }

    /// Computational basis state |bits⟩.
    pub fn basis_state(n_qubits: usize, bits: &[u8]) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "n_qubits must be 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if bits.len() != n_qubits {
            return Err(Error::InvalidArgument(format!(
                "bit list has length {}, expected {}",
                bits.len(),
                n_qubits
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bits must be 0 or 1".into()));
        }
        let mut index = 0usize;
        for &b in bits {
            index = (index << 1) | b as usize;
        }
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[index] = Complex64::ONE;
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Bit mask selecting `qubit` in an amplitude index (qubit 0 is MSB).
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit index {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies a 2x2 matrix to one qubit without checking unitarity.
    /// Used internally for projectors as well as gates.
    fn apply_2x2(&self, qubit: usize, m: &Matrix2) -> StateVector {
        let mask = self.mask(qubit);
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                out[i] = m[0][0] * self.amps[i] + m[0][1] * self.amps[j];
                out[j] = m[1][0] * self.amps[i] + m[1][1] * self.amps[j];
            }
        }
        StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        }
    }

    /// Applies a single-qubit unitary, i.e. (I⊗…⊗u⊗…⊗I)|ψ⟩.
    pub fn apply_1q(&self, qubit: usize, u: &Matrix2) -> Result<StateVector> {
        self.check_qubit(qubit)?;
        if !is_unitary_2x2(u) {
            return Err(Error::InvalidArgument(
                "matrix is not unitary within tolerance".into(),
            ));
        }
        Ok(self.apply_2x2(qubit, u))
    }

    /// Controlled-NOT with both qubits inside this register.
    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<StateVector> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidArgument(
                "control and target must differ".into(),
            ));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for i in 0..self.amps.len() {
            let j = if i & cmask != 0 { i ^ tmask } else { i };
            out[j] = self.amps[i];
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// Kronecker product; `self`'s qubits come first (most significant).
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "tensor product would have {n} qubits, max is {MAX_QUBITS}"
            )));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies by the global phase that makes the first nonzero amplitude
    /// real and positive. Families built from this are canonical, which keeps
    /// transcripts and golden outputs byte-stable.
    pub fn strip_global_phase(&self) -> StateVector {
        let first = self.amps.iter().find(|a| a.norm() > NORM_TOL);
        let phase = match first {
            Some(a) => a.conj() / a.norm(),
            None => Complex64::ONE,
        };
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    /// Removes a qubit that is in a definite computational state (e.g. just
    /// measured in Z), returning its bit and the reduced register.
    pub fn remove_qubit(&self, qubit: usize) -> Result<(u8, StateVector)> {
        self.check_qubit(qubit)?;
        if self.n_qubits == 1 {
            return Err(Error::InvalidArgument(
                "cannot remove the last qubit of a register".into(),
            ));
        }
        let mask = self.mask(qubit);
        let p1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let bit = if p1 > 1.0 - 1e-9 {
            1u8
        } else if p1 < 1e-9 {
            0u8
        } else {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} is not in a definite basis state (p1 = {p1})"
            )));
        };
        let keep = if bit == 1 { mask } else { 0 };
        let low = mask - 1; // bits less significant than the removed qubit
        let mut amps = vec![Complex64::ZERO; self.dim() / 2];
        for i in 0..self.amps.len() {
            if i & mask == keep {
                let j = (i & low) | ((i >> 1) & !low);
                amps[j] = self.amps[i];
            }
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Ok((
            bit,
            StateVector {
                n_qubits: self.n_qubits - 1,
                amps,
            },
        ))
    }
}

pub fn is_unitary_2x2(u: &Matrix2) -> bool {
    // u†u == I entrywise within NORM_TOL.
    for r in 0..2 {
        for c in 0..2 {
            let mut s = Complex64::ZERO;
            for row in u {
                s += row[r].conj() * row[c];
            }
            let expect = if r == c { 1.0 } else { 0.0 };
            if (s - expect).norm() > 1e-9 {
                return false;
            }
        }
    }
    true
}

const HALF: f64 = 0.5;

fn projector(axis: Axis, bit: u8) -> Matrix2 {
    let o = Complex64::ONE;
    let z = Complex64::ZERO;
    let h = Complex64::new(HALF, 0.0);
    let nh = Complex64::new(-HALF, 0.0);
    match (axis, bit) {
        (Axis::Z, 0) => [[o, z], [z, z]],
        (Axis::Z, _) => [[z, z], [z, o]],
        (Axis::X, 0) => [[h, h], [h, h]],
        (Axis::X, _) => [[h, nh], [nh, h]],
    }
}

/// Result of a single-qubit measurement. For X the label is 0 = |+⟩, 1 = |−⟩.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub bit: u8,
    pub post_state: StateVector,
}

/// Projective measurement of one qubit in the Z or X basis, sampled from the
/// Born distribution.
pub fn measure_qubit<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    axis: Axis,
    rng: &mut R,
) -> Result<Outcome> {
    state.check_qubit(qubit)?;
    let p1 = {
        let projected = state.apply_2x2(qubit, &projector(axis, 1));
        projected.norm().powi(2)
    };
    let bit = u8::from(rng.random::<f64>() < p1);
    let projected = state.apply_2x2(qubit, &projector(axis, bit));
    let norm = projected.norm();
    let amps = projected.amps.iter().map(|a| a / norm).collect();
    Ok(Outcome {
        bit,
        post_state: StateVector {
            n_qubits: state.n_qubits,
            amps,
        },
    })
}

/// Projects one qubit onto a basis outcome without sampling, returning the
/// outcome probability and the renormalized post-state (`None` when the
/// branch has no weight). This is the building block for exact enumeration
/// of measurement branches.
pub fn project_qubit(
    state: &StateVector,
    qubit: usize,
    axis: Axis,
    bit: u8,
) -> Result<(f64, Option<StateVector>)> {
    state.check_qubit(qubit)?;
    let projected = state.apply_2x2(qubit, &projector(axis, bit));
    let p = projected.norm().powi(2);
    if p < 1e-12 {
        return Ok((p.max(0.0), None));
    }
    let norm = p.sqrt();
    let amps = projected.amps.iter().map(|a| a / norm).collect();
    Ok((
        p,
        Some(StateVector {
            n_qubits: state.n_qubits,
            amps,
        }),
    ))
}

/// Result of a joint projective measurement: the family index and the family
/// member the register collapsed onto.
#[derive(Clone, Debug)]
pub struct FamilyOutcome {
    pub index: usize,
    pub post_state: StateVector,
}

fn validate_family(family: &[StateVector]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty projective family".into()));
    }
    let n = family[0].n_qubits;
    for (i, f) in family.iter().enumerate() {
        if f.n_qubits != n {
            return Err(Error::InvalidArgument(
                "family members differ in qubit count".into(),
            ));
        }
        if (f.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "family member {i} is not normalized"
            )));
        }
        for (j, g) in family.iter().enumerate().skip(i + 1) {
            if f.inner_product(g)?.norm() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "family members {i} and {j} are not orthogonal"
                )));
            }
        }
    }
    Ok(())
}

/// Joint measurement against an orthonormal family covering the full register.
pub fn measure_projective<R: Rng + ?Sized>(
    state: &StateVector,
    family: &[StateVector],
    rng: &mut R,
) -> Result<FamilyOutcome> {
    validate_family(family)?;
    if family[0].n_qubits != state.n_qubits {
        return Err(Error::InvalidArgument(
            "family does not match register width".into(),
        ));
    }
    let probs: Vec<f64> = family
        .iter()
        .map(|f| Ok(f.inner_product(state)?.norm_sqr().max(0.0)))
        .collect::<Result<_>>()?;
    let total: f64 = probs.iter().sum();
    if total < 1.0 - 1e-9 {
        return Err(Error::IncompleteFamily(total));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut index = family.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            index = i;
            break;
        }
    }
    Ok(FamilyOutcome {
        index,
        post_state: family[index].clone(),
    })
}

/// What to measure in [`exact_distribution`]: either a Z/X axis per chosen
/// qubit, or one projective family over the whole register.
#[derive(Clone, Debug)]
pub enum MeasurementSpec<'a> {
    PerQubit(&'a [(usize, Axis)]),
    Projective(&'a [StateVector]),
}

/// Exact joint outcome probabilities — no sampling. This is the brute-force
/// oracle every derived number in the test suite is checked against.
///
/// Mixed states are passed as weighted lists of pure states. Labels are the
/// outcome bits in spec order (for `PerQubit`) or a one-element family index
/// (for `Projective`). Unmeasured qubits are marginalized over.
pub fn exact_distribution(
    ensemble: &[(f64, StateVector)],
    spec: &MeasurementSpec,
) -> Result<Vec<(Vec<u8>, f64)>> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let n = ensemble[0].1.n_qubits;
    let wsum: f64 = ensemble.iter().map(|(w, _)| w).sum();
    if (wsum - 1.0).abs() > 1e-9 || ensemble.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::InvalidArgument(
            "ensemble weights must be nonnegative and sum to 1".into(),
        ));
    }
    if ensemble.iter().any(|(_, s)| s.n_qubits != n) {
        return Err(Error::InvalidArgument(
            "ensemble states differ in qubit count".into(),
        ));
    }

    match spec {
        MeasurementSpec::PerQubit(qubits) => {
            let mut seen = [false; MAX_QUBITS];
            for &(q, _) in qubits.iter() {
                if q >= n {
                    return Err(Error::InvalidArgument(format!(
                        "qubit index {q} out of range"
                    )));
                }
                if seen[q] {
                    return Err(Error::InvalidArgument(format!(
                        "overlapping subsystems: qubit {q} listed twice"
                    )));
                }
                seen[q] = true;
            }
            let k = qubits.len();
            let mut table = Vec::with_capacity(1 << k);
            for outcome in 0..(1usize << k) {
                let bits: Vec<u8> = (0..k)
                    .map(|pos| ((outcome >> (k - 1 - pos)) & 1) as u8)
                    .collect();
                let mut prob = 0.0;
                for (w, state) in ensemble {
                    let mut projected = state.clone();
                    for (pos, &(q, axis)) in qubits.iter().enumerate() {
                        projected = projected.apply_2x2(q, &projector(axis, bits[pos]));
                    }
                    prob += w * projected.norm().powi(2);
                }
                if prob < PROB_FLOOR {
                    return Err(Error::InvalidArgument(format!(
                        "negative probability {prob} out of tolerance"
                    )));
                }
                table.push((bits, prob.max(0.0)));
            }
            Ok(table)
        }
        MeasurementSpec::Projective(family) => {
            validate_family(family)?;
            if family[0].n_qubits() != n {
                return Err(Error::InvalidArgument(
                    "family does not match register width".into(),
                ));
            }
            let mut table = Vec::with_capacity(family.len());
            let mut total = 0.0;
            for (i, f) in family.iter().enumerate() {
                let mut prob = 0.0;
                for (w, state) in ensemble {
                    prob += w * f.inner_product(state)?.norm_sqr();
                }
                let prob = prob.max(0.0);
                total += prob;
                table.push((vec![i as u8], prob));
            }
            if total < 1.0 - 1e-9 {
                return Err(Error::IncompleteFamily(total));
            }
            Ok(table)
        }
    }
}

/// [`exact_distribution`] for a single pure state.
pub fn exact_distribution_pure(
    state: &StateVector,
    spec: &MeasurementSpec,
) -> Result<Vec<(Vec<u8>, f64)>> {
    exact_distribution(&[(1.0, state.clone())], spec)
}
