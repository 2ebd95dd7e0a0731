//! Pluggable eavesdropper strategies acting at the channel interception
//! points, plus the inference step that turns Eve's measurement records and
//! the public log into message guesses.
//!
//! Every action here is a unitary or a projective measurement on qubits Eve
//! physically holds; she never reads amplitudes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghz_codec::{bell_family, ghz_family, pauli_from_code, QuadCode, TwoBitCode};
use crate::protocol::{Announcement, MessageQuad, Party, Protocol, QubitRef, RoundState};
use crate::qstate::{measure_projective, Axis, Matrix2};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptScope {
    BothChannels,
    TOnly,
    POnly,
}

impl std::fmt::Display for InterceptScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InterceptScope::BothChannels => write!(f, "both"),
            InterceptScope::TOnly => write!(f, "t-only"),
            InterceptScope::POnly => write!(f, "p-only"),
        }
    }
}

impl std::str::FromStr for InterceptScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" | "both-channels" => Ok(InterceptScope::BothChannels),
            "t-only" | "t" => Ok(InterceptScope::TOnly),
            "p-only" | "p" => Ok(InterceptScope::POnly),
            other => Err(Error::Config(format!(
                "unknown interception scope '{other}' (expected both|t-only|p-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTarget {
    T,
    P,
    Both,
}

impl std::fmt::Display for ProbeTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeTarget::T => write!(f, "t"),
            ProbeTarget::P => write!(f, "p"),
            ProbeTarget::Both => write!(f, "both"),
        }
    }
}

impl std::str::FromStr for ProbeTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(ProbeTarget::T),
            "p" => Ok(ProbeTarget::P),
            "both" => Ok(ProbeTarget::Both),
            other => Err(Error::Config(format!(
                "unknown probe target '{other}' (expected t|p|both)"
            ))),
        }
    }
}

/// Which attack runs and where it bites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveStrategy {
    None,
    InterceptResend {
        scope: InterceptScope,
    },
    EntangleMeasure {
        target: ProbeTarget,
        basis: Axis,
    },
}

impl EveStrategy {
    /// Compact spec string, e.g. `intercept-resend:t-only` or
    /// `entangle-measure:p:z`.
    pub fn spec_string(&self) -> String {
        match self {
            EveStrategy::None => "none".into(),
            EveStrategy::InterceptResend { scope } => format!("intercept-resend:{scope}"),
            EveStrategy::EntangleMeasure { target, basis } => {
                format!("entangle-measure:{target}:{}", basis.to_string().to_lowercase())
            }
        }
    }

    /// Parses a spec string; omitted qualifiers default to scope `both`,
    /// target `t`, basis `z`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or("");
        let strategy = match kind {
            "none" => {
                if parts.next().is_some() {
                    return Err(Error::Config(format!("unexpected qualifier in '{s}'")));
                }
                EveStrategy::None
            }
            "intercept-resend" => {
                let scope = match parts.next() {
                    Some(q) => q.parse()?,
                    None => InterceptScope::BothChannels,
                };
                EveStrategy::InterceptResend { scope }
            }
            "entangle-measure" => {
                let target = match parts.next() {
                    Some(q) => q.parse()?,
                    None => ProbeTarget::T,
                };
                let basis = match parts.next() {
                    Some("z") | Some("Z") => Axis::Z,
                    Some("x") | Some("X") => Axis::X,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "unknown probe basis '{other}' (expected z|x)"
                        )))
                    }
                    None => Axis::Z,
                };
                EveStrategy::EntangleMeasure { target, basis }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown eavesdropper strategy '{other}' \
                     (expected none|intercept-resend|entangle-measure)"
                )))
            }
        };
        if parts.next().is_some() {
            return Err(Error::Config(format!("too many qualifiers in '{s}'")));
        }
        Ok(strategy)
    }

    /// The baseline protocol has a single traveling qubit, so scopes and
    /// probe targets that name the post channel are rejected for it.
    pub fn validate_for(&self, protocol: Protocol) -> Result<()> {
        if protocol == Protocol::Baseline {
            match self {
                EveStrategy::InterceptResend { scope } if *scope != InterceptScope::BothChannels => {
                    return Err(Error::Config(format!(
                        "scope {scope} does not apply to the baseline protocol; \
                         it has one channel"
                    )));
                }
                EveStrategy::EntangleMeasure { target, .. } if *target != ProbeTarget::T => {
                    return Err(Error::Config(format!(
                        "probe target {target} does not apply to the baseline protocol"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.spec_string())
    }
}

/// Eve's per-round working memory: stashed qubits, measurement results, and
/// a snapshot of the public log. Only measurement outcomes and announcements
/// ever feed her inference.
#[derive(Debug, Clone, Default)]
pub struct EveMemory {
    /// Labels of genuine qubits Eve is holding back.
    pub held: Vec<&'static str>,
    /// (channel label, probe basis, outcome) per ancilla measurement.
    pub ancilla_outcomes: Vec<(char, Axis, u8)>,
    pub bell_result: Option<TwoBitCode>,
    pub ghz_result: Option<QuadCode>,
    pub log_snapshot: Vec<Announcement>,
    stash_t: Option<QubitRef>,
    stash_p: Option<QubitRef>,
    substitute_reg: Option<usize>,
}

impl EveMemory {
    /// Compact transcript note; `None` when Eve did nothing.
    pub fn record_string(&self) -> Option<String> {
        let mut parts = Vec::new();
        if !self.held.is_empty() {
            parts.push(format!("held={}", self.held.join("+")));
        }
        for (label, basis, bit) in &self.ancilla_outcomes {
            parts.push(format!("probe:{label}:{basis}={bit}"));
        }
        if let Some(code) = self.bell_result {
            parts.push(format!("bell={code}"));
        }
        if let Some(quad) = self.ghz_result {
            parts.push(format!("ghz={quad}"));
        }
        if parts.is_empty() {
            None
        } else {
            Some(parts.join(" "))
        }
    }
}

fn hadamard() -> Matrix2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Acts while the travel qubits move Bob → Alice.
///
/// Intercept-and-resend stores the in-scope qubits and substitutes fresh ones
/// from Eve's own seed: a full GHZ triple when she takes both channels (she
/// keeps its home qubit), or half of a fresh EPR pair for a single channel.
/// The entangle-and-measure probe does nothing on this leg.
pub fn eve_forward_hook<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    rs: &mut RoundState,
    mem: &mut EveMemory,
    _rng: &mut R,
) -> Result<()> {
    let EveStrategy::InterceptResend { scope } = strategy else {
        return Ok(());
    };

    match rs.protocol() {
        Protocol::Baseline => {
            // keep t, send Alice the T half of a fresh EPR pair
            let t = rs.slot_t;
            rs.set_owner(t, Party::Eve);
            mem.stash_t = Some(t);
            mem.held.push("t");
            let seed = bell_family().member(TwoBitCode::new(0, 0)).clone();
            let reg = rs.add_register(seed, vec![Party::Eve, Party::Channel]);
            mem.substitute_reg = Some(reg);
            rs.slot_t = QubitRef { reg, idx: 1 };
        }
        Protocol::Revised => match scope {
            InterceptScope::BothChannels => {
                let (t, p) = (rs.slot_t, rs.slot_p.expect("revised rounds have a post slot"));
                rs.set_owner(t, Party::Eve);
                rs.set_owner(p, Party::Eve);
                mem.stash_t = Some(t);
                mem.stash_p = Some(p);
                mem.held.push("t");
                mem.held.push("p");
                let seed = ghz_family()
                    .member(QuadCode::from_bits([0, 0, 0, 0]))?
                    .clone();
                let reg =
                    rs.add_register(seed, vec![Party::Eve, Party::Channel, Party::Channel]);
                mem.substitute_reg = Some(reg);
                rs.slot_t = QubitRef { reg, idx: 1 };
                rs.slot_p = Some(QubitRef { reg, idx: 2 });
            }
            InterceptScope::TOnly => {
                let t = rs.slot_t;
                rs.set_owner(t, Party::Eve);
                mem.stash_t = Some(t);
                mem.held.push("t");
                let seed = bell_family().member(TwoBitCode::new(0, 0)).clone();
                let reg = rs.add_register(seed, vec![Party::Eve, Party::Channel]);
                mem.substitute_reg = Some(reg);
                rs.slot_t = QubitRef { reg, idx: 1 };
            }
            InterceptScope::POnly => {
                let p = rs.slot_p.expect("revised rounds have a post slot");
                rs.set_owner(p, Party::Eve);
                mem.stash_p = Some(p);
                mem.held.push("p");
                let seed = bell_family().member(TwoBitCode::new(0, 0)).clone();
                let reg = rs.add_register(seed, vec![Party::Eve, Party::Channel]);
                mem.substitute_reg = Some(reg);
                rs.slot_p = Some(QubitRef { reg, idx: 1 });
            }
        },
    }
    Ok(())
}

/// CNOT probe on one traveling qubit: attach an ancilla in |0⟩, entangle with
/// the traveler as control, measure the ancilla in the probe basis, discard it.
fn probe_qubit<R: Rng + ?Sized>(
    rs: &mut RoundState,
    target: QubitRef,
    label: char,
    basis: Axis,
    mem: &mut EveMemory,
    rng: &mut R,
) -> Result<()> {
    let anc = rs.attach_ancilla(target.reg, Party::Eve)?;
    rs.registers[target.reg] = rs.registers[target.reg].apply_cnot(target.idx, anc.idx)?;
    let bit = rs.measure_at(anc, basis, rng)?;
    if basis == Axis::X {
        // rotate the collapsed |±⟩ ancilla back to the computational basis
        // so it can be detached
        rs.apply_at(anc, &hadamard())?;
    }
    rs.drop_qubit(anc)?;
    mem.ancilla_outcomes.push((label, basis, bit));
    Ok(())
}

/// Acts while the travel qubits move Alice → Bob.
///
/// Intercept-and-resend reads Alice's code off the substitute resource with a
/// joint Bell/GHZ measurement, re-applies the same code to the stored genuine
/// qubits, and forwards those to Bob. Entangle-and-measure couples a CNOT
/// probe ancilla to each in-scope traveler.
pub fn eve_backward_hook<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    rs: &mut RoundState,
    mem: &mut EveMemory,
    rng: &mut R,
) -> Result<()> {
    match strategy {
        EveStrategy::None => Ok(()),
        EveStrategy::EntangleMeasure { target, basis } => {
            mem.log_snapshot = rs.log().to_vec();
            if matches!(target, ProbeTarget::T | ProbeTarget::Both) {
                let t = rs.slot_t;
                probe_qubit(rs, t, 't', *basis, mem, rng)?;
            }
            if matches!(target, ProbeTarget::P | ProbeTarget::Both) {
                let p = rs.slot_p.ok_or_else(|| {
                    Error::InvalidArgument("probe target p needs a post channel".into())
                })?;
                probe_qubit(rs, p, 'p', *basis, mem, rng)?;
            }
            Ok(())
        }
        EveStrategy::InterceptResend { scope } => {
            mem.log_snapshot = rs.log().to_vec();
            let reg = mem
                .substitute_reg
                .ok_or_else(|| Error::InvalidArgument("no substitute resource staged".into()))?;
            match (rs.protocol(), scope) {
                (Protocol::Baseline, _) | (Protocol::Revised, InterceptScope::TOnly) => {
                    // Bell-measure (home', T) to read Alice's travel code.
                    let outcome =
                        measure_projective(&rs.registers[reg], bell_family().members(), rng)?;
                    rs.registers[reg] = outcome.post_state;
                    let code = bell_family().code_of(outcome.index);
                    mem.bell_result = Some(code);
                    let t = mem.stash_t.expect("stashed travel qubit");
                    rs.apply_at(t, &pauli_from_code(code))?;
                    rs.set_owner(t, Party::Channel);
                    rs.slot_t = t;
                }
                (Protocol::Revised, InterceptScope::POnly) => {
                    let outcome =
                        measure_projective(&rs.registers[reg], bell_family().members(), rng)?;
                    rs.registers[reg] = outcome.post_state;
                    let code = bell_family().code_of(outcome.index);
                    mem.bell_result = Some(code);
                    let p = mem.stash_p.expect("stashed post qubit");
                    rs.apply_at(p, &pauli_from_code(code))?;
                    rs.set_owner(p, Party::Channel);
                    rs.slot_p = Some(p);
                }
                (Protocol::Revised, InterceptScope::BothChannels) => {
                    // GHZ-measure (home', T, P) to read Alice's full quad.
                    let outcome =
                        measure_projective(&rs.registers[reg], ghz_family().members(), rng)?;
                    rs.registers[reg] = outcome.post_state;
                    let quad = QuadCode::from_family_index(outcome.index);
                    mem.ghz_result = Some(quad);
                    let t = mem.stash_t.expect("stashed travel qubit");
                    let p = mem.stash_p.expect("stashed post qubit");
                    rs.apply_at(t, &pauli_from_code(quad.t_code))?;
                    rs.apply_at(p, &pauli_from_code(quad.p_code))?;
                    rs.set_owner(t, Party::Channel);
                    rs.set_owner(p, Party::Channel);
                    rs.slot_t = t;
                    rs.slot_p = Some(p);
                }
            }
            Ok(())
        }
    }
}

/// Eve's committed guesses for one message-mode round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveGuess {
    pub alice: MessageQuad,
    pub bob: MessageQuad,
    pub alice_confident: bool,
    pub bob_confident: bool,
}

fn announced_result(log: &[Announcement]) -> Option<[u8; 4]> {
    log.iter().find_map(|a| match a {
        Announcement::GhzResult { result } => Some(*result),
        Announcement::BellResult { result } => Some([result[0], result[1], 0, 0]),
        _ => None,
    })
}

/// Turns Eve's memory plus the public log into message guesses.
///
/// Intercept-and-resend gives her Alice's code exactly (fully for both
/// channels, per intercepted block otherwise); Bob's code follows from the
/// announced result by XOR. Strategies that learn nothing fall back to the
/// maximum-likelihood tie-break (all ties resolve to zero bits) and are
/// flagged uncertain.
pub fn eve_infer(
    strategy: &EveStrategy,
    protocol: Protocol,
    mem: &EveMemory,
    log: &[Announcement],
) -> EveGuess {
    let zero = MessageQuad::from_parts(0, 0, 0);
    let announced = announced_result(log);
    let bob_from = |alice_guess: MessageQuad| -> (MessageQuad, bool) {
        match announced {
            Some(bits) => (
                alice_guess.xor_with(QuadCode::from_bits(bits)),
                true,
            ),
            None => (zero, false),
        }
    };

    match (strategy, protocol) {
        (EveStrategy::InterceptResend { .. }, Protocol::Baseline) => {
            let alice = mem
                .bell_result
                .map(MessageQuad::from_pair)
                .unwrap_or(zero);
            let (bob, have_result) = bob_from(alice);
            EveGuess {
                alice,
                bob,
                alice_confident: mem.bell_result.is_some(),
                bob_confident: mem.bell_result.is_some() && have_result,
            }
        }
        (EveStrategy::InterceptResend { scope }, Protocol::Revised) => match scope {
            InterceptScope::BothChannels => {
                let alice = mem
                    .ghz_result
                    .map(|q| MessageQuad::new(q.bits()).expect("admissible index"))
                    .unwrap_or(zero);
                let (bob, have_result) = bob_from(alice);
                EveGuess {
                    alice,
                    bob,
                    alice_confident: mem.ghz_result.is_some(),
                    bob_confident: mem.ghz_result.is_some() && have_result,
                }
            }
            InterceptScope::TOnly => {
                // travel block exact, post bit unknown: tie-break g = 0
                let alice = mem
                    .bell_result
                    .map(MessageQuad::from_pair)
                    .unwrap_or(zero);
                let (bob, _) = bob_from(alice);
                EveGuess {
                    alice,
                    bob,
                    alice_confident: false,
                    bob_confident: false,
                }
            }
            InterceptScope::POnly => {
                // post bit exact, travel block unknown: tie-break (0,0)
                let alice = mem
                    .bell_result
                    .map(|c| MessageQuad::from_parts(0, 0, c.b))
                    .unwrap_or(zero);
                let (bob, _) = bob_from(alice);
                EveGuess {
                    alice,
                    bob,
                    alice_confident: false,
                    bob_confident: false,
                }
            }
        },
        // No usable information: the probe outcomes are uncorrelated with the
        // message bits, so the likelihood over codes is flat.
        (EveStrategy::None | EveStrategy::EntangleMeasure { .. }, _) => {
            let (bob, _) = bob_from(zero);
            EveGuess {
                alice: zero,
                bob,
                alice_confident: false,
                bob_confident: false,
            }
        }
    }
}
