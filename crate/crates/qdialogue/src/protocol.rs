//! Executable round state machines for the two dialogue protocols.
//!
//! The revised protocol walks one GHZ triple through prepare → encode →
//! forward transit → (control check | encode-and-return → joint measurement)
//! with explicit possession and phase tracking. The baseline protocol does
//! the same with one EPR pair and a single traveling qubit.
//!
//! A round may involve several independent registers (the genuine triple,
//! an eavesdropper's substitute resource, probe ancillas). Registers are
//! never entangled with each other, so the joint state is kept factored and
//! every register stays within the 4-qubit engine cap. `slot_t`/`slot_p`
//! name whichever concrete qubits currently ride the two channels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_backward_hook, eve_forward_hook, eve_infer, EveMemory, EveStrategy};
use crate::error::{Error, Result};
use crate::ghz_codec::{
    bell_family, compose_codes, encode, ghz_family, pauli_from_code, pauli_phase, QuadCode,
    TwoBitCode,
};
use crate::qstate::{measure_projective, measure_qubit, Axis, Matrix2, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Baseline,
    Revised,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Baseline => write!(f, "baseline"),
            Protocol::Revised => write!(f, "revised"),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Protocol::Baseline),
            "revised" => Ok(Protocol::Revised),
            other => Err(Error::Config(format!(
                "unknown protocol '{other}' (expected baseline|revised)"
            ))),
        }
    }
}

/// MM carries message bits; CM is sacrificed to test the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "MM")]
    Message,
    #[serde(rename = "CM")]
    Control,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Message => write!(f, "MM"),
            Mode::Control => write!(f, "CM"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Bob,
    Alice,
    Eve,
    Channel,
}

/// Round phases, in the only order they may occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    Prepared,
    ForwardTransit,
    AtAlice,
    BackwardTransit,
    Measured,
}

/// One party's 4-bit message chunk (x, y, f, g). The third bit is structurally
/// zero: the post-qubit operation is restricted to I or σx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageQuad {
    bits: [u8; 4],
}

impl MessageQuad {
    pub fn new(bits: [u8; 4]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidCode("message bits must be 0 or 1".into()));
        }
        if bits[2] != 0 {
            return Err(Error::InvalidCode(
                "third message bit is structurally zero".into(),
            ));
        }
        Ok(MessageQuad { bits })
    }

    /// Packs the three free bits (x, y, g) into a quad with the zero slot.
    pub fn from_parts(x: u8, y: u8, g: u8) -> Self {
        MessageQuad {
            bits: [x & 1, y & 1, 0, g & 1],
        }
    }

    pub fn from_pair(code: TwoBitCode) -> Self {
        MessageQuad {
            bits: [code.a, code.b, 0, 0],
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let r = rng.random::<u32>();
        MessageQuad::from_parts((r & 1) as u8, ((r >> 1) & 1) as u8, ((r >> 2) & 1) as u8)
    }

    pub fn bits(&self) -> [u8; 4] {
        self.bits
    }

    pub fn t_block(&self) -> TwoBitCode {
        TwoBitCode::new(self.bits[0], self.bits[1])
    }

    pub fn p_block(&self) -> (u8, u8) {
        (self.bits[2], self.bits[3])
    }

    pub fn as_quad_code(&self) -> QuadCode {
        QuadCode::from_bits(self.bits)
    }

    pub fn xor_with(&self, code: QuadCode) -> MessageQuad {
        debug_assert!(code.is_admissible());
        let c = code.bits();
        MessageQuad {
            bits: [
                self.bits[0] ^ c[0],
                self.bits[1] ^ c[1],
                self.bits[2] ^ c[2],
                self.bits[3] ^ c[3],
            ],
        }
    }
}

impl std::fmt::Display for MessageQuad {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{},{})",
            self.bits[0], self.bits[1], self.bits[2], self.bits[3]
        )
    }
}

/// Position of one qubit: which register and which index inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitRef {
    pub reg: usize,
    pub idx: usize,
}

/// Everything announced on the public classical channel, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Announcement {
    Mode { by: Party, mode: Mode },
    CmBasis { basis: Axis },
    CmOutcomes { t: u8, p: u8 },
    CmVerdict { pass: bool },
    GhzResult { result: [u8; 4] },
    BellResult { result: [u8; 2] },
    RevealQuads { alice: [u8; 4], bob: [u8; 4] },
    CheckBits { alice_fg: [u8; 2], bob_wv: [u8; 2] },
    BaselineReveal { alice: [u8; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotRun,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Verdict {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub cm_pass: Verdict,
    pub s7_pass: Verdict,
    pub checking_bits_pass: Verdict,
}

impl Default for Verdicts {
    fn default() -> Self {
        Verdicts {
            cm_pass: Verdict::NotRun,
            s7_pass: Verdict::NotRun,
            checking_bits_pass: Verdict::NotRun,
        }
    }
}

/// Measurement outcomes of a control-mode check, in (h, t, p) order.
/// Only t and p are announced; h stays with Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmTriple {
    pub h: u8,
    pub t: u8,
    pub p: u8,
}

/// Full transcript of one protocol round; one JSON line in a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub protocol: Protocol,
    pub mode: Mode,
    pub bob_quad: [u8; 4],
    pub alice_quad: Option<[u8; 4]>,
    pub cm_basis: Option<Axis>,
    pub cm_outcomes: Option<CmTriple>,
    pub ghz_result: Option<[u8; 4]>,
    pub bell_result: Option<[u8; 2]>,
    pub phase: Option<String>,
    pub decoded_alice: Option<[u8; 4]>,
    pub decoded_bob: Option<[u8; 4]>,
    pub eve_alice_guess: Option<[u8; 4]>,
    pub eve_bob_guess: Option<[u8; 4]>,
    pub eve_confident: Option<bool>,
    pub verdicts: Verdicts,
    pub announcements: Vec<Announcement>,
    pub eve_record: Option<String>,
    pub post_abort: bool,
}

impl RoundRecord {
    fn new(round: u64, protocol: Protocol, mode: Mode, bob_quad: [u8; 4]) -> Self {
        RoundRecord {
            round,
            protocol,
            mode,
            bob_quad,
            alice_quad: None,
            cm_basis: None,
            cm_outcomes: None,
            ghz_result: None,
            bell_result: None,
            phase: None,
            decoded_alice: None,
            decoded_bob: None,
            eve_alice_guess: None,
            eve_bob_guess: None,
            eve_confident: None,
            verdicts: Verdicts::default(),
            announcements: Vec::new(),
            eve_record: None,
            post_abort: false,
        }
    }
}

/// Live quantum state of a round: factored registers, channel slots,
/// per-qubit possession, and the forward-only phase tag.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub(crate) protocol: Protocol,
    pub(crate) mode: Mode,
    pub(crate) phase_tag: PhaseTag,
    pub(crate) registers: Vec<StateVector>,
    pub(crate) owners: Vec<Vec<Party>>,
    pub(crate) home: QubitRef,
    pub(crate) slot_t: QubitRef,
    pub(crate) slot_p: Option<QubitRef>,
    pub(crate) log: Vec<Announcement>,
}

impl RoundState {
    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn phase_tag(&self) -> PhaseTag {
        self.phase_tag
    }

    pub fn registers(&self) -> &[StateVector] {
        &self.registers
    }

    pub fn log(&self) -> &[Announcement] {
        &self.log
    }

    pub fn owner_of(&self, q: QubitRef) -> Party {
        self.owners[q.reg][q.idx]
    }

    pub fn slot_t(&self) -> QubitRef {
        self.slot_t
    }

    pub fn slot_p(&self) -> Option<QubitRef> {
        self.slot_p
    }

    pub fn home(&self) -> QubitRef {
        self.home
    }

    fn advance(&mut self, to: PhaseTag) -> Result<()> {
        if to <= self.phase_tag {
            return Err(Error::InvalidArgument(format!(
                "phase tag may only advance, {:?} -> {to:?}",
                self.phase_tag
            )));
        }
        self.phase_tag = to;
        Ok(())
    }

    fn expect_phase(&self, want: PhaseTag, what: &str) -> Result<()> {
        if self.phase_tag != want {
            return Err(Error::InvalidArgument(format!(
                "{what} requires phase {want:?}, round is at {:?}",
                self.phase_tag
            )));
        }
        Ok(())
    }

    fn expect_owner(&self, q: QubitRef, party: Party, what: &str) -> Result<()> {
        let owner = self.owner_of(q);
        if owner != party {
            return Err(Error::PossessionViolation(format!(
                "{what}: qubit ({},{}) is held by {owner:?}, not {party:?}",
                q.reg, q.idx
            )));
        }
        Ok(())
    }

    pub(crate) fn set_owner(&mut self, q: QubitRef, party: Party) {
        self.owners[q.reg][q.idx] = party;
    }

    pub(crate) fn add_register(&mut self, state: StateVector, owners: Vec<Party>) -> usize {
        debug_assert_eq!(state.n_qubits(), owners.len());
        self.registers.push(state);
        self.owners.push(owners);
        self.registers.len() - 1
    }

    pub(crate) fn apply_at(&mut self, q: QubitRef, m: &Matrix2) -> Result<()> {
        self.registers[q.reg] = self.registers[q.reg].apply_1q(q.idx, m)?;
        Ok(())
    }

    pub(crate) fn measure_at<R: Rng + ?Sized>(
        &mut self,
        q: QubitRef,
        axis: Axis,
        rng: &mut R,
    ) -> Result<u8> {
        let outcome = measure_qubit(&self.registers[q.reg], q.idx, axis, rng)?;
        self.registers[q.reg] = outcome.post_state;
        Ok(outcome.bit)
    }

    /// Appends an ancilla in |0⟩ to a register.
    pub(crate) fn attach_ancilla(&mut self, reg: usize, owner: Party) -> Result<QubitRef> {
        let anc = StateVector::basis_state(1, &[0])?;
        self.registers[reg] = self.registers[reg].tensor(&anc)?;
        self.owners[reg].push(owner);
        Ok(QubitRef {
            reg,
            idx: self.registers[reg].n_qubits() - 1,
        })
    }

    /// Removes a measured (definite-state) qubit from its register.
    pub(crate) fn drop_qubit(&mut self, q: QubitRef) -> Result<()> {
        let (_, reduced) = self.registers[q.reg].remove_qubit(q.idx)?;
        self.registers[q.reg] = reduced;
        self.owners[q.reg].remove(q.idx);
        Ok(())
    }

    pub(crate) fn announce(&mut self, a: Announcement) {
        self.log.push(a);
    }
}

/// S1+S2: Bob prepares the GHZ seed, encodes his quad, and holds all three
/// qubits. Register order is (h, t, p).
pub fn round_prepare_and_encode_bob(bob: MessageQuad, mode: Mode) -> Result<RoundState> {
    let seed = ghz_family().member(QuadCode::from_bits([0, 0, 0, 0]))?;
    let state = encode(seed, bob.as_quad_code())?;
    Ok(RoundState {
        protocol: Protocol::Revised,
        mode,
        phase_tag: PhaseTag::Prepared,
        registers: vec![state],
        owners: vec![vec![Party::Bob, Party::Bob, Party::Bob]],
        home: QubitRef { reg: 0, idx: 0 },
        slot_t: QubitRef { reg: 0, idx: 1 },
        slot_p: Some(QubitRef { reg: 0, idx: 2 }),
        log: Vec::new(),
    })
}

fn prepare_baseline(bob: TwoBitCode, mode: Mode) -> Result<RoundState> {
    let seed = bell_family().member(TwoBitCode::new(0, 0)).clone();
    let state = seed.apply_1q(1, &pauli_from_code(bob))?;
    Ok(RoundState {
        protocol: Protocol::Baseline,
        mode,
        phase_tag: PhaseTag::Prepared,
        registers: vec![state],
        owners: vec![vec![Party::Bob, Party::Bob]],
        home: QubitRef { reg: 0, idx: 0 },
        slot_t: QubitRef { reg: 0, idx: 1 },
        slot_p: None,
        log: Vec::new(),
    })
}

/// S2 transit: the travel qubits move Bob → channel → Alice, with the
/// eavesdropper hook acting mid-channel.
pub fn transmit_forward<R: Rng + ?Sized>(
    rs: &mut RoundState,
    strategy: &EveStrategy,
    mem: &mut EveMemory,
    rng: &mut R,
) -> Result<()> {
    rs.expect_phase(PhaseTag::Prepared, "transmit_forward")?;
    rs.advance(PhaseTag::ForwardTransit)?;
    let t = rs.slot_t;
    rs.expect_owner(t, Party::Bob, "transmit_forward")?;
    rs.set_owner(t, Party::Channel);
    if let Some(p) = rs.slot_p {
        rs.set_owner(p, Party::Channel);
    }
    eve_forward_hook(strategy, rs, mem, rng)?;
    rs.advance(PhaseTag::AtAlice)?;
    let t = rs.slot_t;
    rs.set_owner(t, Party::Alice);
    if let Some(p) = rs.slot_p {
        rs.set_owner(p, Party::Alice);
    }
    Ok(())
}

/// Return transit Alice → channel → Bob, with the eavesdropper hook.
pub fn transmit_backward<R: Rng + ?Sized>(
    rs: &mut RoundState,
    strategy: &EveStrategy,
    mem: &mut EveMemory,
    rng: &mut R,
) -> Result<()> {
    rs.expect_phase(PhaseTag::AtAlice, "transmit_backward")?;
    rs.advance(PhaseTag::BackwardTransit)?;
    let t = rs.slot_t;
    rs.set_owner(t, Party::Channel);
    if let Some(p) = rs.slot_p {
        rs.set_owner(p, Party::Channel);
    }
    eve_backward_hook(strategy, rs, mem, rng)?;
    let t = rs.slot_t;
    rs.set_owner(t, Party::Bob);
    if let Some(p) = rs.slot_p {
        rs.set_owner(p, Party::Bob);
    }
    Ok(())
}

/// S4: Alice draws one basis, measures the qubits she received, announces
/// basis and outcomes; Bob measures the home qubit in the same basis and
/// checks the triple against the correlation table for his encoding.
pub fn control_mode_check<R: Rng + ?Sized>(
    rs: &mut RoundState,
    bob: MessageQuad,
    rng: &mut R,
) -> Result<(Axis, CmTriple, bool)> {
    if rs.mode != Mode::Control {
        return Err(Error::ModeViolation(
            "control_mode_check called in a message-mode round".into(),
        ));
    }
    let basis = if rng.random::<f64>() < 0.5 {
        Axis::Z
    } else {
        Axis::X
    };
    cm_check_with_basis(rs, bob, basis, rng)
}

/// Control check with the basis forced; exhaustive tests drive both bases.
pub(crate) fn cm_check_with_basis<R: Rng + ?Sized>(
    rs: &mut RoundState,
    bob: MessageQuad,
    basis: Axis,
    rng: &mut R,
) -> Result<(Axis, CmTriple, bool)> {
    rs.expect_phase(PhaseTag::AtAlice, "control_mode_check")?;
    let slot_t = rs.slot_t;
    let slot_p = rs.slot_p.ok_or_else(|| {
        Error::ModeViolation("basis-correlation check needs a post channel".into())
    })?;
    rs.expect_owner(slot_t, Party::Alice, "control_mode_check")?;
    rs.expect_owner(slot_p, Party::Alice, "control_mode_check")?;

    let t = rs.measure_at(slot_t, basis, rng)?;
    let p = rs.measure_at(slot_p, basis, rng)?;
    rs.announce(Announcement::CmBasis { basis });
    rs.announce(Announcement::CmOutcomes { t, p });

    let home = rs.home;
    rs.expect_owner(home, Party::Bob, "control_mode_check")?;
    let h = rs.measure_at(home, basis, rng)?;

    let allowed = crate::ghz_codec::allowed_outcomes(bob.as_quad_code(), basis)?;
    let pass = allowed.contains(&(h, t, p));
    rs.announce(Announcement::CmVerdict { pass });
    rs.advance(PhaseTag::Measured)?;
    Ok((basis, CmTriple { h, t, p }, pass))
}

/// S5: Alice applies her code to whatever qubits she actually holds.
pub fn alice_encode(rs: &mut RoundState, alice: MessageQuad) -> Result<()> {
    if rs.mode != Mode::Message {
        return Err(Error::ModeViolation(
            "alice_encode called in a control-mode round".into(),
        ));
    }
    rs.expect_phase(PhaseTag::AtAlice, "alice_encode")?;
    let code = alice.as_quad_code();
    let slot_t = rs.slot_t;
    rs.expect_owner(slot_t, Party::Alice, "alice_encode")?;
    rs.apply_at(slot_t, &pauli_from_code(code.t_code))?;
    if let Some(slot_p) = rs.slot_p {
        rs.expect_owner(slot_p, Party::Alice, "alice_encode")?;
        rs.apply_at(slot_p, &pauli_from_code(code.p_code))?;
    }
    Ok(())
}

fn bob_holds_full_register(rs: &RoundState, what: &str) -> Result<usize> {
    let reg = rs.home.reg;
    let mut slots = vec![rs.home, rs.slot_t];
    if let Some(p) = rs.slot_p {
        slots.push(p);
    }
    for q in &slots {
        rs.expect_owner(*q, Party::Bob, what)?;
        if q.reg != reg {
            return Err(Error::PossessionViolation(format!(
                "{what}: qubits are spread over registers {} and {}",
                reg, q.reg
            )));
        }
    }
    if rs.registers[reg].n_qubits() != slots.len() {
        return Err(Error::PossessionViolation(format!(
            "{what}: register holds {} qubits, expected {}",
            rs.registers[reg].n_qubits(),
            slots.len()
        )));
    }
    Ok(reg)
}

/// S6: Bob measures (h, t, p) against the GHZ family. Honest rounds are
/// deterministic; the phase of the pre-measurement state is not observable
/// and is bookkept by the caller, not returned here.
pub fn bob_measure_ghz<R: Rng + ?Sized>(rs: &mut RoundState, rng: &mut R) -> Result<QuadCode> {
    rs.expect_phase(PhaseTag::BackwardTransit, "bob_measure_ghz")?;
    let reg = bob_holds_full_register(rs, "bob_measure_ghz")?;
    let outcome = measure_projective(&rs.registers[reg], ghz_family().members(), rng)?;
    rs.registers[reg] = outcome.post_state;
    rs.advance(PhaseTag::Measured)?;
    Ok(QuadCode::from_family_index(outcome.index))
}

/// Baseline S6 equivalent: Bell measurement on the (h, t) pair.
pub fn bob_measure_bell<R: Rng + ?Sized>(rs: &mut RoundState, rng: &mut R) -> Result<TwoBitCode> {
    rs.expect_phase(PhaseTag::BackwardTransit, "bob_measure_bell")?;
    let reg = bob_holds_full_register(rs, "bob_measure_bell")?;
    let outcome = measure_projective(&rs.registers[reg], bell_family().members(), rng)?;
    rs.registers[reg] = outcome.post_state;
    rs.advance(PhaseTag::Measured)?;
    Ok(bell_family().code_of(outcome.index))
}

/// S8: Bob recovers Alice's quad from his measurement, bitwise XOR.
pub fn decode_alice_bits(bob: MessageQuad, result: QuadCode) -> MessageQuad {
    bob.xor_with(result)
}

/// S8, other direction: Alice recovers Bob's quad from the announced result.
pub fn decode_bob_bits(alice: MessageQuad, announced: QuadCode) -> MessageQuad {
    alice.xor_with(announced)
}

/// S7: with probability `reveal_fraction` both parties reveal their quads and
/// check all four decode identities against the measured result.
pub fn s7_sacrificial_check<R: Rng + ?Sized>(
    record: &mut RoundRecord,
    reveal_fraction: f64,
    rng: &mut R,
) -> Verdict {
    let (Some(ghz), Some(alice)) = (record.ghz_result, record.alice_quad) else {
        return Verdict::NotRun;
    };
    if reveal_fraction <= 0.0 || rng.random::<f64>() >= reveal_fraction {
        return Verdict::NotRun;
    }
    record.announcements.push(Announcement::RevealQuads {
        alice,
        bob: record.bob_quad,
    });
    let pass = (0..4).all(|i| alice[i] ^ record.bob_quad[i] == ghz[i]);
    let verdict = Verdict::from_bool(pass);
    record.verdicts.s7_pass = verdict;
    verdict
}

/// Checking-bits variant: only the structurally revealed (f,g)/(w,v) blocks
/// are compared against the post block (r,s) of the measured result.
pub fn checking_bits_check(
    alice_check: (u8, u8),
    bob_check: (u8, u8),
    result: QuadCode,
) -> Verdict {
    let (f, g) = alice_check;
    let (w, v) = bob_check;
    let r = result.p_code.a;
    let s = result.p_code.b;
    Verdict::from_bool(f == r ^ w && g == s ^ v)
}

/// One full round of the revised GHZ dialogue.
pub fn run_round_revised<R: Rng + ?Sized>(
    round: u64,
    bob: MessageQuad,
    alice: MessageQuad,
    mode: Mode,
    strategy: &EveStrategy,
    s7_reveal_fraction: f64,
    rng: &mut R,
) -> Result<RoundRecord> {
    let mut record = RoundRecord::new(round, Protocol::Revised, mode, bob.bits());
    let mut rs = round_prepare_and_encode_bob(bob, mode)?;
    let mut mem = EveMemory::default();

    transmit_forward(&mut rs, strategy, &mut mem, rng)?;
    // S3: Bob announces the mode once Alice confirms receipt. The forward
    // hook has already acted, so Eve commits before the mode is public.
    rs.announce(Announcement::Mode {
        by: Party::Bob,
        mode,
    });

    match mode {
        Mode::Control => {
            let (basis, outcomes, pass) = control_mode_check(&mut rs, bob, rng)?;
            record.cm_basis = Some(basis);
            record.cm_outcomes = Some(outcomes);
            record.verdicts.cm_pass = Verdict::from_bool(pass);
            record.announcements = rs.log().to_vec();
            record.eve_record = mem.record_string();
            Ok(record)
        }
        Mode::Message => {
            alice_encode(&mut rs, alice)?;
            transmit_backward(&mut rs, strategy, &mut mem, rng)?;
            let result = bob_measure_ghz(&mut rs, rng)?;
            record.alice_quad = Some(alice.bits());
            record.ghz_result = Some(result.bits());
            record.phase = Some(
                compose_codes(alice.as_quad_code(), bob.as_quad_code())
                    .1
                    .to_string(),
            );
            record.decoded_alice = Some(decode_alice_bits(bob, result).bits());
            rs.announce(Announcement::GhzResult {
                result: result.bits(),
            });
            record.decoded_bob = Some(decode_bob_bits(alice, result).bits());

            // Eve commits her guesses on the result announcement, before any
            // sacrificial reveal can leak the actual quads into the log.
            let guess = eve_infer(strategy, Protocol::Revised, &mem, rs.log());
            record.eve_alice_guess = Some(guess.alice.bits());
            record.eve_bob_guess = Some(guess.bob.bits());
            record.eve_confident = Some(guess.alice_confident && guess.bob_confident);

            record.announcements = rs.log().to_vec();
            s7_sacrificial_check(&mut record, s7_reveal_fraction, rng);
            record.announcements.push(Announcement::CheckBits {
                alice_fg: [alice.bits()[2], alice.bits()[3]],
                bob_wv: [bob.bits()[2], bob.bits()[3]],
            });
            record.verdicts.checking_bits_pass =
                checking_bits_check(alice.p_block(), bob.p_block(), result);
            record.eve_record = mem.record_string();
            Ok(record)
        }
    }
}

/// One full round of the baseline EPR dialogue: both parties encode on the
/// single traveling qubit, Bob Bell-measures, and the mode decides whether
/// the result is announced (MM) or Alice reveals her code for checking (CM).
pub fn run_round_nguyen<R: Rng + ?Sized>(
    round: u64,
    bob: TwoBitCode,
    alice: TwoBitCode,
    mode: Mode,
    strategy: &EveStrategy,
    rng: &mut R,
) -> Result<RoundRecord> {
    let bob_quad = MessageQuad::from_pair(bob);
    let alice_quad = MessageQuad::from_pair(alice);
    let mut record = RoundRecord::new(round, Protocol::Baseline, mode, bob_quad.bits());
    record.alice_quad = Some(alice_quad.bits());
    let mut rs = prepare_baseline(bob, mode)?;
    let mut mem = EveMemory::default();

    transmit_forward(&mut rs, strategy, &mut mem, rng)?;
    // Alice always encodes; she reveals the mode only after Bob measured.
    let slot_t = rs.slot_t;
    rs.expect_owner(slot_t, Party::Alice, "baseline encode")?;
    rs.apply_at(slot_t, &pauli_from_code(alice))?;
    transmit_backward(&mut rs, strategy, &mut mem, rng)?;
    let result = bob_measure_bell(&mut rs, rng)?;
    record.bell_result = Some([result.a, result.b]);
    record.phase = Some(pauli_phase(alice, bob).to_string());
    rs.announce(Announcement::Mode {
        by: Party::Alice,
        mode,
    });

    match mode {
        Mode::Message => {
            rs.announce(Announcement::BellResult {
                result: [result.a, result.b],
            });
            let result_quad = QuadCode::new(result, TwoBitCode::new(0, 0));
            record.decoded_alice = Some(decode_alice_bits(bob_quad, result_quad).bits());
            record.decoded_bob = Some(decode_bob_bits(alice_quad, result_quad).bits());
            let guess = eve_infer(strategy, Protocol::Baseline, &mem, rs.log());
            record.eve_alice_guess = Some(guess.alice.bits());
            record.eve_bob_guess = Some(guess.bob.bits());
            record.eve_confident = Some(guess.alice_confident && guess.bob_confident);
        }
        Mode::Control => {
            rs.announce(Announcement::BaselineReveal {
                alice: [alice.a, alice.b],
            });
            let expect = alice.xor(bob);
            let pass = result == expect;
            rs.announce(Announcement::CmVerdict { pass });
            record.verdicts.cm_pass = Verdict::from_bool(pass);
        }
    }

    record.announcements = rs.log().to_vec();
    record.eve_record = mem.record_string();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::NORM_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad(bits: [u8; 4]) -> MessageQuad {
        MessageQuad::new(bits).unwrap()
    }

    #[test]
    fn message_quad_rejects_nonzero_third_bit() {
        assert!(MessageQuad::new([0, 0, 1, 0]).is_err());
        assert!(MessageQuad::new([0, 2, 0, 0]).is_err());
    }

    #[test]
    fn prepare_and_encode_examples() {
        let rs = round_prepare_and_encode_bob(quad([0, 0, 0, 0]), Mode::Message).unwrap();
        let seed = ghz_family()
            .member(QuadCode::from_bits([0, 0, 0, 0]))
            .unwrap();
        let overlap = rs.registers()[0].inner_product(seed).unwrap().norm();
        assert!((overlap - 1.0).abs() < NORM_TOL);
        assert_eq!(rs.phase_tag(), PhaseTag::Prepared);
        assert_eq!(rs.owner_of(rs.home()), Party::Bob);

        // (1,1,0,0) prepares (|000⟩−|111⟩)/√2
        let rs = round_prepare_and_encode_bob(quad([1, 1, 0, 0]), Mode::Message).unwrap();
        let amps = rs.registers()[0].amplitudes();
        assert!((amps[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < NORM_TOL);
        assert!((amps[7].re + std::f64::consts::FRAC_1_SQRT_2).abs() < NORM_TOL);

        let rs = round_prepare_and_encode_bob(quad([0, 1, 0, 1]), Mode::Message).unwrap();
        let member = ghz_family()
            .member(QuadCode::from_bits([0, 1, 0, 1]))
            .unwrap();
        let overlap = rs.registers()[0].inner_product(member).unwrap().norm();
        assert!((overlap - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn honest_transit_leaves_state_unchanged_and_moves_possession() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rs = round_prepare_and_encode_bob(quad([1, 0, 0, 1]), Mode::Message).unwrap();
        let before = rs.registers()[0].clone();
        let mut mem = EveMemory::default();
        transmit_forward(&mut rs, &EveStrategy::None, &mut mem, &mut rng).unwrap();
        assert_eq!(rs.phase_tag(), PhaseTag::AtAlice);
        assert_eq!(rs.owner_of(rs.slot_t()), Party::Alice);
        assert_eq!(rs.owner_of(rs.slot_p().unwrap()), Party::Alice);
        assert_eq!(rs.owner_of(rs.home()), Party::Bob);
        let overlap = rs.registers()[0].inner_product(&before).unwrap();
        assert!((overlap.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn honest_cm_check_passes_for_all_encodings_and_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for code in QuadCode::all_admissible() {
            let bob = MessageQuad::new(code.bits()).unwrap();
            for basis in [Axis::Z, Axis::X] {
                for _ in 0..8 {
                    let mut rs = round_prepare_and_encode_bob(bob, Mode::Control).unwrap();
                    let mut mem = EveMemory::default();
                    transmit_forward(&mut rs, &EveStrategy::None, &mut mem, &mut rng).unwrap();
                    let (_, _, pass) = cm_check_with_basis(&mut rs, bob, basis, &mut rng).unwrap();
                    assert!(pass, "encoding {code} basis {basis}");
                }
            }
        }
    }

    #[test]
    fn cm_check_in_message_mode_is_a_mode_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bob = quad([0, 0, 0, 0]);
        let mut rs = round_prepare_and_encode_bob(bob, Mode::Message).unwrap();
        let mut mem = EveMemory::default();
        transmit_forward(&mut rs, &EveStrategy::None, &mut mem, &mut rng).unwrap();
        match control_mode_check(&mut rs, bob, &mut rng) {
            Err(Error::ModeViolation(_)) => {}
            other => panic!("expected ModeViolation, got {other:?}"),
        }
    }

    #[test]
    fn alice_encode_in_control_mode_is_a_mode_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bob = quad([0, 0, 0, 0]);
        let mut rs = round_prepare_and_encode_bob(bob, Mode::Control).unwrap();
        let mut mem = EveMemory::default();
        transmit_forward(&mut rs, &EveStrategy::None, &mut mem, &mut rng).unwrap();
        assert!(matches!(
            alice_encode(&mut rs, quad([0, 1, 0, 0])),
            Err(Error::ModeViolation(_))
        ));
    }

    #[test]
    fn measuring_before_return_is_a_possession_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bob = quad([0, 0, 0, 0]);
        let mut rs = round_prepare_and_encode_bob(bob, Mode::Message).unwrap();
        let mut mem = EveMemory::default();
        transmit_forward(&mut rs, &EveStrategy::None, &mut mem, &mut rng).unwrap();
        alice_encode(&mut rs, quad([0, 1, 0, 1])).unwrap();
        // force the phase forward without the return transit
        rs.phase_tag = PhaseTag::BackwardTransit;
        match bob_measure_ghz(&mut rs, &mut rng) {
            Err(Error::PossessionViolation(_)) => {}
            other => panic!("expected PossessionViolation, got {other:?}"),
        }
    }

    #[test]
    fn honest_rounds_are_deterministic_for_all_64_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for bob_code in QuadCode::all_admissible() {
            for alice_code in QuadCode::all_admissible() {
                let bob = MessageQuad::new(bob_code.bits()).unwrap();
                let alice = MessageQuad::new(alice_code.bits()).unwrap();
                let record = run_round_revised(
                    0,
                    bob,
                    alice,
                    Mode::Message,
                    &EveStrategy::None,
                    0.0,
                    &mut rng,
                )
                .unwrap();
                let expect = alice_code.xor(bob_code);
                assert_eq!(record.ghz_result, Some(expect.bits()));
                assert_eq!(record.decoded_alice, Some(alice.bits()));
                assert_eq!(record.decoded_bob, Some(bob.bits()));
                assert_eq!(record.verdicts.checking_bits_pass, Verdict::Pass);
            }
        }
    }

    #[test]
    fn specific_honest_round_matches_xor_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let record = run_round_revised(
            0,
            quad([1, 1, 0, 0]),
            quad([0, 1, 0, 1]),
            Mode::Message,
            &EveStrategy::None,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(record.ghz_result, Some([1, 0, 0, 1]));
    }

    #[test]
    fn decode_examples_and_roundtrip() {
        let bob = quad([0, 0, 0, 0]);
        let result = QuadCode::from_bits([1, 0, 0, 1]);
        assert_eq!(decode_alice_bits(bob, result).bits(), [1, 0, 0, 1]);

        let bob = quad([1, 1, 0, 0]);
        assert_eq!(decode_alice_bits(bob, result).bits(), [0, 1, 0, 1]);

        let alice = quad([0, 1, 0, 1]);
        assert_eq!(decode_bob_bits(alice, result).bits(), [1, 1, 0, 0]);

        for bob_code in QuadCode::all_admissible() {
            for alice_code in QuadCode::all_admissible() {
                let bob = MessageQuad::new(bob_code.bits()).unwrap();
                let alice = MessageQuad::new(alice_code.bits()).unwrap();
                let idx = compose_codes(alice_code, bob_code).0;
                assert_eq!(decode_alice_bits(bob, idx), alice);
                assert_eq!(decode_bob_bits(alice, idx), bob);
                // both directions are the same XOR
                assert_eq!(decode_bob_bits(alice, idx), decode_alice_bits(alice, idx));
            }
        }
    }

    #[test]
    fn s7_check_honest_and_not_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut record = run_round_revised(
            0,
            quad([1, 0, 0, 1]),
            quad([0, 1, 0, 0]),
            Mode::Message,
            &EveStrategy::None,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            s7_sacrificial_check(&mut record, 0.0, &mut rng),
            Verdict::NotRun
        );
        assert_eq!(
            s7_sacrificial_check(&mut record, 1.0, &mut rng),
            Verdict::Pass
        );
        assert!(record
            .announcements
            .iter()
            .any(|a| matches!(a, Announcement::RevealQuads { .. })));
    }

    #[test]
    fn checking_bits_examples() {
        // honest round with g = 1, v = 1: s = 0, check passes
        let result = QuadCode::from_bits([1, 0, 0, 0]);
        assert_eq!(checking_bits_check((0, 1), (0, 1), result), Verdict::Pass);
        // honest all-zero
        let result = QuadCode::from_bits([0, 0, 0, 0]);
        assert_eq!(checking_bits_check((0, 0), (0, 0), result), Verdict::Pass);
        // a flipped post block fails
        let result = QuadCode::from_bits([0, 0, 0, 1]);
        assert_eq!(checking_bits_check((0, 0), (0, 0), result), Verdict::Fail);
    }

    #[test]
    fn baseline_honest_round_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let record = run_round_nguyen(
            0,
            TwoBitCode::new(1, 0),
            TwoBitCode::new(0, 1),
            Mode::Message,
            &EveStrategy::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(record.bell_result, Some([1, 1]));
        assert_eq!(record.decoded_alice, Some([0, 1, 0, 0]));
        assert_eq!(record.decoded_bob, Some([1, 0, 0, 0]));

        // honest CM passes for all 16 code pairs
        for k in 0..4u8 {
            for i in 0..4u8 {
                let record = run_round_nguyen(
                    0,
                    TwoBitCode::new(k >> 1, k),
                    TwoBitCode::new(i >> 1, i),
                    Mode::Control,
                    &EveStrategy::None,
                    &mut rng,
                )
                .unwrap();
                assert_eq!(record.verdicts.cm_pass, Verdict::Pass);
            }
        }
    }

    #[test]
    fn baseline_announced_result_is_superdense_xor() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for k in 0..4u8 {
            for i in 0..4u8 {
                let bob = TwoBitCode::new(k >> 1, k);
                let alice = TwoBitCode::new(i >> 1, i);
                let record =
                    run_round_nguyen(0, bob, alice, Mode::Message, &EveStrategy::None, &mut rng)
                        .unwrap();
                assert_eq!(record.bell_result, Some([bob.a ^ alice.a, bob.b ^ alice.b]));
            }
        }
    }

    #[test]
    fn round_record_serializes_stably() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let record = run_round_revised(
            3,
            quad([1, 0, 0, 1]),
            quad([0, 1, 0, 0]),
            Mode::Message,
            &EveStrategy::None,
            1.0,
            &mut rng,
        )
        .unwrap();
        let line = serde_json::to_string(&record).unwrap();
        let back: RoundRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record);
        assert!(line.starts_with("{\"round\":3,\"protocol\":\"revised\",\"mode\":\"MM\""));
    }
}
