//! Monte-Carlo experiment runner and exact-oracle calculator.
//!
//! `run_experiment` executes configured numbers of rounds and folds the
//! transcripts into [`Stats`]; identical config and seed reproduce the
//! transcript byte for byte. `exact_oracle` computes the same rates by
//! exhaustive enumeration over encodings and measurement branches — no
//! sampling — so every Monte-Carlo estimate has an exact reference value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_infer, EveMemory, EveStrategy, InterceptScope, ProbeTarget};
use crate::error::{Error, Result};
use crate::ghz_codec::{
    allowed_outcomes, bell_family, encode, ghz_family, pauli_from_code, QuadCode, TwoBitCode,
};
use crate::protocol::{
    run_round_nguyen, run_round_revised, Announcement, MessageQuad, Mode, Protocol, RoundRecord,
    Verdict,
};
use crate::qstate::{
    exact_distribution, exact_distribution_pure, project_qubit, Axis, MeasurementSpec, StateVector,
};

/// Where message bits come from: fresh random quads each message round, or a
/// pair of explicit bitstreams consumed three bits (two for the baseline) per
/// message round, cycling when exhausted. Control rounds always burn fresh
/// random sacrificial codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSource {
    Random,
    Explicit {
        alice_bits: Vec<u8>,
        bob_bits: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub strategy: EveStrategy,
    pub rounds: u64,
    pub cm_probability: f64,
    pub s7_reveal_fraction: f64,
    pub seed: u64,
    pub message_source: MessageSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            protocol: Protocol::Revised,
            strategy: EveStrategy::None,
            rounds: 1000,
            cm_probability: 0.5,
            s7_reveal_fraction: 0.1,
            seed: 0,
            message_source: MessageSource::Random,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        for (name, v) in [
            ("cm_probability", self.cm_probability),
            ("s7_reveal_fraction", self.s7_reveal_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {v}")));
            }
        }
        self.strategy.validate_for(self.protocol)?;
        if let MessageSource::Explicit {
            alice_bits,
            bob_bits,
        } = &self.message_source
        {
            for (name, bits) in [("alice_bits", alice_bits), ("bob_bits", bob_bits)] {
                if bits.is_empty() {
                    return Err(Error::Config(format!("{name} must not be empty")));
                }
                if bits.iter().any(|&b| b > 1) {
                    return Err(Error::Config(format!("{name} must contain only 0/1")));
                }
            }
        }
        Ok(())
    }
}

/// A count together with its denominator and ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counter {
    pub count: u64,
    pub total: u64,
    pub ratio: f64,
}

impl Counter {
    pub fn new(count: u64, total: u64) -> Counter {
        Counter {
            count,
            total,
            ratio: if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            },
        }
    }
}

/// Aggregated results of an experiment, reproducible by folding the
/// transcript with [`summarize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub rounds_total: u64,
    pub mm_rounds: u64,
    pub cm_rounds: Counter,
    pub cm_pass_rate: Counter,
    pub s7_checks: Counter,
    pub s7_pass_rate: Counter,
    pub checking_bits_pass_rate: Counter,
    pub alice_decode_error_rate: Counter,
    pub bob_decode_error_rate: Counter,
    pub eve_alice_accuracy: Counter,
    pub eve_alice_block_accuracy: Counter,
    pub eve_bob_accuracy: Counter,
    pub eve_bob_block_accuracy: Counter,
    pub detection_overall: Counter,
    pub post_abort_rounds: u64,
}

/// Pure fold over round records. Rerunning over the same transcript gives
/// identical stats; counts are additive under concatenation.
pub fn summarize(records: &[RoundRecord]) -> Stats {
    let mut cm_rounds = 0u64;
    let mut mm_rounds = 0u64;
    let mut cm_checks = 0u64;
    let mut cm_passes = 0u64;
    let mut s7_checks = 0u64;
    let mut s7_passes = 0u64;
    let mut cb_checks = 0u64;
    let mut cb_passes = 0u64;
    let mut alice_cmp = 0u64;
    let mut alice_err = 0u64;
    let mut bob_cmp = 0u64;
    let mut bob_err = 0u64;
    let mut eve_alice_quad = (0u64, 0u64);
    let mut eve_alice_block = (0u64, 0u64);
    let mut eve_bob_quad = (0u64, 0u64);
    let mut eve_bob_block = (0u64, 0u64);
    let mut checked_rounds = 0u64;
    let mut detected_rounds = 0u64;
    let mut post_abort = 0u64;

    for r in records {
        match r.mode {
            Mode::Control => cm_rounds += 1,
            Mode::Message => mm_rounds += 1,
        }
        if r.post_abort {
            post_abort += 1;
        }

        if r.verdicts.cm_pass != Verdict::NotRun {
            cm_checks += 1;
            if r.verdicts.cm_pass == Verdict::Pass {
                cm_passes += 1;
            }
        }
        if r.verdicts.s7_pass != Verdict::NotRun {
            s7_checks += 1;
            if r.verdicts.s7_pass == Verdict::Pass {
                s7_passes += 1;
            }
        }
        if r.verdicts.checking_bits_pass != Verdict::NotRun {
            cb_checks += 1;
            if r.verdicts.checking_bits_pass == Verdict::Pass {
                cb_passes += 1;
            }
        }

        let any_check = r.verdicts.cm_pass != Verdict::NotRun
            || r.verdicts.s7_pass != Verdict::NotRun
            || r.verdicts.checking_bits_pass != Verdict::NotRun;
        if any_check {
            checked_rounds += 1;
            if r.verdicts.cm_pass == Verdict::Fail
                || r.verdicts.s7_pass == Verdict::Fail
                || r.verdicts.checking_bits_pass == Verdict::Fail
            {
                detected_rounds += 1;
            }
        }

        if let (Some(alice), Some(decoded)) = (r.alice_quad, r.decoded_alice) {
            alice_cmp += 1;
            if alice != decoded {
                alice_err += 1;
            }
        }
        if let Some(decoded) = r.decoded_bob {
            bob_cmp += 1;
            if decoded != r.bob_quad {
                bob_err += 1;
            }
        }

        // one block per party for the baseline (2-bit codes), two for revised
        let blocks: &[[usize; 2]] = match r.protocol {
            Protocol::Baseline => &[[0, 2]],
            Protocol::Revised => &[[0, 2], [2, 4]],
        };
        if let (Some(guess), Some(alice)) = (r.eve_alice_guess, r.alice_quad) {
            if r.mode == Mode::Message {
                eve_alice_quad.1 += 1;
                eve_alice_quad.0 += u64::from(guess == alice);
                for &[lo, hi] in blocks {
                    eve_alice_block.1 += 1;
                    eve_alice_block.0 += u64::from(guess[lo..hi] == alice[lo..hi]);
                }
            }
        }
        if let Some(guess) = r.eve_bob_guess {
            if r.mode == Mode::Message {
                eve_bob_quad.1 += 1;
                eve_bob_quad.0 += u64::from(guess == r.bob_quad);
                for &[lo, hi] in blocks {
                    eve_bob_block.1 += 1;
                    eve_bob_block.0 += u64::from(guess[lo..hi] == r.bob_quad[lo..hi]);
                }
            }
        }
    }

    Stats {
        rounds_total: records.len() as u64,
        mm_rounds,
        cm_rounds: Counter::new(cm_rounds, records.len() as u64),
        cm_pass_rate: Counter::new(cm_passes, cm_checks),
        s7_checks: Counter::new(s7_checks, mm_rounds),
        s7_pass_rate: Counter::new(s7_passes, s7_checks),
        checking_bits_pass_rate: Counter::new(cb_passes, cb_checks),
        alice_decode_error_rate: Counter::new(alice_err, alice_cmp),
        bob_decode_error_rate: Counter::new(bob_err, bob_cmp),
        eve_alice_accuracy: Counter::new(eve_alice_quad.0, eve_alice_quad.1),
        eve_alice_block_accuracy: Counter::new(eve_alice_block.0, eve_alice_block.1),
        eve_bob_accuracy: Counter::new(eve_bob_quad.0, eve_bob_quad.1),
        eve_bob_block_accuracy: Counter::new(eve_bob_block.0, eve_bob_block.1),
        detection_overall: Counter::new(detected_rounds, checked_rounds),
        post_abort_rounds: post_abort,
    }
}

/// Parses a line-delimited transcript and folds it into stats. Malformed
/// lines are reported with their 1-based line number.
pub fn summarize_lines<R: std::io::BufRead>(reader: R) -> Result<Stats> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RoundRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(summarize(&records))
}

/// Derives an independent per-round stream from the experiment seed
/// (splitmix64 finalizer), so rounds are order-independent.
fn round_seed(seed: u64, round: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_add(round.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn bits_at(stream: &[u8], offset: u64, n: usize) -> Vec<u8> {
    (0..n)
        .map(|k| stream[((offset + k as u64) % stream.len() as u64) as usize])
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub stats: Stats,
    pub records: Vec<RoundRecord>,
}

impl ExperimentRun {
    /// The transcript as JSON lines, one round per line.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Runs the configured number of rounds. Deterministic given the seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.rounds as usize);
    let mut mm_seen = 0u64;
    let mut aborted = false;

    for round in 0..cfg.rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(round_seed(cfg.seed, round));
        let mode = if rng.random::<f64>() < cfg.cm_probability {
            Mode::Control
        } else {
            Mode::Message
        };

        let mut record = match cfg.protocol {
            Protocol::Revised => {
                let (bob, alice) = match (&cfg.message_source, mode) {
                    (MessageSource::Explicit { alice_bits, bob_bits }, Mode::Message) => {
                        let b = bits_at(bob_bits, 3 * mm_seen, 3);
                        let a = bits_at(alice_bits, 3 * mm_seen, 3);
                        (
                            MessageQuad::from_parts(b[0], b[1], b[2]),
                            MessageQuad::from_parts(a[0], a[1], a[2]),
                        )
                    }
                    _ => (MessageQuad::random(&mut rng), MessageQuad::random(&mut rng)),
                };
                run_round_revised(
                    round,
                    bob,
                    alice,
                    mode,
                    &cfg.strategy,
                    cfg.s7_reveal_fraction,
                    &mut rng,
                )?
            }
            Protocol::Baseline => {
                let (bob, alice) = match (&cfg.message_source, mode) {
                    (MessageSource::Explicit { alice_bits, bob_bits }, Mode::Message) => {
                        let b = bits_at(bob_bits, 2 * mm_seen, 2);
                        let a = bits_at(alice_bits, 2 * mm_seen, 2);
                        (TwoBitCode::new(b[0], b[1]), TwoBitCode::new(a[0], a[1]))
                    }
                    _ => {
                        let r = rng.random::<u32>();
                        (
                            TwoBitCode::new((r & 1) as u8, ((r >> 1) & 1) as u8),
                            TwoBitCode::new(((r >> 2) & 1) as u8, ((r >> 3) & 1) as u8),
                        )
                    }
                };
                run_round_nguyen(round, bob, alice, mode, &cfg.strategy, &mut rng)?
            }
        };
        if mode == Mode::Message {
            mm_seen += 1;
        }

        record.post_abort = aborted;
        let failed = record.verdicts.cm_pass == Verdict::Fail
            || record.verdicts.s7_pass == Verdict::Fail
            || record.verdicts.checking_bits_pass == Verdict::Fail;
        if failed {
            aborted = true;
        }
        records.push(record);
    }

    let stats = summarize(&records);
    Ok(ExperimentRun { stats, records })
}

// ---------------------------------------------------------------------------
// exact oracle
// ---------------------------------------------------------------------------

/// Exact pass probability for one control-mode case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCmEntry {
    pub basis: String,
    pub encoding: String,
    pub pass_probability: f64,
}

/// Exact reference probabilities for one (protocol, strategy) scenario,
/// computed by enumeration of encodings and measurement branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub protocol: Protocol,
    pub strategy: String,
    pub cm_entries: Vec<OracleCmEntry>,
    pub cm_pass_z: Option<f64>,
    pub cm_pass_x: Option<f64>,
    pub cm_pass_average: f64,
    pub cm_detection_average: f64,
    pub s7_pass_probability: Option<f64>,
    pub checking_bits_pass_probability: Option<f64>,
    pub decode_error_probability: f64,
    pub eve_alice_quad_accuracy: f64,
    pub eve_alice_block_accuracy: f64,
    pub eve_bob_quad_accuracy: f64,
    pub eve_bob_block_accuracy: f64,
}

/// Accumulated branch weights can drift past the endpoints by a few ulps;
/// reported probabilities are exact within 1e-12 and live in [0,1].
fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn ghz_seed_state() -> Result<StateVector> {
    Ok(ghz_family()
        .member(QuadCode::from_bits([0, 0, 0, 0]))?
        .clone())
}

fn bell_seed_state() -> StateVector {
    bell_family().member(TwoBitCode::new(0, 0)).clone()
}

/// Exact single-probe branches: a Z probe reads the traveler's bit
/// (projecting it), an X probe reads a coin and kicks the traveler with σz
/// half the time.
fn probe_branches(
    state: &StateVector,
    qubit: usize,
    basis: Axis,
) -> Result<Vec<(f64, u8, StateVector)>> {
    match basis {
        Axis::Z => {
            let mut out = Vec::new();
            for bit in 0..2u8 {
                let (p, post) = project_qubit(state, qubit, Axis::Z, bit)?;
                if let Some(post) = post {
                    out.push((p, bit, post));
                }
            }
            Ok(out)
        }
        Axis::X => {
            let z = pauli_from_code(TwoBitCode::new(1, 1));
            Ok(vec![
                (0.5, 0, state.clone()),
                (0.5, 1, state.apply_1q(qubit, &z)?),
            ])
        }
    }
}

/// weight, ancilla outcomes so far, post-branch state
type ProbeBranch = (f64, Vec<(char, Axis, u8)>, StateVector);

/// All probe branches for a strategy's target set, applied in hook order.
fn strategy_branches(
    strategy: &EveStrategy,
    state: &StateVector,
) -> Result<Vec<ProbeBranch>> {
    let EveStrategy::EntangleMeasure { target, basis } = strategy else {
        return Ok(vec![(1.0, Vec::new(), state.clone())]);
    };
    let mut targets: Vec<(char, usize)> = Vec::new();
    if matches!(target, ProbeTarget::T | ProbeTarget::Both) {
        targets.push(('t', 1));
    }
    if matches!(target, ProbeTarget::P | ProbeTarget::Both) {
        targets.push(('p', 2));
    }
    let mut branches = vec![(1.0, Vec::new(), state.clone())];
    for (label, qubit) in targets {
        let mut next = Vec::new();
        for (w, outcomes, s) in &branches {
            for (p, bit, post) in probe_branches(s, qubit, *basis)? {
                let mut o = outcomes.clone();
                o.push((label, *basis, bit));
                next.push((w * p, o, post));
            }
        }
        branches = next;
    }
    Ok(branches)
}

fn family_distribution(state: &StateVector, members: &[StateVector]) -> Result<Vec<f64>> {
    let table = exact_distribution(
        &[(1.0, state.clone())],
        &MeasurementSpec::Projective(members),
    )?;
    Ok(table.into_iter().map(|(_, p)| p).collect())
}

/// Exact control-check pass probability for the revised protocol, one
/// encoding and basis, under the given strategy. The joint outcome law is a
/// product of the independent subsystem marginals Alice and Bob actually
/// measure.
fn revised_cm_pass(encoding: QuadCode, basis: Axis, strategy: &EveStrategy) -> Result<f64> {
    let prepared = encode(&ghz_seed_state()?, encoding)?;
    let allowed = allowed_outcomes(encoding, basis)?;
    let spec_all = [(0, basis), (1, basis), (2, basis)];

    let dist: Vec<((u8, u8, u8), f64)> = match strategy {
        EveStrategy::None | EveStrategy::EntangleMeasure { .. } => {
            // probe acts only on the return leg; control rounds see the
            // genuine triple
            exact_distribution_pure(&prepared, &MeasurementSpec::PerQubit(&spec_all))?
                .into_iter()
                .map(|(bits, p)| ((bits[0], bits[1], bits[2]), p))
                .collect()
        }
        EveStrategy::InterceptResend { scope } => match scope {
            InterceptScope::BothChannels => {
                let p_h =
                    exact_distribution_pure(&prepared, &MeasurementSpec::PerQubit(&[(0, basis)]))?;
                let p_tp = exact_distribution_pure(
                    &ghz_seed_state()?,
                    &MeasurementSpec::PerQubit(&[(1, basis), (2, basis)]),
                )?;
                let mut out = Vec::new();
                for (hb, hp) in &p_h {
                    for (tp, q) in &p_tp {
                        out.push(((hb[0], tp[0], tp[1]), hp * q));
                    }
                }
                out
            }
            InterceptScope::TOnly => {
                let p_hp = exact_distribution_pure(
                    &prepared,
                    &MeasurementSpec::PerQubit(&[(0, basis), (2, basis)]),
                )?;
                let p_t = exact_distribution_pure(
                    &bell_seed_state(),
                    &MeasurementSpec::PerQubit(&[(1, basis)]),
                )?;
                let mut out = Vec::new();
                for (hp, q) in &p_hp {
                    for (tb, r) in &p_t {
                        out.push(((hp[0], tb[0], hp[1]), q * r));
                    }
                }
                out
            }
            InterceptScope::POnly => {
                let p_ht = exact_distribution_pure(
                    &prepared,
                    &MeasurementSpec::PerQubit(&[(0, basis), (1, basis)]),
                )?;
                let p_p = exact_distribution_pure(
                    &bell_seed_state(),
                    &MeasurementSpec::PerQubit(&[(1, basis)]),
                )?;
                let mut out = Vec::new();
                for (ht, q) in &p_ht {
                    for (pb, r) in &p_p {
                        out.push(((ht[0], ht[1], pb[0]), q * r));
                    }
                }
                out
            }
        },
    };

    Ok(dist
        .into_iter()
        .filter(|(triple, _)| allowed.contains(triple))
        .map(|(_, p)| p)
        .sum())
}

#[derive(Default)]
struct MmAccumulator {
    s7_pass: f64,
    checking_pass: f64,
    decode_error: f64,
    eve_alice_quad: f64,
    eve_alice_block: f64,
    eve_bob_quad: f64,
    eve_bob_block: f64,
}

fn block_matches(guess: [u8; 4], truth: [u8; 4], range: std::ops::Range<usize>) -> bool {
    guess[range.clone()] == truth[range]
}

/// Enumerates all revised message rounds: 64 code pairs × probe branches ×
/// measurement outcomes, every probability exact.
fn revised_mm_oracle(strategy: &EveStrategy) -> Result<MmAccumulator> {
    let mut acc = MmAccumulator::default();
    let members = ghz_family().members();
    let pair_weight = 1.0 / 64.0;

    for bob_code in QuadCode::all_admissible() {
        for alice_code in QuadCode::all_admissible() {
            let bob = MessageQuad::new(bob_code.bits()).expect("admissible");
            let alice = MessageQuad::new(alice_code.bits()).expect("admissible");
            let honest = alice_code.xor(bob_code);

            // state on the return leg; under intercept-and-resend Eve
            // re-applies Alice's exact code so Bob sees the honest state
            let final_state = encode(&encode(&ghz_seed_state()?, bob_code)?, alice_code)?;

            for (w, outcomes, state) in strategy_branches(strategy, &final_state)? {
                let dist = family_distribution(&state, members)?;
                for (i, p) in dist.iter().enumerate() {
                    if *p <= 1e-15 {
                        continue;
                    }
                    let weight = pair_weight * w * p;
                    let idx = QuadCode::from_family_index(i);

                    if idx == honest {
                        acc.s7_pass += weight;
                    } else {
                        acc.decode_error += weight;
                    }
                    if idx.p_code == honest.p_code {
                        acc.checking_pass += weight;
                    }

                    let mut mem = EveMemory::default();
                    mem.ancilla_outcomes = outcomes.clone();
                    match strategy {
                        EveStrategy::InterceptResend { scope } => match scope {
                            InterceptScope::BothChannels => mem.ghz_result = Some(alice_code),
                            InterceptScope::TOnly => {
                                mem.bell_result = Some(alice_code.t_code)
                            }
                            InterceptScope::POnly => {
                                mem.bell_result = Some(alice_code.p_code)
                            }
                        },
                        EveStrategy::None | EveStrategy::EntangleMeasure { .. } => {}
                    }
                    let log = [Announcement::GhzResult { result: idx.bits() }];
                    let guess = eve_infer(strategy, Protocol::Revised, &mem, &log);

                    if guess.alice.bits() == alice.bits() {
                        acc.eve_alice_quad += weight;
                    }
                    if guess.bob.bits() == bob.bits() {
                        acc.eve_bob_quad += weight;
                    }
                    for range in [0..2usize, 2..4usize] {
                        if block_matches(guess.alice.bits(), alice.bits(), range.clone()) {
                            acc.eve_alice_block += weight / 2.0;
                        }
                        if block_matches(guess.bob.bits(), bob.bits(), range) {
                            acc.eve_bob_block += weight / 2.0;
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Enumerates all baseline rounds: 16 code pairs × probe branches ×
/// Bell outcomes.
fn baseline_oracle(strategy: &EveStrategy) -> Result<(Vec<OracleCmEntry>, MmAccumulator)> {
    let members = bell_family().members();
    let mut acc = MmAccumulator::default();
    let mut cm_by_bob = [0.0f64; 4];
    let pair_weight = 1.0 / 16.0;

    for kb in 0..4u8 {
        for ka in 0..4u8 {
            let bob = TwoBitCode::new(kb >> 1, kb);
            let alice = TwoBitCode::new(ka >> 1, ka);
            let honest = alice.xor(bob);

            let final_state = bell_seed_state()
                .apply_1q(1, &pauli_from_code(bob))?
                .apply_1q(1, &pauli_from_code(alice))?;

            // probes address the single traveling qubit, index 1
            let branches = match strategy {
                EveStrategy::EntangleMeasure { basis, .. } => {
                    probe_branches(&final_state, 1, *basis)?
                        .into_iter()
                        .map(|(w, bit, s)| (w, vec![('t', *basis, bit)], s))
                        .collect()
                }
                _ => vec![(1.0, Vec::new(), final_state.clone())],
            };

            for (w, outcomes, state) in branches {
                let dist = family_distribution(&state, members)?;
                for (i, p) in dist.iter().enumerate() {
                    if *p <= 1e-15 {
                        continue;
                    }
                    let weight = pair_weight * w * p;
                    let idx = bell_family().code_of(i);

                    let pass = idx == honest;
                    // CM verdict compares the Bell result to Alice's revealed code
                    cm_by_bob[kb as usize] += if pass { w * p / 4.0 } else { 0.0 };
                    if !pass {
                        acc.decode_error += weight;
                    }

                    let mut mem = EveMemory::default();
                    mem.ancilla_outcomes = outcomes.clone();
                    if matches!(strategy, EveStrategy::InterceptResend { .. }) {
                        mem.bell_result = Some(alice);
                    }
                    let log = [Announcement::BellResult {
                        result: [idx.a, idx.b],
                    }];
                    let guess = eve_infer(strategy, Protocol::Baseline, &mem, &log);

                    let alice_bits = [alice.a, alice.b, 0, 0];
                    let bob_bits = [bob.a, bob.b, 0, 0];
                    if guess.alice.bits() == alice_bits {
                        acc.eve_alice_quad += weight;
                    }
                    if guess.bob.bits() == bob_bits {
                        acc.eve_bob_quad += weight;
                    }
                    // the baseline code is a single two-bit block
                    if block_matches(guess.alice.bits(), alice_bits, 0..2) {
                        acc.eve_alice_block += weight;
                    }
                    if block_matches(guess.bob.bits(), bob_bits, 0..2) {
                        acc.eve_bob_block += weight;
                    }
                }
            }
        }
    }

    let entries = (0..4u8)
        .map(|kb| OracleCmEntry {
            basis: "bell".into(),
            encoding: TwoBitCode::new(kb >> 1, kb).to_string(),
            pass_probability: clamp01(cm_by_bob[kb as usize]),
        })
        .collect();
    Ok((entries, acc))
}

/// Computes exact pass/detection probabilities and Eve accuracies for one
/// scenario by brute-force enumeration — the reference every Monte-Carlo
/// rate is validated against.
pub fn exact_oracle(protocol: Protocol, strategy: &EveStrategy) -> Result<OracleReport> {
    strategy.validate_for(protocol)?;
    match protocol {
        Protocol::Revised => {
            let mut entries = Vec::new();
            let mut sums = std::collections::BTreeMap::new();
            for basis in [Axis::Z, Axis::X] {
                for encoding in QuadCode::all_admissible() {
                    let pass = clamp01(revised_cm_pass(encoding, basis, strategy)?);
                    entries.push(OracleCmEntry {
                        basis: basis.to_string(),
                        encoding: encoding.to_string(),
                        pass_probability: pass,
                    });
                    *sums.entry(basis).or_insert(0.0) += pass / 8.0;
                }
            }
            let cm_pass_z = clamp01(sums[&Axis::Z]);
            let cm_pass_x = clamp01(sums[&Axis::X]);
            let cm_pass_average = (cm_pass_z + cm_pass_x) / 2.0;
            let acc = revised_mm_oracle(strategy)?;
            Ok(OracleReport {
                protocol,
                strategy: strategy.spec_string(),
                cm_entries: entries,
                cm_pass_z: Some(cm_pass_z),
                cm_pass_x: Some(cm_pass_x),
                cm_pass_average,
                cm_detection_average: clamp01(1.0 - cm_pass_average),
                s7_pass_probability: Some(clamp01(acc.s7_pass)),
                checking_bits_pass_probability: Some(clamp01(acc.checking_pass)),
                decode_error_probability: clamp01(acc.decode_error),
                eve_alice_quad_accuracy: clamp01(acc.eve_alice_quad),
                eve_alice_block_accuracy: clamp01(acc.eve_alice_block),
                eve_bob_quad_accuracy: clamp01(acc.eve_bob_quad),
                eve_bob_block_accuracy: clamp01(acc.eve_bob_block),
            })
        }
        Protocol::Baseline => {
            let (entries, acc) = baseline_oracle(strategy)?;
            let cm_pass_average = clamp01(
                entries.iter().map(|e| e.pass_probability).sum::<f64>() / entries.len() as f64,
            );
            Ok(OracleReport {
                protocol,
                strategy: strategy.spec_string(),
                cm_entries: entries,
                cm_pass_z: None,
                cm_pass_x: None,
                cm_pass_average,
                cm_detection_average: clamp01(1.0 - cm_pass_average),
                s7_pass_probability: None,
                checking_bits_pass_probability: None,
                decode_error_probability: clamp01(acc.decode_error),
                eve_alice_quad_accuracy: clamp01(acc.eve_alice_quad),
                eve_alice_block_accuracy: clamp01(acc.eve_alice_block),
                eve_bob_quad_accuracy: clamp01(acc.eve_bob_quad),
                eve_bob_block_accuracy: clamp01(acc.eve_bob_block),
            })
        }
    }
}
