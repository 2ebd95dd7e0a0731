//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line. Run with `cargo test --test acceptance -- --nocapture`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use num_complex::Complex64;
use qdialogue::adversary::{EveStrategy, InterceptScope, ProbeTarget};
use qdialogue::ghz_codec::{
    allowed_outcomes, bell_family, compose_codes, ghz_family, pauli_from_code, Phase, QuadCode,
};
use qdialogue::harness::{
    exact_oracle, run_experiment, summarize_lines, ExperimentConfig, MessageSource,
};
use qdialogue::protocol::{decode_alice_bits, decode_bob_bits, MessageQuad, Protocol};
use qdialogue::qstate::{Axis, Matrix2};

const TOL: f64 = 1e-12;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn criterion(n: u32, label: &str, f: impl FnOnce() -> Result<(), String>) {
    match f() {
        Ok(()) => println!("criterion {n} PASS: {label}"),
        Err(msg) => {
            println!("criterion {n} FAIL: {label} ({msg})");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

#[test]
fn acceptance_1_basis_validity() {
    criterion(1, "GHZ/Bell families are orthonormal with the stated seed member and outcome tables", || {
        for members in [bell_family().members(), ghz_family().members()] {
            for (i, a) in members.iter().enumerate() {
                for (j, b) in members.iter().enumerate() {
                    let ip = a.inner_product(b).map_err(|e| e.to_string())?;
                    let expect = if i == j { 1.0 } else { 0.0 };
                    ensure!(
                        (ip.norm() - expect).abs() <= TOL,
                        "gram entry ({i},{j}) off by {}",
                        (ip.norm() - expect).abs()
                    );
                }
            }
        }

        let member = ghz_family()
            .member(QuadCode::from_bits([0, 0, 0, 0]))
            .map_err(|e| e.to_string())?;
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        for (i, amp) in member.amplitudes().iter().enumerate() {
            let expect = if i == 0 || i == 7 { r } else { Complex64::ZERO };
            ensure!(
                *amp == expect,
                "seed member amplitude {i} is {amp}, expected {expect}"
            );
        }

        let id = QuadCode::from_bits([0, 0, 0, 0]);
        let z = allowed_outcomes(id, Axis::Z).map_err(|e| e.to_string())?;
        ensure!(z == vec![(0, 0, 0), (1, 1, 1)], "Z outcomes were {z:?}");
        let x = allowed_outcomes(id, Axis::X).map_err(|e| e.to_string())?;
        ensure!(
            x == vec![(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)],
            "X outcomes were {x:?}"
        );
        Ok(())
    });
}

#[test]
fn acceptance_2_composition_law() {
    criterion(2, "all 64 code pairs compose as phase times the XOR-indexed unitary", || {
        fn kron(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
            let (ra, ca) = (a.len(), a[0].len());
            let (rb, cb) = (b.len(), b[0].len());
            let mut out = vec![vec![Complex64::ZERO; ca * cb]; ra * rb];
            for i in 0..ra {
                for j in 0..ca {
                    for k in 0..rb {
                        for l in 0..cb {
                            out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                        }
                    }
                }
            }
            out
        }
        fn rows(m: &Matrix2) -> Vec<Vec<Complex64>> {
            vec![vec![m[0][0], m[0][1]], vec![m[1][0], m[1][1]]]
        }
        fn unitary(q: QuadCode) -> Vec<Vec<Complex64>> {
            let eye = vec![
                vec![Complex64::ONE, Complex64::ZERO],
                vec![Complex64::ZERO, Complex64::ONE],
            ];
            kron(
                &kron(&eye, &rows(&pauli_from_code(q.t_code))),
                &rows(&pauli_from_code(q.p_code)),
            )
        }
        fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
            let n = a.len();
            let mut out = vec![vec![Complex64::ZERO; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            out
        }

        let quad_phases = [Phase::ONE, Phase::I, Phase::MINUS_ONE, Phase::MINUS_I];
        for qa in QuadCode::all_admissible() {
            for qb in QuadCode::all_admissible() {
                let (idx, phase) = compose_codes(qa, qb);
                ensure!(
                    quad_phases.contains(&phase),
                    "phase of {qa}*{qb} outside the fourth roots of unity"
                );
                // per-qubit factors are 1 or ±i
                for (c1, c2) in [(qa.t_code, qb.t_code), (qa.p_code, qb.p_code)] {
                    let f = qdialogue::ghz_codec::pauli_phase(c1, c2);
                    ensure!(
                        f != Phase::MINUS_ONE,
                        "single-qubit factor −1 for {c1}*{c2}"
                    );
                }
                let product = matmul(&unitary(qa), &unitary(qb));
                let target = unitary(idx);
                for r in 0..8 {
                    for c in 0..8 {
                        let want = phase.value() * target[r][c];
                        ensure!(
                            (product[r][c] - want).norm() <= TOL,
                            "{qa}*{qb} entry ({r},{c}) off by {}",
                            (product[r][c] - want).norm()
                        );
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn acceptance_3_honest_revised_protocol() {
    criterion(3, "honest runs: 10,000 message rounds decode exactly, 10,000 control checks all pass", || {
        let mm = run_experiment(&ExperimentConfig {
            protocol: Protocol::Revised,
            strategy: EveStrategy::None,
            rounds: 10_000,
            cm_probability: 0.0,
            s7_reveal_fraction: 0.1,
            seed: 31,
            message_source: MessageSource::Random,
        })
        .map_err(|e| e.to_string())?;
        ensure!(mm.stats.mm_rounds == 10_000, "expected all message rounds");
        ensure!(
            mm.stats.alice_decode_error_rate.count == 0,
            "{} decode errors on Alice's bits",
            mm.stats.alice_decode_error_rate.count
        );
        ensure!(
            mm.stats.bob_decode_error_rate.count == 0,
            "{} decode errors on Bob's bits",
            mm.stats.bob_decode_error_rate.count
        );

        let cm = run_experiment(&ExperimentConfig {
            protocol: Protocol::Revised,
            strategy: EveStrategy::None,
            rounds: 10_000,
            cm_probability: 1.0,
            s7_reveal_fraction: 0.1,
            seed: 32,
            message_source: MessageSource::Random,
        })
        .map_err(|e| e.to_string())?;
        ensure!(
            cm.stats.cm_pass_rate.total == 10_000,
            "expected 10,000 control checks"
        );
        ensure!(
            cm.stats.cm_pass_rate.count == 10_000,
            "only {} of 10,000 control checks passed",
            cm.stats.cm_pass_rate.count
        );
        Ok(())
    });
}

#[test]
fn acceptance_4_baseline_break() {
    criterion(4, "baseline intercept-resend: full readout in every message round, every control check passes", || {
        let run = run_experiment(&ExperimentConfig {
            protocol: Protocol::Baseline,
            strategy: EveStrategy::InterceptResend {
                scope: InterceptScope::BothChannels,
            },
            rounds: 10_000,
            cm_probability: 0.5,
            s7_reveal_fraction: 0.0,
            seed: 41,
            message_source: MessageSource::Random,
        })
        .map_err(|e| e.to_string())?;
        let s = &run.stats;
        ensure!(s.mm_rounds > 0 && s.cm_rounds.count > 0, "need both modes");
        ensure!(
            s.eve_alice_accuracy.count == s.eve_alice_accuracy.total
                && s.eve_alice_accuracy.total == s.mm_rounds,
            "Eve recovered Alice's code in {}/{} message rounds",
            s.eve_alice_accuracy.count,
            s.mm_rounds
        );
        ensure!(
            s.eve_bob_accuracy.count == s.eve_bob_accuracy.total,
            "Eve recovered Bob's code in {}/{} message rounds",
            s.eve_bob_accuracy.count,
            s.eve_bob_accuracy.total
        );
        ensure!(
            s.cm_pass_rate.count == s.cm_pass_rate.total,
            "{}/{} control checks passed under the attack",
            s.cm_pass_rate.count,
            s.cm_pass_rate.total
        );
        ensure!(
            s.detection_overall.count == 0,
            "{} rounds flagged detection",
            s.detection_overall.count
        );
        Ok(())
    });
}

#[test]
fn acceptance_5_revised_detects_intercept_resend() {
    criterion(5, "revised control checks detect intercept-resend at the oracle rates for every scope", || {
        for (scope, seed) in [
            (InterceptScope::BothChannels, 51u64),
            (InterceptScope::TOnly, 52),
            (InterceptScope::POnly, 53),
        ] {
            let strategy = EveStrategy::InterceptResend { scope };
            let report =
                exact_oracle(Protocol::Revised, &strategy).map_err(|e| e.to_string())?;

            if scope == InterceptScope::BothChannels {
                for e in report.cm_entries.iter().filter(|e| e.basis == "X") {
                    ensure!(
                        (e.pass_probability - 0.5).abs() <= TOL,
                        "X-basis pass for encoding {} is {}",
                        e.encoding,
                        e.pass_probability
                    );
                }
            }
            ensure!(
                report.cm_detection_average > TOL,
                "detection not strictly positive for scope {scope:?}"
            );

            let run = run_experiment(&ExperimentConfig {
                protocol: Protocol::Revised,
                strategy,
                rounds: 10_000,
                cm_probability: 1.0,
                s7_reveal_fraction: 0.0,
                seed,
                message_source: MessageSource::Random,
            })
            .map_err(|e| e.to_string())?;
            let rate = run.stats.cm_pass_rate;
            let p = report.cm_pass_average;
            let se = (p * (1.0 - p) / rate.total as f64).sqrt();
            ensure!(
                (rate.ratio - p).abs() <= 4.0 * se,
                "scope {scope:?}: sampled pass rate {} vs oracle {p} (4σ = {})",
                rate.ratio,
                4.0 * se
            );
        }
        Ok(())
    });
}

#[test]
fn acceptance_6_entangle_measure_detection() {
    criterion(6, "full-reveal check catches the CNOT probe at the oracle rate (1/2 for a Z probe on the post qubit)", || {
        let strategy = EveStrategy::EntangleMeasure {
            target: ProbeTarget::P,
            basis: Axis::Z,
        };
        let report = exact_oracle(Protocol::Revised, &strategy).map_err(|e| e.to_string())?;
        let oracle_s7 = report
            .s7_pass_probability
            .ok_or("oracle did not report a full-reveal pass probability")?;
        ensure!(
            (oracle_s7 - 0.5).abs() <= TOL,
            "oracle full-reveal pass probability is {oracle_s7}, expected 1/2"
        );

        let run = run_experiment(&ExperimentConfig {
            protocol: Protocol::Revised,
            strategy,
            rounds: 10_000,
            cm_probability: 0.0,
            s7_reveal_fraction: 1.0,
            seed: 61,
            message_source: MessageSource::Random,
        })
        .map_err(|e| e.to_string())?;
        let rate = run.stats.s7_pass_rate;
        ensure!(rate.total == 10_000, "expected every round revealed");
        let se = (oracle_s7 * (1.0 - oracle_s7) / rate.total as f64).sqrt();
        ensure!(
            (rate.ratio - oracle_s7).abs() <= 4.0 * se,
            "sampled pass rate {} vs oracle {oracle_s7} (4σ = {})",
            rate.ratio,
            4.0 * se
        );
        Ok(())
    });
}

#[test]
fn acceptance_7_determinism() {
    criterion(7, "identical config and seed give byte-identical transcripts; folding them reproduces the stats", || {
        let cfg = ExperimentConfig {
            protocol: Protocol::Revised,
            strategy: EveStrategy::InterceptResend {
                scope: InterceptScope::BothChannels,
            },
            rounds: 2000,
            cm_probability: 0.5,
            s7_reveal_fraction: 0.3,
            seed: 424_242,
            message_source: MessageSource::Random,
        };
        let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let b = run_experiment(&cfg).map_err(|e| e.to_string())?;
        ensure!(
            a.transcript() == b.transcript(),
            "transcripts differ between identical runs"
        );
        let folded = summarize_lines(std::io::Cursor::new(a.transcript().into_bytes()))
            .map_err(|e| e.to_string())?;
        ensure!(folded == a.stats, "folded stats differ from the run's stats");
        Ok(())
    });
}

#[test]
fn acceptance_8_exhaustive_decode_roundtrip() {
    criterion(8, "decoding inverts the encoding for all 64 quad pairs", || {
        for bob_code in QuadCode::all_admissible() {
            for alice_code in QuadCode::all_admissible() {
                let bob = MessageQuad::new(bob_code.bits()).map_err(|e| e.to_string())?;
                let alice = MessageQuad::new(alice_code.bits()).map_err(|e| e.to_string())?;
                let result = compose_codes(alice_code, bob_code).0;
                ensure!(
                    decode_alice_bits(bob, result) == alice,
                    "alice decode failed for bob={bob_code} alice={alice_code}"
                );
                ensure!(
                    decode_bob_bits(alice, result) == bob,
                    "bob decode failed for bob={bob_code} alice={alice_code}"
                );
            }
        }
        Ok(())
    });
}
