//! Python bindings for the dialogue-protocol simulator.
//!
//! Exposes the experiment runner, the exact oracle, and the code algebra as
//! plain functions returning dicts/lists, so notebooks can drive the
//! simulator without the CLI.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyComplex, PyDict, PyList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdialogue::adversary::EveStrategy;
use qdialogue::ghz_codec::{self, QuadCode, TwoBitCode};
use qdialogue::harness::{exact_oracle, run_experiment, ExperimentConfig, MessageSource};
use qdialogue::protocol::{
    decode_alice_bits, decode_bob_bits, run_round_nguyen, run_round_revised, MessageQuad, Mode,
    Protocol,
};
use qdialogue::qstate::Axis;

fn to_py_err(e: qdialogue::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any().unbind()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .into_any()
                    .unbind()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn parse_protocol(s: &str) -> PyResult<Protocol> {
    s.parse().map_err(to_py_err)
}

fn parse_strategy(s: &str) -> PyResult<EveStrategy> {
    EveStrategy::parse(s).map_err(to_py_err)
}

fn parse_axis(s: &str) -> PyResult<Axis> {
    match s {
        "Z" | "z" => Ok(Axis::Z),
        "X" | "x" => Ok(Axis::X),
        other => Err(PyValueError::new_err(format!(
            "unknown basis '{other}' (expected Z|X)"
        ))),
    }
}

fn parse_quad(bits: (u8, u8, u8, u8)) -> PyResult<MessageQuad> {
    MessageQuad::new([bits.0, bits.1, bits.2, bits.3]).map_err(to_py_err)
}

/// Run a seeded experiment and return its aggregate statistics as a dict.
/// With `include_transcript=True` the per-round records are attached under
/// the "transcript" key.
#[pyfunction]
#[pyo3(signature = (protocol="revised", eve="none", rounds=1000,
                    cm_probability=0.5, s7_fraction=0.1, seed=0,
                    include_transcript=false))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    protocol: &str,
    eve: &str,
    rounds: u64,
    cm_probability: f64,
    s7_fraction: f64,
    seed: u64,
    include_transcript: bool,
) -> PyResult<Py<PyAny>> {
    let cfg = ExperimentConfig {
        protocol: parse_protocol(protocol)?,
        strategy: parse_strategy(eve)?,
        rounds,
        cm_probability,
        s7_reveal_fraction: s7_fraction,
        seed,
        message_source: MessageSource::Random,
    };
    let run = run_experiment(&cfg).map_err(to_py_err)?;
    let stats = serialize_to_py(py, &run.stats)?;
    if include_transcript {
        let dict = stats.bind(py).cast::<PyDict>()?;
        dict.set_item("transcript", serialize_to_py(py, &run.records)?)?;
    }
    Ok(stats)
}

/// Exact reference probabilities for a scenario, as a dict. The strategy is
/// a spec string such as "none", "intercept-resend:t-only" or
/// "entangle-measure:p:z".
#[pyfunction]
fn oracle(py: Python<'_>, protocol: &str, strategy: &str) -> PyResult<Py<PyAny>> {
    let report =
        exact_oracle(parse_protocol(protocol)?, &parse_strategy(strategy)?).map_err(to_py_err)?;
    serialize_to_py(py, &report)
}

/// Run one protocol round and return its full record as a dict.
#[pyfunction]
#[pyo3(signature = (protocol="revised", eve="none", mode="MM",
                    bob=(0, 0, 0, 0), alice=(0, 0, 0, 0),
                    s7_fraction=0.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_round(
    py: Python<'_>,
    protocol: &str,
    eve: &str,
    mode: &str,
    bob: (u8, u8, u8, u8),
    alice: (u8, u8, u8, u8),
    s7_fraction: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let protocol = parse_protocol(protocol)?;
    let strategy = parse_strategy(eve)?;
    strategy.validate_for(protocol).map_err(to_py_err)?;
    let mode = match mode {
        "MM" | "mm" => Mode::Message,
        "CM" | "cm" => Mode::Control,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown mode '{other}' (expected MM|CM)"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let record = match protocol {
        Protocol::Revised => run_round_revised(
            0,
            parse_quad(bob)?,
            parse_quad(alice)?,
            mode,
            &strategy,
            s7_fraction,
            &mut rng,
        ),
        Protocol::Baseline => run_round_nguyen(
            0,
            TwoBitCode::new(bob.0, bob.1),
            TwoBitCode::new(alice.0, alice.1),
            mode,
            &strategy,
            &mut rng,
        ),
    }
    .map_err(to_py_err)?;
    serialize_to_py(py, &record)
}

/// Amplitudes of the eight GHZ family members, in family order, as lists of
/// eight complex numbers over basis states |000⟩..|111⟩ in (h,t,p) order.
#[pyfunction]
fn ghz_members(py: Python<'_>) -> PyResult<Py<PyList>> {
    let out = PyList::empty(py);
    for member in ghz_codec::ghz_family().members() {
        let row = PyList::empty(py);
        for a in member.amplitudes() {
            row.append(PyComplex::from_doubles(py, a.re, a.im))?;
        }
        out.append(row)?;
    }
    Ok(out.unbind())
}

/// Amplitudes of the four Bell family members, in family order.
#[pyfunction]
fn bell_members(py: Python<'_>) -> PyResult<Py<PyList>> {
    let out = PyList::empty(py);
    for member in ghz_codec::bell_family().members() {
        let row = PyList::empty(py);
        for a in member.amplitudes() {
            row.append(PyComplex::from_doubles(py, a.re, a.im))?;
        }
        out.append(row)?;
    }
    Ok(out.unbind())
}

/// The (h,t,p) outcome triples a family member can produce when measured
/// qubit-wise in the given basis ("Z" or "X"; X labels 0 = plus, 1 = minus).
#[pyfunction]
fn allowed_outcomes(a: u8, b: u8, d: u8, basis: &str) -> PyResult<Vec<(u8, u8, u8)>> {
    let code = QuadCode::from_bits([a, b, 0, d]);
    ghz_codec::allowed_outcomes(code, parse_axis(basis)?).map_err(to_py_err)
}

/// Compose two codes: componentwise XOR index plus the phase factor as a
/// string ("1", "-1", "i" or "-i").
#[pyfunction]
fn compose_codes(
    first: (u8, u8, u8, u8),
    second: (u8, u8, u8, u8),
) -> PyResult<((u8, u8, u8, u8), String)> {
    let qa = QuadCode::from_bits([first.0, first.1, first.2, first.3]);
    let qb = QuadCode::from_bits([second.0, second.1, second.2, second.3]);
    let (idx, phase) = ghz_codec::compose_codes(qa, qb);
    let b = idx.bits();
    Ok(((b[0], b[1], b[2], b[3]), phase.to_string()))
}

/// Bob's decoding rule: recover Alice's quad from his quad and the measured
/// family index.
#[pyfunction]
fn decode_alice(bob: (u8, u8, u8, u8), result: (u8, u8, u8, u8)) -> PyResult<(u8, u8, u8, u8)> {
    let out = decode_alice_bits(
        parse_quad(bob)?,
        QuadCode::from_bits([result.0, result.1, result.2, result.3]),
    )
    .bits();
    Ok((out[0], out[1], out[2], out[3]))
}

/// Alice's decoding rule: recover Bob's quad from her quad and the announced
/// family index.
#[pyfunction]
fn decode_bob(alice: (u8, u8, u8, u8), announced: (u8, u8, u8, u8)) -> PyResult<(u8, u8, u8, u8)> {
    let out = decode_bob_bits(
        parse_quad(alice)?,
        QuadCode::from_bits([announced.0, announced.1, announced.2, announced.3]),
    )
    .bits();
    Ok((out[0], out[1], out[2], out[3]))
}

#[pymodule]
#[pyo3(name = "qdialogue")]
fn qdialogue_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_round, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_members, m)?)?;
    m.add_function(wrap_pyfunction!(bell_members, m)?)?;
    m.add_function(wrap_pyfunction!(allowed_outcomes, m)?)?;
    m.add_function(wrap_pyfunction!(compose_codes, m)?)?;
    m.add_function(wrap_pyfunction!(decode_alice, m)?)?;
    m.add_function(wrap_pyfunction!(decode_bob, m)?)?;
    Ok(())
}
