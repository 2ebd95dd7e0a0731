#!/usr/bin/env python3
"""Smoke test for the Python bindings.

Build the extension first, then run this script:

    cargo build --release -p qdialogue-py
    python3 python/smoke_test.py

The script loads the compiled cdylib directly from target/, so no install
step is needed.
"""

import glob
import importlib.machinery
import importlib.util
import os
import sys


def load_module():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = []
    for profile in ("release", "debug"):
        for pattern in (
            "libqdialogue_py.so",
            "libqdialogue_py.dylib",
            "qdialogue_py.dll",
        ):
            candidates += glob.glob(os.path.join(root, "target", profile, pattern))
    if not candidates:
        sys.exit("extension not found; run: cargo build --release -p qdialogue-py")
    loader = importlib.machinery.ExtensionFileLoader("qdialogue", candidates[0])
    spec = importlib.util.spec_from_loader("qdialogue", loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    qd = load_module()

    # honest run: everything passes and decoding is exact
    stats = qd.simulate(protocol="revised", eve="none", rounds=500, seed=7)
    assert stats["alice_decode_error_rate"]["count"] == 0
    assert stats["bob_decode_error_rate"]["count"] == 0
    assert stats["cm_pass_rate"]["ratio"] == 1.0
    assert stats["detection_overall"]["count"] == 0

    # the baseline break: perfect readout, zero detection
    stats = qd.simulate(protocol="baseline", eve="intercept-resend", rounds=500, seed=3)
    assert stats["eve_alice_accuracy"]["ratio"] == 1.0
    assert stats["eve_bob_accuracy"]["ratio"] == 1.0
    assert stats["cm_pass_rate"]["ratio"] == 1.0

    # the revised protocol detects the same attack at the oracle rate
    report = qd.oracle("revised", "intercept-resend:both")
    assert abs(report["cm_pass_x"] - 0.5) < 1e-12
    assert report["cm_detection_average"] > 0.5
    stats = qd.simulate(
        protocol="revised",
        eve="intercept-resend:both",
        rounds=2000,
        cm_probability=1.0,
        seed=11,
    )
    p = report["cm_pass_average"]
    n = stats["cm_pass_rate"]["total"]
    se = (p * (1.0 - p) / n) ** 0.5
    assert abs(stats["cm_pass_rate"]["ratio"] - p) <= 4.0 * se

    # code algebra surface
    members = qd.ghz_members()
    assert len(members) == 8 and len(members[0]) == 8
    r = 2.0 ** -0.5
    assert abs(members[0][0] - r) < 1e-12 and abs(members[0][7] - r) < 1e-12
    assert len(qd.bell_members()) == 4
    assert qd.allowed_outcomes(0, 0, 0, "Z") == [(0, 0, 0), (1, 1, 1)]
    assert len(qd.allowed_outcomes(0, 0, 0, "X")) == 4

    idx, phase = qd.compose_codes((0, 1, 0, 0), (1, 1, 0, 0))
    assert idx == (1, 0, 0, 0) and phase == "-i"
    assert qd.decode_alice((1, 1, 0, 0), (1, 0, 0, 1)) == (0, 1, 0, 1)
    assert qd.decode_bob((0, 1, 0, 1), (1, 0, 0, 1)) == (1, 1, 0, 0)

    # a single probed round, fully transcribed
    record = qd.run_round(
        protocol="revised",
        eve="entangle-measure:p:z",
        mode="MM",
        bob=(1, 0, 0, 1),
        alice=(0, 1, 0, 0),
        seed=5,
    )
    assert record["mode"] == "MM"
    assert record["ghz_result"] in ([1, 1, 0, 1], [0, 0, 0, 1])
    assert record["verdicts"]["checking_bits_pass"] == "pass"

    print("smoke test passed")


if __name__ == "__main__":
    main()
