#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_qsim.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mpiq.errors import DecodeError, QubitRangeError, RangeError
from mpiq.models import ChannelPayload
from mpiq.qsim import (
    Circuit,
    Gate,
    GateOp,
    StateVector,
    apply_gate,
    build_ghz_circuit,
    decode_gate_stream,
    encode_gate_stream,
    evolve,
    simulate,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def _kron(mats):
    out = np.array([[1]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _dense(op: GateOp, n: int) -> np.ndarray:
    """Full 2^n matrix with qubit 0 as the most significant factor."""
    if op.kind is Gate.MEASURE_ALL:
        return np.eye(1 << n, dtype=complex)
    if op.kind in (Gate.H, Gate.X):
        mats = [I2] * n
        mats[op.qubits[0]] = H if op.kind is Gate.H else X
        return _kron(mats)
    c, t = op.qubits
    a = [I2] * n
    a[c] = P0
    b = [I2] * n
    b[c] = P1
    b[t] = X
    return _kron(a) + _kron(b)


def _random_circuit(n: int, data) -> Circuit:
    c = Circuit(n)
    for _ in range(data.draw(st.integers(0, 12))):
        kind = data.draw(st.sampled_from([Gate.H, Gate.X, Gate.CNOT]))
        if kind is Gate.CNOT and n >= 2:
            ctl = data.draw(st.integers(0, n - 1))
            tgt = data.draw(st.integers(0, n - 1).filter(lambda q: q != ctl))
            c.cnot(ctl, tgt)
        elif kind is Gate.X:
            c.x(data.draw(st.integers(0, n - 1)))
        else:
            c.h(data.draw(st.integers(0, n - 1)))
    return c


def _dense_evolve(circuit: Circuit) -> np.ndarray:
    n = circuit.n_qubits
    expected = np.zeros(1 << n, dtype=complex)
    expected[0] = 1
    for op in circuit.ops:
        expected = _dense(op, n) @ expected
    return expected


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 3), st.data())
def test_small_circuits_match_dense_matrices(n, data):
    circuit = _random_circuit(n, data)
    np.testing.assert_allclose(evolve(circuit).amplitudes, _dense_evolve(circuit), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.data())
def test_evolve_matches_dense_matrices(n, data):
    circuit = _random_circuit(n, data)
    np.testing.assert_allclose(evolve(circuit).amplitudes, _dense_evolve(circuit), atol=1e-12)


def test_ghz_state():
    amps = evolve(build_ghz_circuit(3)).amplitudes
    np.testing.assert_allclose(np.abs(amps[[0, 7]]) ** 2, [0.5, 0.5], atol=1e-12)
    assert np.allclose(np.delete(amps, [0, 7]), 0)


def test_apply_gate_keeps_norm():
    state = apply_gate(StateVector.zero(2), GateOp(Gate.H, (0,)))
    assert abs(state.norm() - 1.0) < 1e-12


def test_gate_on_missing_qubit():
    with pytest.raises(QubitRangeError):
        apply_gate(StateVector.zero(2), GateOp(Gate.X, (2,)))
    with pytest.raises(QubitRangeError):
        evolve(Circuit(2).cnot(0, 3))


def test_bad_gate_arity():
    with pytest.raises(RangeError):
        GateOp(Gate.CNOT, (1, 1))
    with pytest.raises(RangeError):
        GateOp(Gate.H, (0, 1))


def test_simulate_ghz_only_two_outcomes():
    table = simulate(build_ghz_circuit(4), 2000, seed=11)
    counts = table.counts()
    assert set(counts) <= {"0000", "1111"}
    assert 800 < counts.get("0000", 0) < 1200
    assert table.shots == 2000 and table.width == 4


@pytest.mark.parametrize("n", [1, 2, 5, 10, 15, 20])
def test_ghz_sampling_is_fair(n):
    shots = 4000
    counts = simulate(build_ghz_circuit(n), shots, seed=n).counts()
    zeros, ones = counts.get("0" * n, 0), counts.get("1" * n, 0)
    assert zeros + ones == shots
    assert stats.chisquare([zeros, ones], [shots / 2, shots / 2]).pvalue > 0.001


def test_simulate_is_seeded():
    c = build_ghz_circuit(5)
    assert simulate(c, 100, seed=3) == simulate(c, 100, seed=3)
    assert simulate(c, 100, seed=3) != simulate(c, 100, seed=4)


def test_qubit_zero_is_leftmost():
    table = simulate(Circuit(3).x(0), 5, seed=0)
    assert set(table.bitstrings) == {"100"}


def test_zero_shots_rejected():
    with pytest.raises(RangeError):
        simulate(build_ghz_circuit(2), 0, seed=0)


def test_gate_stream_round_trip_ghz():
    circuit = build_ghz_circuit(6)
    decoded = decode_gate_stream(encode_gate_stream(circuit))
    assert decoded.n_qubits == 6
    assert decoded.ops == circuit.ops


def test_gate_stream_one_channel_per_qubit():
    channels = encode_gate_stream(build_ghz_circuit(3))
    assert [c.qubit_index for c in channels] == [0, 1, 2]


def test_gate_stream_rejects_garbage():
    with pytest.raises(DecodeError):
        decode_gate_stream([])
    with pytest.raises(DecodeError):
        decode_gate_stream([ChannelPayload(0, b"\x01\x02\x03")])
    good = encode_gate_stream(build_ghz_circuit(2))
    with pytest.raises(DecodeError):
        decode_gate_stream([good[0]])  # CNOT target half missing
