#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: qsim.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Statevector backend behind every monitor: circuits of H / X / CNOT / MEASURE_ALL, gate application on a
numpy tensor of shape (2,)*n, seeded sampling, and the per-qubit gate-stream container that travels inside
a WaveformBlock.

Notes:
- Qubit 0 is the most significant index bit, i.e. the leftmost character of a bitstring.
- Gate stream record: seq u32 | kind u8 | partner_qubit u16 (0xFFFF when none), little-endian.
"""
from __future__ import annotations

import math
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .errors import DecodeError, QubitRangeError, RangeError
from .models import MAX_QUBITS, ChannelPayload, ShotTable

RECORD = struct.Struct("<IBH")
NO_PARTNER = 0xFFFF
NORM_TOLERANCE = 1e-10
INV_SQRT2 = 1.0 / math.sqrt(2.0)


class Gate(str, Enum):
    H = "H"
    X = "X"
    CNOT = "CNOT"
    MEASURE_ALL = "MEASURE_ALL"


ARITY = {Gate.H: 1, Gate.X: 1, Gate.CNOT: 2, Gate.MEASURE_ALL: 0}


class StreamKind(IntEnum):
    H = 1
    X = 2
    CNOT_CTRL = 3
    CNOT_TGT = 4
    MEASURE = 5


@dataclass(frozen=True, slots=True)
class GateOp:
    kind: Gate
    qubits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.qubits) != ARITY[self.kind]:
            raise RangeError(f"{self.kind.value} takes {ARITY[self.kind]} qubit(s), got {self.qubits}")
        if self.kind is Gate.CNOT and self.qubits[0] == self.qubits[1]:
            raise RangeError("CNOT control and target must differ")


@dataclass(slots=True)
class Circuit:
    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def validate(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise RangeError(f"n_qubits {self.n_qubits} outside 1..{MAX_QUBITS}")
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.n_qubits:
                    raise QubitRangeError(f"{op.kind.value} on qubit {q} of a {self.n_qubits}-qubit circuit")

    def h(self, q: int) -> Circuit:
        self.ops.append(GateOp(Gate.H, (q,)))
        return self

    def x(self, q: int) -> Circuit:
        self.ops.append(GateOp(Gate.X, (q,)))
        return self

    def cnot(self, control: int, target: int) -> Circuit:
        self.ops.append(GateOp(Gate.CNOT, (control, target)))
        return self

    def measure_all(self) -> Circuit:
        self.ops.append(GateOp(Gate.MEASURE_ALL))
        return self


@dataclass(slots=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray  # complex128, shape (2**n,)

    @staticmethod
    def zero(n_qubits: int) -> StateVector:
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise RangeError(f"n_qubits {n_qubits} outside 1..{MAX_QUBITS}")
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return StateVector(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _axis_index(n: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * n
    for axis, bit in fixed.items():
        idx[axis] = bit
    return tuple(idx)


def _apply_inplace(psi: np.ndarray, n: int, op: GateOp) -> None:
    """psi is the (2,)*n view of the amplitudes; axis k is qubit k."""
    if op.kind is Gate.MEASURE_ALL:
        return
    for q in op.qubits:
        if not 0 <= q < n:
            raise QubitRangeError(f"{op.kind.value} on qubit {q} of a {n}-qubit state")
    if op.kind is Gate.H:
        (q,) = op.qubits
        i0, i1 = _axis_index(n, {q: 0}), _axis_index(n, {q: 1})
        a, b = psi[i0].copy(), psi[i1]
        psi[i0] = (a + b) * INV_SQRT2
        psi[i1] = (a - b) * INV_SQRT2
    elif op.kind is Gate.X:
        (q,) = op.qubits
        i0, i1 = _axis_index(n, {q: 0}), _axis_index(n, {q: 1})
        a = psi[i0].copy()
        psi[i0] = psi[i1]
        psi[i1] = a
    elif op.kind is Gate.CNOT:
        c, t = op.qubits
        i0, i1 = _axis_index(n, {c: 1, t: 0}), _axis_index(n, {c: 1, t: 1})
        a = psi[i0].copy()
        psi[i0] = psi[i1]
        psi[i1] = a


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    amps = state.amplitudes.copy()
    _apply_inplace(amps.reshape((2,) * state.n_qubits), state.n_qubits, op)
    out = StateVector(state.n_qubits, amps)
    drift = abs(out.norm() - 1.0)
    if drift > NORM_TOLERANCE:
        raise RangeError(f"norm drifted by {drift:.3e} after {op.kind.value}")
    return out


def evolve(circuit: Circuit) -> StateVector:
    circuit.validate()
    state = StateVector.zero(circuit.n_qubits)
    psi = state.amplitudes.reshape((2,) * circuit.n_qubits)
    for op in circuit.ops:
        _apply_inplace(psi, circuit.n_qubits, op)
    return state


def build_ghz_circuit(n: int) -> Circuit:
    if not 1 <= n <= MAX_QUBITS:
        raise RangeError(f"GHZ size {n} outside 1..{MAX_QUBITS}")
    c = Circuit(n).h(0)
    for i in range(n - 1):
        c.cnot(i, i + 1)
    return c.measure_all()


def simulate(circuit: Circuit, shots: int, seed: int, qrank: int = 0) -> ShotTable:
    """Evolve, then sample every qubit in the computational basis (a final MEASURE_ALL is implied)."""
    if shots < 1:
        raise RangeError(f"shots must be >= 1, got {shots}")
    state = evolve(circuit)
    n = circuit.n_qubits
    probs = np.abs(state.amplitudes) ** 2
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    picks = np.searchsorted(cdf, rng.random(shots), side="right")
    np.minimum(picks, len(cdf) - 1, out=picks)
    labels = {int(i): format(int(i), f"0{n}b") for i in np.unique(picks)}
    return ShotTable(qrank=qrank, bitstrings=tuple(labels[int(i)] for i in picks), shots=shots)


# gate stream container


def encode_gate_stream(circuit: Circuit) -> list[ChannelPayload]:
    circuit.validate()
    streams: list[bytearray] = [bytearray() for _ in range(circuit.n_qubits)]
    for seq, op in enumerate(circuit.ops):
        if op.kind is Gate.H:
            streams[op.qubits[0]] += RECORD.pack(seq, StreamKind.H, NO_PARTNER)
        elif op.kind is Gate.X:
            streams[op.qubits[0]] += RECORD.pack(seq, StreamKind.X, NO_PARTNER)
        elif op.kind is Gate.CNOT:
            c, t = op.qubits
            streams[c] += RECORD.pack(seq, StreamKind.CNOT_CTRL, t)
            streams[t] += RECORD.pack(seq, StreamKind.CNOT_TGT, c)
        else:
            for s in streams:
                s += RECORD.pack(seq, StreamKind.MEASURE, NO_PARTNER)
    return [ChannelPayload(q, bytes(s)) for q, s in enumerate(streams)]


def _parse_channel(ch: ChannelPayload) -> list[tuple[int, StreamKind, int]]:
    if len(ch.stream) % RECORD.size:
        raise DecodeError(f"channel {ch.qubit_index}: stream length {len(ch.stream)} not a record multiple")
    out = []
    last = -1
    for seq, kind, partner in RECORD.iter_unpack(ch.stream):
        try:
            k = StreamKind(kind)
        except ValueError:
            raise DecodeError(f"channel {ch.qubit_index}: unknown op kind {kind}") from None
        if seq <= last:
            raise DecodeError(f"channel {ch.qubit_index}: sequence {seq} not increasing")
        last = seq
        out.append((seq, k, partner))
    return out


def decode_gate_stream(channels: list[ChannelPayload] | tuple[ChannelPayload, ...]) -> Circuit:
    if not channels:
        raise DecodeError("no channels")
    indices = [c.qubit_index for c in channels]
    if len(set(indices)) != len(indices):
        raise DecodeError(f"duplicate qubit channels in {indices}")
    n = max(indices) + 1
    by_seq: dict[int, list[tuple[int, StreamKind, int]]] = defaultdict(list)
    for ch in channels:
        for seq, kind, partner in _parse_channel(ch):
            by_seq[seq].append((ch.qubit_index, kind, partner))
    if sorted(by_seq) != list(range(len(by_seq))):
        missing = sorted(set(range(max(by_seq, default=-1) + 1)) - set(by_seq))
        raise DecodeError(f"gap in sequence numbers, missing {missing[:5]}")
    ops: list[GateOp] = []
    for seq in range(len(by_seq)):
        recs = sorted(by_seq[seq], key=lambda r: r[1])
        kinds = [r[1] for r in recs]
        if len(recs) == 1 and kinds[0] in (StreamKind.H, StreamKind.X) and recs[0][2] == NO_PARTNER:
            ops.append(GateOp(Gate.H if kinds[0] is StreamKind.H else Gate.X, (recs[0][0],)))
        elif kinds == [StreamKind.CNOT_CTRL, StreamKind.CNOT_TGT]:
            (c, _, c_partner), (t, _, t_partner) = recs
            if c_partner != t or t_partner != c:
                raise DecodeError(f"seq {seq}: CNOT halves disagree ({c}->{c_partner}, {t}->{t_partner})")
            ops.append(GateOp(Gate.CNOT, (c, t)))
        elif all(k is StreamKind.MEASURE for k in kinds) and len(recs) == len(channels):
            ops.append(GateOp(Gate.MEASURE_ALL))
        else:
            raise DecodeError(f"seq {seq}: inconsistent records {[(q, k.name) for q, k, _ in recs]}")
    circuit = Circuit(n, ops)
    try:
        circuit.validate()
    except (RangeError, QubitRangeError) as e:
        raise DecodeError(str(e)) from e
    return circuit
