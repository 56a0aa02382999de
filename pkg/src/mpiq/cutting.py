#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: cutting.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Equal-granularity GHZ cutting and classical reconstruction.

An n-qubit GHZ chain is split at m - 1 entangling edges into fragments of ceil(n/m) or floor(n/m) qubits,
larger fragments first. Each fragment runs as an independent local GHZ. Reconstruction aligns every
fragment's per-shot coin to fragment 0, which reproduces the computational-basis statistics of the
monolithic circuit (only 0^n and 1^n, half each). Only measurement statistics are reconstructed.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from scipy import stats

from .errors import CapacityError, RangeError, ReconstructionError, ShapeError
from .models import GLOBAL_QRANK, CutPlan, DeviceEntry, ShotTable, WaveformBlock
from .qsim import build_ghz_circuit, encode_gate_stream

CHI2_ALPHA = 0.001


def cut_equal(n: int, m: int) -> CutPlan:
    if m < 1 or n < 1:
        raise RangeError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if m > n:
        raise RangeError(f"cannot cut {n} qubits into {m} fragments")
    q, r = divmod(n, m)
    sizes = (q + 1,) * r + (q,) * (m - r)
    boundaries = []
    acc = 0
    for s in sizes[:-1]:
        acc += s
        boundaries.append(acc)
    return CutPlan(n_total=n, m_fragments=m, sizes=sizes, boundaries=tuple(boundaries))


def compile_fragments(plan: CutPlan, shots: int, devices: Sequence[DeviceEntry]) -> list[WaveformBlock]:
    """One GHZ block per fragment; devices[i] is the device fragment i will run on."""
    if shots < 1:
        raise RangeError(f"shots must be >= 1, got {shots}")
    if len(devices) != plan.m_fragments:
        raise ShapeError(f"{len(devices)} devices for {plan.m_fragments} fragments")
    blocks = []
    for i, (size, dev) in enumerate(zip(plan.sizes, devices)):
        if size > dev.qubit_count:
            raise CapacityError(
                f"fragment {i} needs {size} qubits but {dev.identifier} has {dev.qubit_count}"
            )
        channels = encode_gate_stream(build_ghz_circuit(size))
        blocks.append(WaveformBlock.build(dev.ip, dev.device_id, channels, shots))
    return blocks


def _coin(bits: str) -> str | None:
    if bits and bits == bits[0] * len(bits) and bits[0] in "01":
        return bits[0]
    return None


def reconstruct(tables: Sequence[ShotTable], plan: CutPlan | None = None) -> ShotTable:
    """Parity-align fragment samples to fragment 0; returns the global table."""
    if not tables:
        raise ShapeError("no fragment tables to reconstruct")
    shots = tables[0].shots
    for k, t in enumerate(tables):
        if t.shots != shots or len(t.bitstrings) != shots:
            raise ShapeError(f"fragment {k} has {t.shots} shots, fragment 0 has {shots}")
    widths = [t.width for t in tables]
    if plan is not None and tuple(widths) != plan.sizes:
        raise ShapeError(f"fragment widths {widths} do not match plan sizes {list(plan.sizes)}")

    for k, t in enumerate(tables):
        for j, bits in enumerate(t.bitstrings):
            if _coin(bits) is None:
                raise ReconstructionError(k, j, bits)

    n_total = sum(widths)
    zeros, ones = "0" * n_total, "1" * n_total
    out = tuple(zeros if bits[0] == "0" else ones for bits in tables[0].bitstrings)
    return ShotTable(qrank=GLOBAL_QRANK, bitstrings=out, shots=shots)


@dataclass(frozen=True, slots=True)
class GhzSummary:
    n: int
    shots: int
    zeros: int
    ones: int
    other: int
    chi2: float
    p_value: float

    @property
    def p_zero(self) -> float:
        return self.zeros / self.shots if self.shots else 0.0

    @property
    def valid(self) -> bool:
        return self.shots > 0 and self.other == 0

    def balanced(self, alpha: float = CHI2_ALPHA) -> bool:
        return self.p_value >= alpha


def validate_ghz_output(table: ShotTable, n: int) -> GhzSummary:
    counts = table.counts()
    zeros = counts.get("0" * n, 0)
    ones = counts.get("1" * n, 0)
    other = len(table.bitstrings) - zeros - ones
    if zeros + ones > 0:
        chi2, p = stats.chisquare([zeros, ones])
        chi2, p = float(chi2), float(p)
    else:
        chi2, p = float("nan"), 0.0
    return GhzSummary(
        n=n, shots=len(table.bitstrings), zeros=zeros, ones=ones, other=other, chi2=chi2, p_value=p
    )
