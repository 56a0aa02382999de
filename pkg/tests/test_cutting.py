#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_cutting.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from mpiq.collectives import build_send_q, mpiq_gather, mpiq_scatter
from mpiq.cutting import compile_fragments, cut_equal, reconstruct, validate_ghz_output
from mpiq.errors import CapacityError, RangeError, ReconstructionError, ShapeError
from mpiq.models import GLOBAL_QRANK, BarrierFlag, DeviceEntry, ShotTable
from mpiq.monitor import MonitorState, handle_execute
from mpiq.qsim import build_ghz_circuit, simulate
from mpiq.sync import mpiq_barrier


def _devices(count: int, qubits: int = 4) -> list[DeviceEntry]:
    return [DeviceEntry("127.0.0.1", 7000 + i, i, qubits) for i in range(count)]


def test_cut_equal_uneven():
    plan = cut_equal(10, 3)
    assert plan.sizes == (4, 3, 3)
    assert plan.boundaries == (4, 7)


def test_cut_equal_reference_workload():
    plan = cut_equal(40, 10)
    assert plan.sizes == (4,) * 10
    assert len(plan.boundaries) == 9


@given(st.integers(1, 200), st.data())
def test_cut_partition(n, data):
    m = data.draw(st.integers(1, n))
    plan = cut_equal(n, m)
    assert sum(plan.sizes) == n and len(plan.sizes) == m
    assert max(plan.sizes) - min(plan.sizes) <= 1
    assert list(plan.sizes) == sorted(plan.sizes, reverse=True)


@pytest.mark.parametrize("n, m", [(3, 4), (0, 1), (5, 0)])
def test_cut_equal_rejects(n, m):
    with pytest.raises(RangeError):
        cut_equal(n, m)


def test_compile_fragments():
    blocks = compile_fragments(cut_equal(10, 3), 100, _devices(3))
    assert [len(b.channels) for b in blocks] == [4, 3, 3]
    assert [b.device_id for b in blocks] == [0, 1, 2]
    assert all(b.shots == 100 and b.digest_ok() for b in blocks)


def test_compile_fragments_errors():
    with pytest.raises(CapacityError):
        compile_fragments(cut_equal(10, 2), 100, _devices(2))
    with pytest.raises(ShapeError):
        compile_fragments(cut_equal(8, 2), 100, _devices(3))
    with pytest.raises(RangeError):
        compile_fragments(cut_equal(8, 2), 0, _devices(2))


def test_reconstruct_aligns_to_first_fragment():
    tables = [
        ShotTable(0, ("00", "11", "00"), 3),
        ShotTable(1, ("111", "000", "000"), 3),
    ]
    out = reconstruct(tables, cut_equal(5, 2))
    assert out.qrank == GLOBAL_QRANK
    assert out.bitstrings == ("00000", "11111", "00000")


def test_reconstruct_rejects_non_ghz_shot():
    tables = [ShotTable(0, ("00", "11"), 2), ShotTable(1, ("00", "01"), 2)]
    with pytest.raises(ReconstructionError) as info:
        reconstruct(tables)
    assert (info.value.fragment, info.value.shot) == (1, 1)


def test_reconstruct_shape_errors():
    with pytest.raises(ShapeError):
        reconstruct([])
    with pytest.raises(ShapeError):
        reconstruct([ShotTable(0, ("0",), 1), ShotTable(1, ("0", "1"), 2)])
    with pytest.raises(ShapeError):
        reconstruct([ShotTable(0, ("00",), 1)], cut_equal(3, 1))


def test_validate_balanced():
    table = ShotTable(GLOBAL_QRANK, ("000",) * 500 + ("111",) * 500, 1000)
    summary = validate_ghz_output(table, 3)
    assert summary.valid and summary.p_zero == 0.5
    assert summary.p_value == pytest.approx(1.0)
    assert summary.balanced()


def test_validate_flags_other_outcomes():
    table = ShotTable(GLOBAL_QRANK, ("000", "111", "010"), 3)
    summary = validate_ghz_output(table, 3)
    assert summary.other == 1 and not summary.valid


def test_validate_skewed_split():
    table = ShotTable(GLOBAL_QRANK, ("00",) * 900 + ("11",) * 100, 1000)
    assert not validate_ghz_output(table, 2).balanced()


def test_cut_execute_reconstruct():
    plan = cut_equal(14, 4)
    blocks = compile_fragments(plan, 400, _devices(4))
    tables = []
    for q, block in enumerate(blocks):
        state = MonitorState(device=_devices(4)[q].identifier, qubit_count=4, rng_seed=q)
        tables.append(handle_execute(state, 1, block, qrank=q))
    summary = validate_ghz_output(reconstruct(tables, plan), 14)
    assert summary.valid
    assert summary.zeros + summary.ones == 400
    assert summary.balanced()


def test_cut_equal_exhaustive():
    for n in range(1, 65):
        for m in range(1, n + 1):
            sizes = cut_equal(n, m).sizes
            assert set(sizes) <= {n // m, -(-n // m)}
            assert sum(sizes) == n
    assert cut_equal(480, 24).sizes == (20,) * 24


@pytest.mark.parametrize("n", [8, 12, 16])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_distributed_run_matches_monolithic(make_fleet, make_handle, n, m):
    shots = 2000
    fleet = make_fleet(devices=m, qubits=8)
    handle = make_handle(fleet.config)
    plan = cut_equal(n, m)
    blocks = compile_fragments(plan, shots, fleet.config.devices)
    mpiq_scatter(handle, blocks, build_send_q(n, plan.sizes), tag=90)
    mpiq_barrier(handle, BarrierFlag.QQ)
    gathered = mpiq_gather(handle, list(range(m)), 90)
    assert gathered.complete

    zeros, ones = "0" * n, "1" * n
    distributed = reconstruct(gathered.tables, plan).counts()
    monolithic = simulate(build_ghz_circuit(n), shots, seed=100 * n + m).counts()
    assert set(distributed) <= {zeros, ones}
    assert set(monolithic) <= {zeros, ones}
    observed = [
        [distributed.get(zeros, 0), distributed.get(ones, 0)],
        [monolithic.get(zeros, 0), monolithic.get(ones, 0)],
    ]
    _, p_value, _, _ = stats.chi2_contingency(observed)
    assert p_value > 0.001
