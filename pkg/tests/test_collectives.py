#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_collectives.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
import threading
import time

import pytest

from mpiq.collectives import (
    build_send_q,
    check_coverage,
    mpiq_allgather,
    mpiq_bcast,
    mpiq_gather,
    mpiq_scatter,
)
from mpiq.errors import AddressError, CollectiveError, MappingError, QubitRangeError, ShapeError
from mpiq.messaging import mpiq_recv, mpiq_send
from mpiq.models import BarrierFlag, SendQ, WaveformBlock
from mpiq.monitor import inject_compute_delay
from mpiq.qsim import build_ghz_circuit, encode_gate_stream
from mpiq.sync import mpiq_barrier


def _block(n: int, shots: int = 50) -> WaveformBlock:
    return WaveformBlock.build("0.0.0.0", 0, encode_gate_stream(build_ghz_circuit(n)), shots)


def test_build_send_q():
    q = build_send_q(7, [3, 2, 2])
    assert q.groups == ((0, 1, 2), (3, 4), (5, 6))
    assert q.n_qubits == 7
    with pytest.raises(ShapeError):
        build_send_q(8, [3, 3])
    with pytest.raises(ShapeError):
        build_send_q(3, [3, 0])


def test_check_coverage():
    check_coverage(SendQ(((0, 1), (2,))))
    with pytest.raises(MappingError):
        check_coverage(SendQ(((0, 1), (1,))))
    with pytest.raises(MappingError):
        check_coverage(SendQ(((0, 1), (3,))))


def test_scatter_barrier_gather(fleet, handle):
    blocks = [_block(4), _block(3), _block(3), _block(2)]
    placements = mpiq_scatter(handle, blocks, build_send_q(12, [4, 3, 3, 2]), tag=40)
    assert placements == [(0, 40), (1, 40), (2, 40), (3, 40)]
    assert all(s.received[0].msg_type.name == "DATA" for s in fleet.servers)
    mpiq_barrier(handle, BarrierFlag.QQ)
    result = mpiq_gather(handle, [3, 2, 1, 0], 40)
    assert result.complete and result.missing == []
    assert [t.qrank for t in result.tables] == [0, 1, 2, 3]
    assert [t.width for t in result.tables] == [4, 3, 3, 2]


def test_scatter_round_robin(fleet, handle):
    blocks = [_block(2) for _ in range(4)]
    placements = mpiq_scatter(
        handle, blocks, build_send_q(8, [2, 2, 2, 2]), tag=10, targets=[0, 1, 0, 1], width=2
    )
    assert placements == [(0, 10), (1, 10), (0, 11), (1, 11)]
    assert [r.tag for r in fleet.servers[0].received] == [10, 11]


def test_scatter_shape_errors(handle):
    with pytest.raises(ShapeError):
        mpiq_scatter(handle, [_block(2)], build_send_q(4, [2, 2]))
    with pytest.raises(ShapeError):
        mpiq_scatter(handle, [_block(3), _block(2)], build_send_q(4, [2, 2]))


def test_scatter_unmapped_target_sends_nothing(fleet, handle):
    with pytest.raises(AddressError):
        mpiq_scatter(handle, [_block(2), _block(2)], build_send_q(4, [2, 2]), targets=[0, 9])
    assert not fleet.servers[0].received


def test_bcast(fleet, handle):
    mpiq_bcast(handle, _block(3), [0, 2], tag=8)
    mpiq_barrier(handle, BarrierFlag.QQ, monitors=[0, 2])
    for q in (0, 2):
        table = mpiq_recv(handle, fleet.config.devices[q].identifier, 8)
        assert table.qrank == q and table.width == 3
    assert not fleet.servers[1].received


def test_bcast_reports_failed_targets(fleet, handle):
    with pytest.raises(CollectiveError) as info:
        mpiq_bcast(handle, _block(5), [0, 1], width=2)
    assert set(info.value.failed) == {str(fleet.config.devices[q].identifier) for q in (0, 1)}
    assert all(isinstance(e, QubitRangeError) for e in info.value.failed.values())


def test_gather_reports_missing(fleet, handle):
    mpiq_scatter(handle, [_block(2), _block(2)], build_send_q(4, [2, 2]), tag=5, stage=False)
    result = mpiq_gather(handle, [0, 1, 2], 5, timeout_ms=500)
    assert not result.complete
    assert result.missing == [2]
    assert [t.qrank for t in result.tables] == [0, 1]


def test_allgather_two_ranks(fleet, make_world):
    r0, r1 = make_world(fleet.config)
    mpiq_scatter(r0, [_block(2), _block(2)], build_send_q(4, [2, 2]), tag=77)
    mpiq_barrier(r0, BarrierFlag.QQ, monitors=[0, 1])

    out = {}

    def run(h):
        out[h.my_rank] = mpiq_allgather(h, [0, 1], 77, timeout_ms=5000)

    threads = [threading.Thread(target=run, args=(h,)) for h in (r0, r1)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(10)
    assert out[0].complete and out[1].complete
    assert out[0].tables == out[1].tables


def test_dead_monitor_is_named(fleet, handle):
    dead = fleet.config.devices[2].identifier
    fleet.servers[2].stop()
    with pytest.raises(CollectiveError) as info:
        mpiq_bcast(handle, _block(2), [0, 1, 2, 3], tag=3, stage=False)
    assert list(info.value.failed) == [str(dead)]
    result = mpiq_gather(handle, [0, 1, 2, 3], 3, timeout_ms=2000)
    assert result.missing == [2]
    assert [t.qrank for t in result.tables] == [0, 1, 3]


def _p2p_reference(handle, blocks, tag):
    """Sequential send/recv of blocks[i] to qrank i; the baseline the collectives must match."""
    tables = []
    for q, block in enumerate(blocks):
        dev = handle.world.q_map[q]
        mpiq_send(handle, dev, tag, block)
        tables.append(mpiq_recv(handle, dev, tag))
    return tables


def test_scatter_gather_match_point_to_point(fleet, handle):
    blocks = [_block(4), _block(3), _block(3), _block(2)]
    reference = _p2p_reference(handle, blocks, 60)
    mpiq_scatter(handle, blocks, build_send_q(12, [4, 3, 3, 2]), tag=60)
    mpiq_barrier(handle, BarrierFlag.QQ)
    result = mpiq_gather(handle, [0, 1, 2, 3], 60)
    assert result.complete
    assert result.tables == reference


def test_bcast_matches_point_to_point(fleet, handle):
    template = _block(3)
    reference = _p2p_reference(handle, [template] * 4, 61)
    mpiq_bcast(handle, template, [0, 1, 2, 3], tag=61)
    mpiq_barrier(handle, BarrierFlag.QQ)
    assert mpiq_gather(handle, [0, 1, 2, 3], 61).tables == reference


def test_allgather_matches_point_to_point(fleet, make_world):
    r0, r1 = make_world(fleet.config)
    blocks = [_block(2), _block(4)]
    reference = _p2p_reference(r0, blocks, 62)
    mpiq_scatter(r0, blocks, build_send_q(6, [2, 4]), tag=62)
    mpiq_barrier(r0, BarrierFlag.QQ, monitors=[0, 1])

    out = {}
    threads = [
        threading.Thread(target=lambda h=h: out.update({h.my_rank: mpiq_allgather(h, [0, 1], 62)}))
        for h in (r0, r1)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join(10)
    assert out[0].tables == reference
    assert out[1].tables == reference


def test_gather_orders_by_qrank_not_arrival(fleet, handle):
    # qrank 3 finishes first, qrank 0 last
    for q, server in enumerate(fleet.servers):
        inject_compute_delay(server.state, (3 - q) * 100)
    for q in range(4):
        mpiq_send(handle, handle.world.q_map[q], 64, _block(2))
    result = mpiq_gather(handle, [3, 2, 1, 0], 64)
    assert result.complete
    assert [t.qrank for t in result.tables] == [0, 1, 2, 3]


def test_allgather_waits_for_a_late_root(fleet, make_world):
    r0, r1 = make_world(fleet.config)
    mpiq_send(r0, fleet.config.devices[0].identifier, 65, _block(2))

    out = {}
    follower = threading.Thread(
        target=lambda: out.update({1: mpiq_allgather(r1, [0], 65, timeout_ms=500)})
    )
    follower.start()
    time.sleep(0.8)  # root is busy past the follower's gather budget
    out[0] = mpiq_allgather(r0, [0], 65, timeout_ms=500)
    follower.join(10)
    assert out[0].complete and out[1].complete
    assert out[1].tables == out[0].tables
