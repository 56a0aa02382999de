#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_sync.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
import threading
import time

import pytest

from mpiq.errors import BarrierTimeout, FlagError
from mpiq.messaging import mpiq_recv, mpiq_send
from mpiq.models import BarrierFlag, WaveformBlock
from mpiq.qsim import build_ghz_circuit, encode_gate_stream
from mpiq.sync import BarrierRelease, classical_barrier, estimate_clock_offset, mpiq_barrier


def _block(n: int, shots: int = 50) -> WaveformBlock:
    return WaveformBlock.build("0.0.0.0", 0, encode_gate_stream(build_ghz_circuit(n)), shots)


def test_offset_within_half_rtt(handle):
    # monitors share this process's clock, so the true offset is zero
    est = estimate_clock_offset(handle, handle.link(0))
    assert est.rtt_ms >= 0
    assert abs(est.offset_ms) <= est.rtt_ms / 2 + 0.001


def test_qq_barrier_releases_every_monitor(fleet, handle):
    report = mpiq_barrier(handle, BarrierFlag.QQ)
    assert isinstance(report, BarrierRelease)
    assert sorted(report.released_ns) == list(range(len(fleet.servers)))
    assert report.within(fleet.config.epsilon_sync_ms)
    assert all(len(s.releases_ns) == 1 for s in fleet.servers)
    assert not any(s.state.armed for s in fleet.servers)


def test_qq_barrier_subset(fleet, handle):
    report = mpiq_barrier(handle, 2, monitors=[1, 3])
    assert sorted(report.released_ns) == [1, 3]
    assert not fleet.servers[0].releases_ns


def test_qq_barrier_with_dead_monitor(fleet, handle):
    fleet.servers[1].stop()
    with pytest.raises(BarrierTimeout) as info:
        mpiq_barrier(handle, BarrierFlag.QQ, timeout_ms=1000)
    assert info.value.absent == [fleet.config.devices[1].identifier]


def test_failed_barrier_disarms_survivors(fleet, handle):
    staged_on = fleet.config.devices[2].identifier
    mpiq_send(handle, staged_on, 40, _block(3), stage=True)
    fleet.servers[1].stop()
    with pytest.raises(BarrierTimeout):
        mpiq_barrier(handle, BarrierFlag.QQ, timeout_ms=500)
    assert not any(fleet.servers[i].state.armed for i in (0, 2, 3))
    assert len(fleet.servers[2].state.staged) == 1

    # plain work runs again right away
    dev = fleet.config.devices[0].identifier
    mpiq_send(handle, dev, 41, _block(2))
    assert set(mpiq_recv(handle, dev, 41, timeout_ms=2000).bitstrings) <= {"00", "11"}

    # the staged payload is still released by the next good barrier
    mpiq_barrier(handle, BarrierFlag.QQ, monitors=[0, 2, 3])
    assert mpiq_recv(handle, staged_on, 40, timeout_ms=2000).shots == 50


@pytest.mark.parametrize("flag", [1, 3, -1, True])
def test_bad_flag(handle, flag):
    with pytest.raises(FlagError):
        mpiq_barrier(handle, flag)


def test_cc_barrier_single_rank(handle):
    assert mpiq_barrier(handle, BarrierFlag.CC) is None


def test_cc_barrier_three_ranks(fleet, make_world):
    ranks = make_world(fleet.config, size=3)
    errors = []

    def run(h, entered, returned):
        try:
            entered[h.my_rank] = time.monotonic()
            classical_barrier(h, 5000)
            returned[h.my_rank] = time.monotonic()
        except Exception as e:  # surfaced below
            errors.append(e)

    for _ in range(100):
        entered, returned = {}, {}
        threads = [threading.Thread(target=run, args=(h, entered, returned)) for h in ranks]
        for t in threads:
            t.start()
        for t in threads:
            t.join(10)
        assert not errors
        # nobody leaves before the last rank arrives
        assert min(returned.values()) >= max(entered.values())


def test_qq_barrier_spread_on_ten_monitors(make_fleet, make_handle):
    fleet = make_fleet(devices=10)
    handle = make_handle(fleet.config)
    for _ in range(30):
        report = mpiq_barrier(handle, BarrierFlag.QQ)
        assert len(report.released_ns) == 10
        assert report.within(fleet.config.epsilon_sync_ms)


def test_cc_barrier_without_root(fleet, make_world):
    _, r1 = make_world(fleet.config)
    with pytest.raises(BarrierTimeout) as info:
        classical_barrier(r1, 300)
    assert info.value.absent == ["rank 0"]


def test_release_spread():
    report = BarrierRelease(target_ns=0, released_ns={0: 1_000_000, 1: 3_500_000})
    assert report.spread_ms == pytest.approx(2.5)
    assert report.within(3) and not report.within(2)
    assert BarrierRelease(target_ns=0).spread_ms == 0.0
