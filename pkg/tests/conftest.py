#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: conftest.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Shared fixtures: in-process monitor fleets on free loopback ports and runtime handles attached to them.
"""
from __future__ import annotations

import socket

import pytest

from mpiq.models import DeviceEntry, QuantumNodeConfig
from mpiq.monitor import MonitorServer
from mpiq.runtime import _close, mpiq_finalize, mpiq_init

TEST_SEED = 7
TEST_TIMEOUT_MS = 5000


def free_ports(count: int) -> list[int]:
    socks = []
    try:
        for _ in range(count):
            s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            s.bind(("127.0.0.1", 0))
            socks.append(s)
        return [s.getsockname()[1] for s in socks]
    finally:
        for s in socks:
            s.close()


class Fleet:
    def __init__(self, config: QuantumNodeConfig, servers: list[MonitorServer]):
        self.config = config
        self.servers = servers

    def stop(self) -> None:
        for s in self.servers:
            s.stop()


@pytest.fixture
def make_fleet():
    fleets: list[Fleet] = []

    def make(devices: int = 4, qubits: int = 4, delay_ms: float = 0.0, **cfg) -> Fleet:
        ports = free_ports(devices)
        config = QuantumNodeConfig(
            devices=[DeviceEntry("127.0.0.1", p, i, qubits) for i, p in enumerate(ports)], **cfg
        )
        config.validate()
        servers = [
            MonitorServer(d, seed=TEST_SEED, delay_ms=delay_ms).start() for d in config.devices
        ]
        fleet = Fleet(config, servers)
        fleets.append(fleet)
        return fleet

    yield make
    for f in fleets:
        f.stop()


@pytest.fixture
def fleet(make_fleet):
    return make_fleet()


@pytest.fixture
def make_handle():
    handles = []

    def make(config, **kwargs):
        kwargs.setdefault("timeout_ms", TEST_TIMEOUT_MS)
        kwargs.setdefault("seed", TEST_SEED)
        h = mpiq_init(config, **kwargs)
        handles.append(h)
        return h

    yield make
    for h in handles:
        if h.alive:
            if h.size > 1:
                # peers may be gone; skip the finalize barrier
                _close(h)
                h.alive = False
            else:
                mpiq_finalize(h)


@pytest.fixture
def handle(fleet, make_handle):
    return make_handle(fleet.config)


@pytest.fixture
def ports():
    return free_ports


def free_port_base(count: int, attempts: int = 50) -> int:
    """First of `count` consecutive free loopback ports."""
    for _ in range(attempts):
        (base,) = free_ports(1)
        if base + count > 65535:
            continue
        socks = []
        try:
            for p in range(base, base + count):
                s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                socks.append(s)
                s.bind(("127.0.0.1", p))
            return base
        except OSError:
            continue
        finally:
            for s in socks:
                s.close()
    raise RuntimeError(f"no {count} consecutive free ports")


@pytest.fixture
def make_world(make_handle):
    """Classical ranks 0..size-1 of one world, all in this process."""

    def make(config, size: int = 2, **kwargs):
        base = free_port_base(size)
        return [
            make_handle(config, my_rank=r, size=size, classical_port_base=base, **kwargs)
            for r in range(size)
        ]

    return make


@pytest.fixture
def port_base():
    return free_port_base
