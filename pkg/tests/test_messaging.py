#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_messaging.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
import pytest

from mpiq.errors import (
    AddressError,
    DecodeError,
    MpiqTimeoutError,
    QubitRangeError,
    TruncationError,
)
from mpiq.messaging import classical_recv, classical_send, mpiq_recv, mpiq_send
from mpiq.models import BarrierFlag, DeviceIdentifier, WaveformBlock
from mpiq.qsim import build_ghz_circuit, encode_gate_stream
from mpiq.sync import mpiq_barrier
from mpiq.transport import open_channel
from mpiq.wire import Envelope, MsgType


def _block(n: int, shots: int = 100) -> WaveformBlock:
    return WaveformBlock.build("0.0.0.0", 0, encode_gate_stream(build_ghz_circuit(n)), shots)


def test_send_then_recv(fleet, handle):
    dev = fleet.config.devices[1].identifier
    mpiq_send(handle, dev, 5, _block(4))
    table = mpiq_recv(handle, dev, 5)
    assert table.qrank == 1 and table.shots == 100
    assert set(table.bitstrings) <= {"0000", "1111"}
    receipt = fleet.servers[1].received[0]
    assert receipt.msg_type is MsgType.EXECUTE and receipt.tag == 5


def test_recv_matches_on_tag(fleet, handle):
    dev = fleet.config.devices[0].identifier
    mpiq_send(handle, dev, 1, _block(2, shots=10))
    mpiq_send(handle, dev, 2, _block(3, shots=10))
    assert mpiq_recv(handle, dev, 2).width == 3
    assert mpiq_recv(handle, dev, 1).width == 2


def test_too_many_qubits_is_not_sent(fleet, handle):
    dev = fleet.config.devices[0].identifier
    with pytest.raises(QubitRangeError):
        mpiq_send(handle, dev, 1, _block(5))
    assert not fleet.servers[0].received


def test_empty_block(fleet, handle):
    empty = WaveformBlock.build("127.0.0.1", 0, [], 10)
    with pytest.raises(DecodeError):
        mpiq_send(handle, fleet.config.devices[0].identifier, 1, empty)


def test_unknown_device(handle):
    with pytest.raises(AddressError):
        mpiq_send(handle, DeviceIdentifier("127.0.0.1", 1, 77), 1, _block(2))


def test_recv_timeout(fleet, handle):
    with pytest.raises(MpiqTimeoutError):
        mpiq_recv(handle, fleet.config.devices[0].identifier, 99, timeout_ms=200)


def test_truncation_keeps_the_message(fleet, handle):
    dev = fleet.config.devices[0].identifier
    mpiq_send(handle, dev, 7, _block(4, shots=64))
    with pytest.raises(TruncationError):
        mpiq_recv(handle, dev, 7, max_len=8)
    assert mpiq_recv(handle, dev, 7).shots == 64


def test_staged_send_runs_after_barrier(fleet, handle):
    dev = fleet.config.devices[2].identifier
    mpiq_send(handle, dev, 3, _block(2), stage=True)
    with pytest.raises(MpiqTimeoutError):
        mpiq_recv(handle, dev, 3, timeout_ms=300)
    assert fleet.servers[2].received[0].msg_type is MsgType.DATA
    mpiq_barrier(handle, BarrierFlag.QQ, monitors=[2])
    assert mpiq_recv(handle, dev, 3).qrank == 2


def test_classical_self_send(handle):
    classical_send(handle, 0, 4, b"me")
    assert classical_recv(handle, 0, 4) == b"me"
    with pytest.raises(AddressError):
        classical_send(handle, 1, 4, b"x")


def test_classical_between_ranks(fleet, make_world):
    r0, r1 = make_world(fleet.config)
    classical_send(r0, 1, 10, b"hello")
    assert classical_recv(r1, 0, 10) == b"hello"
    classical_send(r1, 0, 11, b"back")
    assert classical_recv(r0, 1, 11) == b"back"


def test_foreign_context_is_dropped(fleet, make_world):
    r0, _ = make_world(fleet.config)
    ch = open_channel(r0.classical_endpoint(0), 2000)
    ch.send_frame(Envelope(MsgType.DATA, 5, 1, 0, 12), b"intruder")
    ch.send_frame(Envelope(MsgType.DATA, 0, 1, 0, 12), b"ok")
    assert classical_recv(r0, 1, 12) == b"ok"
    with pytest.raises(MpiqTimeoutError):
        classical_recv(r0, 1, 12, timeout_ms=200)
    ch.close()
