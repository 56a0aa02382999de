#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: monitor.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
The per-device MonitorProcess: listens on the device's TCP port, ACKs and stores pre-compiled payloads,
executes them one at a time on the statevector backend, takes part in quantum barriers and answers clock
pings. Control frames (PING, SYNC_*, SHUTDOWN) are served on the connection threads; EXECUTE work runs on a
single executor thread in arrival order.

Usage:
mpiq-monitor --ip 127.0.0.1 --port 7000 --device-id 0 --qubits 4 [--seed 1] [--delay-ms 0]
"""
from __future__ import annotations

import argparse
import logging
import sys
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from . import payloads
from .errors import (
    BindError,
    ChannelClosed,
    DecodeError,
    IntegrityError,
    MpiqError,
    MpiqTimeoutError,
    ProtocolError,
    QubitRangeError,
    RangeError,
    nak_code_for,
)
from .models import DeviceEntry, DeviceIdentifier, QuantumNodeConfig, ShotTable, WaveformBlock
from .qsim import decode_gate_stream, simulate
from .transport import Channel, Listener
from .utils import configure_logging, default_seed, mix64
from .wire import Envelope, Frame, MsgType, SrcKind

logger = logging.getLogger(__name__)

SHUTDOWN_DRAIN_S = 60.0
HISTORY_LIMIT = 1024


@dataclass(slots=True, eq=False)
class _Conn:
    channel: Channel
    lock: threading.Lock = field(default_factory=threading.Lock)

    def send(self, env: Envelope, payload: bytes = b"") -> bool:
        with self.lock:
            try:
                self.channel.send_frame(env, payload)
                return True
            except ChannelClosed:
                return False


@dataclass(slots=True)
class Job:
    tag: int
    block: WaveformBlock
    request: Envelope
    conn: _Conn


@dataclass(frozen=True, slots=True)
class Receipt:
    msg_type: MsgType
    context: int
    tag: int
    circuit_digest: int
    qubits: tuple[int, ...]


@dataclass(slots=True)
class MonitorState:
    device: DeviceIdentifier
    qubit_count: int
    rng_seed: int
    pending: deque[Job] = field(default_factory=deque)
    staged: list[Job] = field(default_factory=list)
    phase: str = "idle"  # idle | armed | executing | reporting
    armed: bool = False
    delay_ms: float = 0.0


def inject_compute_delay(state: MonitorState, delay_ms: float) -> None:
    if delay_ms < 0:
        raise RangeError(f"delay_ms must be >= 0, got {delay_ms}")
    state.delay_ms = float(delay_ms)


def validate_block(state: MonitorState, block: WaveformBlock) -> None:
    if not block.channels:
        raise DecodeError("block carries no channels")
    if not block.digest_ok():
        raise IntegrityError(f"circuit digest mismatch for block {block.circuit_digest:#018x}")
    for q in block.qubit_indices:
        if q >= state.qubit_count:
            raise QubitRangeError(f"qubit index {q} on a {state.qubit_count}-qubit device")
    if block.shots < 1:
        raise DecodeError("block requests zero shots")
    decode_gate_stream(block.channels)


def execution_seed(state: MonitorState, tag: int, block: WaveformBlock) -> int:
    return mix64(state.rng_seed, tag, block.circuit_digest)


def handle_execute(state: MonitorState, tag: int, block: WaveformBlock, qrank: int = 0) -> ShotTable:
    validate_block(state, block)
    circuit = decode_gate_stream(block.channels)
    table = simulate(circuit, block.shots, execution_seed(state, tag, block), qrank=qrank)
    if state.delay_ms > 0:
        time.sleep(state.delay_ms / 1000.0)
    return table


def _busy_wait_until(target_ns: int) -> int:
    while True:
        now = time.monotonic_ns()
        left = target_ns - now
        if left <= 0:
            return now
        if left > 2_000_000:
            time.sleep((left - 1_000_000) / 1e9)
        else:
            time.sleep(0)


class MonitorServer:
    def __init__(self, entry: DeviceEntry, seed: int | None = None, delay_ms: float = 0.0):
        self.entry = entry
        self.state = MonitorState(
            device=entry.identifier,
            qubit_count=entry.qubit_count,
            rng_seed=default_seed() if seed is None else seed,
        )
        inject_compute_delay(self.state, delay_ms)
        # most recent receipts and release times, oldest dropped first
        self.received: deque[Receipt] = deque(maxlen=HISTORY_LIMIT)
        self.releases_ns: deque[int] = deque(maxlen=HISTORY_LIMIT)
        self.exit_code: int | None = None
        self._cond = threading.Condition()
        self._busy = False
        self._stopping = False
        self._stopped = threading.Event()
        self._conns: set[_Conn] = set()
        self._listener = Listener(entry.ip, entry.port, self._on_channel, name=f"monitor-{entry.port}")
        self._executor = threading.Thread(
            target=self._execute_loop, name=f"executor-{entry.port}", daemon=True
        )

    @property
    def device(self) -> DeviceIdentifier:
        return self.state.device

    def start(self) -> MonitorServer:
        self._listener.start()
        self._executor.start()
        logger.info("monitor %s serving %d qubits", self.device, self.state.qubit_count)
        return self

    def wait(self, timeout: float | None = None) -> bool:
        return self._stopped.wait(timeout)

    def serve_forever(self) -> int:
        self.start()
        self._stopped.wait()
        return self.exit_code or 0

    # connections

    def _on_channel(self, channel: Channel) -> None:
        conn = _Conn(channel)
        with self._cond:
            if self._stopping:
                channel.close()
                return
            self._conns.add(conn)
        threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn: _Conn) -> None:
        try:
            while not self._stopped.is_set():
                try:
                    frame = conn.channel.recv_frame()
                except MpiqTimeoutError:
                    continue
                except ChannelClosed:
                    break
                except ProtocolError as e:
                    logger.warning("monitor %s dropping connection: %s", self.device, e)
                    break
                if not self._dispatch(conn, frame):
                    break
        finally:
            with self._cond:
                self._conns.discard(conn)
            conn.channel.close()

    def _reply(self, conn: _Conn, req: Envelope, msg_type: MsgType, payload: bytes = b"") -> bool:
        env = Envelope(
            msg_type=msg_type,
            context=req.context,
            src=req.dst,
            dst=req.src,
            tag=req.tag,
            src_kind=SrcKind.QUANTUM,
        )
        return conn.send(env, payload)

    def _dispatch(self, conn: _Conn, frame: Frame) -> bool:
        env = frame.envelope
        mt = env.msg_type
        if mt is MsgType.PING:
            self._reply(conn, env, MsgType.PONG, payloads.encode_u64(time.monotonic_ns()))
        elif mt in (MsgType.EXECUTE, MsgType.DATA):
            self._receive_block(conn, frame)
        elif mt is MsgType.SYNC_READY:
            with self._cond:
                self.state.armed = True
                if not self._busy:
                    self.state.phase = "armed"
            self._reply(conn, env, MsgType.SYNC_READY, frame.payload)
        elif mt is MsgType.SYNC_RELEASE and not frame.payload:
            # a failed barrier: drop the arm, keep staged payloads for the next one
            self._disarm()
            self._reply(conn, env, MsgType.SYNC_RELEASE)
        elif mt is MsgType.SYNC_RELEASE:
            target = payloads.decode_u64(frame.payload)
            released = _busy_wait_until(target)
            self._release(released)
            self._reply(conn, env, MsgType.SYNC_RELEASE, payloads.encode_u64(released))
        elif mt is MsgType.SHUTDOWN:
            self._drain()
            self._reply(conn, env, MsgType.ACK, payloads.encode_ack())
            self.stop()
            return False
        else:
            self._reply(conn, env, MsgType.ACK, payloads.encode_ack(4, f"unexpected {mt.name}"))
        return True

    def _receive_block(self, conn: _Conn, frame: Frame) -> None:
        env = frame.envelope
        try:
            block = payloads.decode_block(frame.payload, self.device.ip, self.device.device_id)
            validate_block(self.state, block)
        except MpiqError as e:
            logger.warning("monitor %s NAK tag=%d: %s", self.device, env.tag, e)
            self._reply(conn, env, MsgType.ACK, payloads.encode_ack(nak_code_for(e), str(e)))
            return
        job = Job(env.tag, block, env, conn)
        with self._cond:
            self.received.append(
                Receipt(env.msg_type, env.context, env.tag, block.circuit_digest, tuple(block.qubit_indices))
            )
        # the receipt ACK must precede any RESULT or execution NAK for this tag
        self._reply(conn, env, MsgType.ACK, payloads.encode_ack())
        with self._cond:
            if env.msg_type is MsgType.EXECUTE:
                self.state.pending.append(job)
            else:
                self.state.staged.append(job)
            self._cond.notify_all()

    def _release(self, released_ns: int) -> None:
        with self._cond:
            self.releases_ns.append(released_ns)
            self.state.pending.extend(self.state.staged)
            self.state.staged.clear()
            self.state.armed = False
            if not self._busy:
                self.state.phase = "idle"
            self._cond.notify_all()

    def _disarm(self) -> None:
        with self._cond:
            self.state.armed = False
            if not self._busy:
                self.state.phase = "idle"
            self._cond.notify_all()
        logger.info(
            "monitor %s disarmed, %d staged payload(s) kept", self.device, len(self.state.staged)
        )

    # execution

    def _execute_loop(self) -> None:
        while True:
            with self._cond:
                while not self._stopped.is_set() and (self.state.armed or not self.state.pending):
                    self._cond.wait(0.5)
                if self._stopped.is_set():
                    return
                job = self.state.pending.popleft()
                self._busy = True
                self.state.phase = "executing"
            try:
                table = handle_execute(self.state, job.tag, job.block, qrank=job.request.dst)
                self.state.phase = "reporting"
                ok = self._reply(job.conn, job.request, MsgType.RESULT, payloads.encode_result(table))
                if not ok:
                    logger.warning("monitor %s: requester gone, RESULT tag=%d dropped", self.device, job.tag)
            except MpiqError as e:
                logger.error("monitor %s: execution of tag=%d failed: %s", self.device, job.tag, e)
                self._reply(job.conn, job.request, MsgType.ACK, payloads.encode_ack(nak_code_for(e), str(e)))
            finally:
                with self._cond:
                    self._busy = False
                    self.state.phase = "armed" if self.state.armed else "idle"
                    self._cond.notify_all()

    def _drain(self) -> None:
        with self._cond:
            self._stopping = True
            self.state.armed = False
            if self.state.staged:
                logger.warning(
                    "monitor %s: discarding %d staged payload(s) never released",
                    self.device,
                    len(self.state.staged),
                )
                self.state.staged.clear()
            self._cond.notify_all()
            deadline = time.monotonic() + SHUTDOWN_DRAIN_S
            while self.state.pending or self._busy:
                if not self._cond.wait(max(0.0, deadline - time.monotonic())):
                    if time.monotonic() >= deadline:
                        logger.error("monitor %s: drain timed out", self.device)
                        break
        logger.info("monitor %s drained", self.device)

    def stop(self) -> None:
        if self._stopped.is_set():
            return
        with self._cond:
            self._stopping = True
            conns = list(self._conns)
        self._listener.close()
        for c in conns:
            c.channel.close()
        if self.exit_code is None:
            self.exit_code = 0
        with self._cond:
            self._stopped.set()
            self._cond.notify_all()
        logger.info("monitor %s stopped", self.device)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mpiq-monitor", description="Quantum monitor process")
    parser.add_argument("--ip", required=True)
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--device-id", type=int, required=True)
    parser.add_argument("--qubits", type=int, required=True)
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    parser.add_argument("--delay-ms", type=float, default=0.0)
    parser.add_argument("--log-level", default=None)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        entry = DeviceEntry(args.ip, args.port, args.device_id, args.qubits)
        QuantumNodeConfig(devices=[entry]).validate()
        server = MonitorServer(entry, seed=args.seed, delay_ms=args.delay_ms)
        return server.serve_forever()
    except BindError as e:
        print(f"mpiq-monitor: {e}", file=sys.stderr)
        return 3
    except MpiqError as e:
        print(f"mpiq-monitor: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
