#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: transport.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Channels and listeners for the single-stage link.

- TcpChannel: one TCP connection, small-packet coalescing disabled, frames via wire.encode_frame.
- LocalChannel: in-process queue pair for endpoints living in the same process; frames (and payload
  objects) are handed over without re-encoding.

open_channel() picks the local kind when the endpoint is a loopback/self address served by a Listener
of this process, TCP otherwise. Both kinds honour the same contract: per-channel FIFO, recv timeout,
ChannelClosed once closed, optional context filtering on receive.
"""
from __future__ import annotations

import logging
import queue
import select
import socket
import threading
import time
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import replace

from .errors import (
    BindError,
    ChannelClosed,
    ConnectError,
    ContextMismatch,
    MpiqTimeoutError,
    SizeError,
)
from .models import DeviceIdentifier
from .utils import default_timeout_ms, is_loopback
from .wire import HEADER_SIZE, MAX_PAYLOAD, Envelope, Frame, encode_frame, parse_header

logger = logging.getLogger(__name__)

Endpoint = tuple[str, int]
READ_CHUNK = 1 << 16


def as_endpoint(target: DeviceIdentifier | Endpoint) -> Endpoint:
    if isinstance(target, DeviceIdentifier):
        return (target.ip, target.port)
    ip, port = target
    return (ip, int(port))


class Channel(ABC):
    kind: str = ""

    def __init__(self, peer: Endpoint, timeout_ms: int | None = None):
        self.peer = peer
        self.timeout_ms = timeout_ms or default_timeout_ms()
        self.state = "connected"

    @property
    def closed(self) -> bool:
        return self.state == "closed"

    def _check_open(self) -> None:
        if self.closed:
            raise ChannelClosed(f"{self.kind} channel to {self.peer} is closed")

    def _deadline(self, timeout_ms: int | None) -> float:
        ms = self.timeout_ms if timeout_ms is None else timeout_ms
        return time.monotonic() + ms / 1000.0

    def recv_frame(self, timeout_ms: int | None = None, context: int | None = None) -> Frame:
        """Block for the next frame; a frame from another context is consumed and rejected."""
        frame = self._recv(self._deadline(timeout_ms))
        if context is not None and frame.envelope.context != context:
            raise ContextMismatch(
                f"frame for context {frame.envelope.context} on channel bound to context {context}"
            )
        return frame

    @abstractmethod
    def send_frame(self, env: Envelope, payload: bytes = b"") -> None: ...

    @abstractmethod
    def _recv(self, deadline: float) -> Frame: ...

    @abstractmethod
    def close(self) -> None: ...

    def __repr__(self) -> str:
        return f"<{type(self).__name__} peer={self.peer} state={self.state}>"


class TcpChannel(Channel):
    kind = "tcp"

    def __init__(self, sock: socket.socket, peer: Endpoint, timeout_ms: int | None = None):
        super().__init__(peer, timeout_ms)
        sock.setblocking(True)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self._buf = bytearray()

    def send_frame(self, env: Envelope, payload: bytes = b"") -> None:
        self._check_open()
        data = encode_frame(env, payload)
        try:
            self._sock.sendall(data)
        except OSError as e:
            self._mark_closed()
            raise ChannelClosed(f"send to {self.peer} failed: {e}") from e

    def _fill(self, n: int, deadline: float) -> None:
        while len(self._buf) < n:
            self._check_open()
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise MpiqTimeoutError(f"recv from {self.peer} timed out")
            try:
                ready, _, _ = select.select([self._sock], [], [], remaining)
                if not ready:
                    continue
                chunk = self._sock.recv(max(READ_CHUNK, min(n - len(self._buf), 1 << 20)))
            except (OSError, ValueError) as e:
                self._mark_closed()
                raise ChannelClosed(f"recv from {self.peer} failed: {e}") from e
            if not chunk:
                self._mark_closed()
                raise ChannelClosed(f"peer {self.peer} closed the connection")
            self._buf.extend(chunk)

    def _recv(self, deadline: float) -> Frame:
        self._check_open()
        self._fill(HEADER_SIZE, deadline)
        env = parse_header(self._buf)
        end = HEADER_SIZE + env.payload_len
        self._fill(end, deadline)
        payload = bytes(self._buf[HEADER_SIZE:end])
        del self._buf[:end]
        return Frame(env, payload)

    def _mark_closed(self) -> None:
        if self.state != "closed":
            self.state = "closed"
            try:
                self._sock.close()
            except OSError:
                pass

    def close(self) -> None:
        if self.state == "closed":
            return
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._mark_closed()


_CLOSED = object()


class LocalChannel(Channel):
    kind = "local"

    def __init__(self, peer: Endpoint, inbox: queue.Queue, outbox: queue.Queue, timeout_ms: int | None = None):
        super().__init__(peer, timeout_ms)
        self._inbox = inbox
        self._outbox = outbox

    @staticmethod
    def pair(a: Endpoint, b: Endpoint, timeout_ms: int | None = None):
        """Two connected ends: the first talks to b, the second to a."""
        q1: queue.Queue = queue.Queue()
        q2: queue.Queue = queue.Queue()
        return LocalChannel(b, q1, q2, timeout_ms), LocalChannel(a, q2, q1, timeout_ms)

    def send_frame(self, env: Envelope, payload: bytes = b"") -> None:
        self._check_open()
        if len(payload) > MAX_PAYLOAD:
            raise SizeError(f"payload of {len(payload)} bytes exceeds cap {MAX_PAYLOAD}")
        # header range checks only; the payload object itself is handed over
        encode_frame(replace(env, payload_len=0), b"")
        self._outbox.put(Frame(replace(env, payload_len=len(payload)), payload))

    def _recv(self, deadline: float) -> Frame:
        self._check_open()
        remaining = deadline - time.monotonic()
        try:
            if remaining > 0:
                item = self._inbox.get(timeout=remaining)
            else:
                item = self._inbox.get_nowait()
        except queue.Empty:
            raise MpiqTimeoutError(f"recv from {self.peer} timed out") from None
        if item is _CLOSED:
            self.state = "closed"
            raise ChannelClosed(f"peer {self.peer} closed the channel")
        return item

    def close(self) -> None:
        if self.state == "closed":
            return
        self.state = "closed"
        self._outbox.put(_CLOSED)


class Listener:
    """Accepts TCP connections on (ip, port) and, for this process, local channel requests."""

    def __init__(self, ip: str, port: int, on_channel: Callable[[Channel], None], name: str = ""):
        self.ip = ip
        self.port = port
        self.on_channel = on_channel
        self.name = name or f"listener-{ip}:{port}"
        self._sock: socket.socket | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> Endpoint:
        return (self.ip, self.port)

    def start(self) -> Listener:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((self.ip, self.port))
            sock.listen(128)
        except OSError as e:
            sock.close()
            raise BindError(f"cannot listen on {self.ip}:{self.port}: {e.strerror or e}") from e
        if self.port == 0:
            self.port = sock.getsockname()[1]
        self._sock = sock
        with _LOCAL_LOCK:
            _LOCAL_LISTENERS[self.endpoint] = self
        self._thread = threading.Thread(target=self._accept_loop, name=self.name, daemon=True)
        self._thread.start()
        return self

    def _accept_loop(self) -> None:
        assert self._sock is not None
        while not self._stop.is_set():
            try:
                ready, _, _ = select.select([self._sock], [], [], 0.1)
                if not ready:
                    continue
                conn, addr = self._sock.accept()
            except (OSError, ValueError):
                break
            self.on_channel(TcpChannel(conn, (addr[0], addr[1])))

    def connect_local(self, client: Endpoint, timeout_ms: int | None) -> LocalChannel:
        mine, theirs = LocalChannel.pair(client, self.endpoint, timeout_ms)
        self.on_channel(theirs)
        return mine

    def close(self) -> None:
        self._stop.set()
        with _LOCAL_LOCK:
            if _LOCAL_LISTENERS.get(self.endpoint) is self:
                del _LOCAL_LISTENERS[self.endpoint]
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._thread is not None and self._thread is not threading.current_thread():
            self._thread.join(timeout=1.0)


_LOCAL_LISTENERS: dict[Endpoint, Listener] = {}
_LOCAL_LOCK = threading.Lock()


def open_channel(
    endpoint: DeviceIdentifier | Endpoint,
    timeout_ms: int | None = None,
    *,
    allow_local: bool = True,
) -> Channel:
    ip, port = as_endpoint(endpoint)
    timeout_ms = timeout_ms or default_timeout_ms()
    if allow_local and is_loopback(ip):
        with _LOCAL_LOCK:
            listener = _LOCAL_LISTENERS.get((ip, port))
        if listener is not None:
            ch = listener.connect_local(("local", id(threading.current_thread())), timeout_ms)
            logger.debug("opened local channel to %s:%d", ip, port)
            return ch
    try:
        sock = socket.create_connection((ip, port), timeout=timeout_ms / 1000.0)
    except socket.timeout as e:
        raise MpiqTimeoutError(f"connect to {ip}:{port} timed out after {timeout_ms} ms") from e
    except ConnectionRefusedError as e:
        raise ConnectError(f"connection to {ip}:{port} refused") from e
    except OSError as e:
        raise ConnectError(f"cannot connect to {ip}:{port}: {e.strerror or e}") from e
    sock.settimeout(None)
    logger.debug("opened tcp channel to %s:%d", ip, port)
    return TcpChannel(sock, (ip, port), timeout_ms)


def send_frame(ch: Channel, frame: Frame) -> None:
    ch.send_frame(frame.envelope, frame.payload)


def recv_frame(ch: Channel, timeout_ms: int | None = None, context: int | None = None) -> Frame:
    return ch.recv_frame(timeout_ms, context)
