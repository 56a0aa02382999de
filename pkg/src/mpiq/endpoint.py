#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: endpoint.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Arrival queues that sit between a channel and the matching receive calls.

- MonitorLink: the classical side of one monitor connection. Frames pulled off the channel that do not
  match the current wait are parked and matched later, so out-of-order RESULTs are never lost.
- ClassicalPost: the inbox of a classical rank, fed by reader threads of its listener.
"""
from __future__ import annotations

import logging
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field

from .errors import ChannelClosed, ContextMismatch, MpiqTimeoutError, TruncationError
from .models import ClockOffset, DeviceIdentifier
from .transport import Channel
from .wire import Envelope, Frame, MsgType

logger = logging.getLogger(__name__)

Match = Callable[[Envelope], bool]


def _take(frames: list[Frame], match: Match, max_len: int | None) -> Frame | None:
    for i, f in enumerate(frames):
        if match(f.envelope):
            if max_len is not None and len(f.payload) > max_len:
                raise TruncationError(len(f.payload), max_len)
            return frames.pop(i)
    return None


@dataclass(eq=False)
class MonitorLink:
    device: DeviceIdentifier
    qrank: int
    channel: Channel
    context: int
    offset: ClockOffset | None = None
    arrived: list[Frame] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def send(self, env: Envelope, payload: bytes = b"") -> None:
        with self.lock:
            self.channel.send_frame(env, payload)

    def await_frame(self, match: Match, timeout_ms: int, max_len: int | None = None) -> Frame:
        deadline = time.monotonic() + timeout_ms / 1000.0
        with self.lock:
            while True:
                frame = _take(self.arrived, match, max_len)
                if frame is not None:
                    return frame
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise MpiqTimeoutError(f"no matching frame from {self.device} within {timeout_ms} ms")
                try:
                    frame = self.channel.recv_frame(max(1, int(remaining * 1000)), context=self.context)
                except ContextMismatch as e:
                    logger.warning("link %s: %s", self.device, e)
                    continue
                self.arrived.append(frame)

    def request(
        self, env: Envelope, payload: bytes, reply: MsgType, timeout_ms: int, *also: MsgType
    ) -> Frame:
        """Send, then wait for the reply of type `reply` (or any of `also`) with the same tag."""
        kinds = (reply, *also)
        with self.lock:
            self.send(env, payload)
            return self.await_frame(
                lambda e: e.msg_type in kinds and e.tag == env.tag, timeout_ms
            )

    def discard(self, match: Match) -> int:
        """Drop parked frames that will never be waited for."""
        with self.lock:
            keep = [f for f in self.arrived if not match(f.envelope)]
            dropped = len(self.arrived) - len(keep)
            self.arrived = keep
        return dropped

    def close(self) -> None:
        self.channel.close()


class ClassicalPost:
    """Inbox of one classical rank; frames are matched on (context, src, tag).

    One inbox serves the world and every sub-domain the rank belongs to. Frames for a context that is
    not open here are dropped on arrival.
    """

    def __init__(self, context: int):
        self.contexts: set[int] = {context}
        self._frames: list[Frame] = []
        self._cond = threading.Condition()
        self._readers: list[threading.Thread] = []
        self._channels: list[Channel] = []
        self._closed = False

    def deliver(self, frame: Frame) -> None:
        with self._cond:
            self._frames.append(frame)
            self._cond.notify_all()

    def attach(self, channel: Channel) -> None:
        t = threading.Thread(target=self._read, args=(channel,), daemon=True)
        with self._cond:
            if self._closed:
                channel.close()
                return
            self._channels.append(channel)
            self._readers.append(t)
        t.start()

    def _read(self, channel: Channel) -> None:
        while not self._closed:
            try:
                frame = channel.recv_frame()
            except MpiqTimeoutError:
                continue
            except ChannelClosed:
                return
            except Exception as e:  # corrupt stream: drop the connection
                logger.error("classical inbox: closing connection from %s: %s", channel.peer, e)
                channel.close()
                return
            if frame.envelope.msg_type is not MsgType.DATA:
                logger.warning("classical inbox: ignoring %s frame", frame.envelope.msg_type.name)
                continue
            if frame.envelope.context not in self.contexts:
                logger.warning(
                    "classical inbox: dropping frame for context %d from rank %d",
                    frame.envelope.context,
                    frame.envelope.src,
                )
                continue
            self.deliver(frame)

    def open_context(self, context: int) -> None:
        with self._cond:
            self.contexts.add(context)

    def close_context(self, context: int) -> None:
        with self._cond:
            self.contexts.discard(context)
            self._frames = [f for f in self._frames if f.envelope.context != context]

    def take(self, match: Match, timeout_ms: int, max_len: int | None = None) -> Frame:
        deadline = time.monotonic() + timeout_ms / 1000.0
        with self._cond:
            while True:
                frame = _take(self._frames, match, max_len)
                if frame is not None:
                    return frame
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise MpiqTimeoutError(f"no matching classical message within {timeout_ms} ms")
                self._cond.wait(remaining)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            channels = list(self._channels)
            self._cond.notify_all()
        for ch in channels:
            ch.close()
