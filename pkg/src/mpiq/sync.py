#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: sync.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
The hybrid barrier.

- CC (flag 0): all-to-root then root-broadcast among classical ranks over classical messages.
- QQ (flag 2): the calling rank coordinates. Every monitor is armed with SYNC_READY, a common release
  time is chosen as now + 2 * max_rtt + margin and each monitor receives it translated into its own
  clock frame. Monitors busy-wait to the target and report the local time they actually released.
  If arming fails anywhere, every monitor that was armed gets an empty SYNC_RELEASE (disarm) before
  BarrierTimeout is raised, so it goes back to executing plain EXECUTE work. Staged payloads stay
  staged until a barrier succeeds.

Clock offsets are Cristian-style estimates: PING(t0) -> PONG(t_m) -> t1; offset = t_m - (t0 + rtt / 2),
keeping the exchange with the smallest rtt out of five.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from . import payloads
from .endpoint import MonitorLink
from .errors import BarrierTimeout, FlagError, MpiqError, MpiqTimeoutError
from .messaging import classical_recv, classical_send
from .models import BarrierFlag, ClockOffset, DeviceIdentifier
from .wire import Envelope, MsgType

if TYPE_CHECKING:
    from .runtime import RuntimeHandle

logger = logging.getLogger(__name__)

OFFSET_ROUNDS = 5
CC_ARRIVE_TAG = 0xFFFFFFF0
CC_RELEASE_TAG = 0xFFFFFFF1


@dataclass(frozen=True, slots=True)
class BarrierRelease:
    """Outcome of a QQ barrier; times are monotonic ns in the coordinator's clock frame."""

    target_ns: int
    released_ns: dict[int, int] = field(default_factory=dict)

    @property
    def spread_ms(self) -> float:
        if not self.released_ns:
            return 0.0
        values = self.released_ns.values()
        return (max(values) - min(values)) / 1e6

    def within(self, epsilon_ms: float) -> bool:
        return self.spread_ms <= epsilon_ms


def estimate_clock_offset(
    handle: RuntimeHandle, link: MonitorLink, rounds: int = OFFSET_ROUNDS
) -> ClockOffset:
    best: tuple[int, int] | None = None  # (rtt_ns, offset_ns)
    for _ in range(rounds):
        tag = handle.next_tag()
        t0 = time.monotonic_ns()
        env = Envelope(MsgType.PING, handle.context, handle.my_rank, link.qrank, tag)
        frame = link.request(env, payloads.encode_u64(t0), MsgType.PONG, handle.timeout_ms)
        t1 = time.monotonic_ns()
        t_m = payloads.decode_u64(frame.payload)
        rtt = t1 - t0
        offset = t_m - (t0 + rtt // 2)
        if best is None or rtt < best[0]:
            best = (rtt, offset)
    assert best is not None
    return ClockOffset(
        peer=link.device,
        offset_ms=best[1] / 1e6,
        rtt_ms=best[0] / 1e6,
        measured_at_ns=time.monotonic_ns(),
    )


def _fresh_offset(handle: RuntimeHandle, link: MonitorLink) -> ClockOffset:
    ttl_ns = int(handle.config.offset_ttl_s * 1e9)
    if link.offset is None or time.monotonic_ns() - link.offset.measured_at_ns > ttl_ns:
        link.offset = estimate_clock_offset(handle, link)
    return link.offset


DISARM_WAIT_MS = 1000


def _disarm(handle: RuntimeHandle, links: list[MonitorLink], tag: int) -> None:
    for link in links:
        env = Envelope(MsgType.SYNC_RELEASE, handle.context, handle.my_rank, link.qrank, tag)
        try:
            link.request(env, b"", MsgType.SYNC_RELEASE, DISARM_WAIT_MS)
        except MpiqError as e:
            logger.warning("barrier: disarm of %s not confirmed: %s", link.device, e)
        link.discard(lambda e: e.tag == tag)
    logger.info("barrier aborted, %d monitor(s) disarmed", len(links))


def quantum_barrier(
    handle: RuntimeHandle,
    monitors: list[int] | None = None,
    *,
    margin_ms: float | None = None,
    timeout_ms: int | None = None,
) -> BarrierRelease:
    handle.check_live()
    qranks = sorted(handle.world.q_map) if monitors is None else sorted(set(monitors))
    timeout_ms = timeout_ms or handle.timeout_ms
    margin_ms = handle.config.margin_ms if margin_ms is None else margin_ms
    if not qranks:
        return BarrierRelease(target_ns=time.monotonic_ns())

    absent: list[DeviceIdentifier | str] = []
    links: dict[int, MonitorLink] = {}
    for q in qranks:
        try:
            links[q] = handle.link(q)
        except MpiqError:
            absent.append(f"qrank {q}")
    if absent:
        raise BarrierTimeout(absent)

    # arm
    tag = handle.next_tag()
    offsets: dict[int, ClockOffset] = {}
    armed: list[int] = []
    for q, link in links.items():
        try:
            offsets[q] = _fresh_offset(handle, link)
            env = Envelope(MsgType.SYNC_READY, handle.context, handle.my_rank, q, tag)
            link.send(env, payloads.encode_u32(q))
            armed.append(q)
        except MpiqError as e:
            logger.warning("barrier: monitor %s not armed: %s", link.device, e)
            absent.append(link.device)
    deadline = time.monotonic() + timeout_ms / 1000.0
    for q, link in links.items():
        if link.device in absent:
            continue
        try:
            remaining = max(1, int((deadline - time.monotonic()) * 1000))
            link.await_frame(lambda e: e.msg_type is MsgType.SYNC_READY and e.tag == tag, remaining)
        except MpiqError as e:
            logger.warning("barrier: no READY from %s: %s", link.device, e)
            absent.append(link.device)
    if absent:
        _disarm(handle, [links[q] for q in armed], tag)
        raise BarrierTimeout(absent)

    # release
    max_rtt_ns = max(int(o.rtt_ms * 1e6) for o in offsets.values())
    target = time.monotonic_ns() + 2 * max_rtt_ns + int(margin_ms * 1e6)
    for q, link in links.items():
        local_target = max(0, target + int(offsets[q].offset_ms * 1e6))
        env = Envelope(MsgType.SYNC_RELEASE, handle.context, handle.my_rank, q, tag)
        try:
            link.send(env, payloads.encode_u64(local_target))
        except MpiqError as e:
            absent.append(link.device)
            logger.warning("barrier: release to %s failed: %s", link.device, e)
    released: dict[int, int] = {}
    wait_ms = timeout_ms + int(margin_ms) + 2 * max_rtt_ns // 1_000_000
    deadline = time.monotonic() + wait_ms / 1000.0
    for q, link in links.items():
        if link.device in absent:
            continue
        try:
            remaining = max(1, int((deadline - time.monotonic()) * 1000))
            frame = link.await_frame(
                lambda e: e.msg_type is MsgType.SYNC_RELEASE and e.tag == tag, remaining
            )
        except MpiqError as e:
            logger.warning("barrier: no release report from %s: %s", link.device, e)
            absent.append(link.device)
            continue
        actual = payloads.decode_u64(frame.payload)
        released[q] = actual - int(offsets[q].offset_ms * 1e6)
    if absent:
        raise BarrierTimeout(absent)

    report = BarrierRelease(target_ns=target, released_ns=released)
    if not report.within(handle.config.epsilon_sync_ms):
        logger.warning(
            "barrier release spread %.3f ms exceeds epsilon %.1f ms",
            report.spread_ms,
            handle.config.epsilon_sync_ms,
        )
    else:
        logger.debug("barrier released %d monitor(s), spread %.3f ms", len(released), report.spread_ms)
    return report


def classical_barrier(handle: RuntimeHandle, timeout_ms: int | None = None) -> None:
    handle.check_live()
    if handle.size <= 1:
        return
    timeout_ms = timeout_ms or handle.timeout_ms
    root = 0
    if handle.my_rank != root:
        classical_send(handle, root, CC_ARRIVE_TAG, b"")
        try:
            classical_recv(handle, root, CC_RELEASE_TAG, timeout_ms=timeout_ms)
        except MpiqTimeoutError:
            raise BarrierTimeout([f"rank {root}"]) from None
        return

    absent = []
    deadline = time.monotonic() + timeout_ms / 1000.0
    for r in range(1, handle.size):
        remaining = max(1, int((deadline - time.monotonic()) * 1000))
        try:
            classical_recv(handle, r, CC_ARRIVE_TAG, timeout_ms=remaining)
        except MpiqTimeoutError:
            absent.append(f"rank {r}")
    if absent:
        raise BarrierTimeout(absent)
    for r in range(1, handle.size):
        classical_send(handle, r, CC_RELEASE_TAG, b"")


def mpiq_barrier(
    handle: RuntimeHandle,
    flag: BarrierFlag | int,
    *,
    monitors: list[int] | None = None,
    timeout_ms: int | None = None,
) -> BarrierRelease | None:
    if isinstance(flag, bool):
        raise FlagError(f"barrier flag must be 0 (CC) or 2 (QQ), got {flag!r}")
    try:
        flag = BarrierFlag(flag)
    except ValueError:
        raise FlagError(f"barrier flag must be 0 (CC) or 2 (QQ), got {flag!r}") from None
    if flag is BarrierFlag.CC:
        classical_barrier(handle, timeout_ms)
        return None
    return quantum_barrier(handle, monitors, timeout_ms=timeout_ms)
