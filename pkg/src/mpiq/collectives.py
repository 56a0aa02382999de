#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: collectives.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Collectives built from the point-to-point primitives.

Fan-out is sequential by default; width > 1 runs up to `width` sends at a time on a thread pool (one
link per device, so concurrent sends never share a channel). Failures are reported, never rolled back:
targets that already ACKed keep their payload.
"""
from __future__ import annotations

import logging
import time
from collections.abc import Callable, Hashable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, TypeVar

from . import payloads
from .domain import map_quantum
from .errors import (
    ChannelClosed,
    CollectiveError,
    DecodeError,
    IntegrityError,
    MappingError,
    MpiqError,
    MpiqTimeoutError,
    ProtocolError,
    QubitRangeError,
    ShapeError,
)
from .messaging import classical_recv, classical_send, mpiq_recv, mpiq_send
from .models import GatherResult, SendQ, ShotTable, WaveformBlock

if TYPE_CHECKING:
    from .runtime import RuntimeHandle

logger = logging.getLogger(__name__)

ALLGATHER_TAG = 0xFFFFFFF2
T = TypeVar("T", bound=Hashable)


def _fan_out(items: Sequence[T], fn: Callable[[T], None], width: int) -> dict[T, MpiqError]:
    failed: dict[T, MpiqError] = {}
    if width <= 1 or len(items) <= 1:
        for item in items:
            try:
                fn(item)
            except MpiqError as e:
                failed[item] = e
        return failed
    with ThreadPoolExecutor(max_workers=min(width, len(items))) as pool:
        futures = {item: pool.submit(fn, item) for item in items}
        for item, fut in futures.items():
            try:
                fut.result()
            except MpiqError as e:
                failed[item] = e
    return failed


def build_send_q(n_qubits: int, fragment_sizes: Sequence[int]) -> SendQ:
    if any(s < 1 for s in fragment_sizes):
        raise ShapeError(f"fragment sizes must be positive, got {list(fragment_sizes)}")
    if sum(fragment_sizes) != n_qubits:
        raise ShapeError(f"fragment sizes {list(fragment_sizes)} do not sum to {n_qubits}")
    groups = []
    start = 0
    for s in fragment_sizes:
        groups.append(tuple(range(start, start + s)))
        start += s
    return SendQ(tuple(groups))


def check_coverage(send_q: SendQ) -> None:
    flat = [q for g in send_q.groups for q in g]
    seen: set[int] = set()
    for q in flat:
        if q in seen:
            raise MappingError(f"qubit {q} appears in more than one group")
        seen.add(q)
    if seen != set(range(len(flat))):
        missing = sorted(set(range(len(flat))) - seen)
        raise MappingError(f"groups do not cover qubits 0..{len(flat) - 1} (missing {missing})")


def mpiq_bcast(
    handle: RuntimeHandle,
    block_template: WaveformBlock,
    targets: Sequence[int],
    *,
    tag: int = 0,
    stage: bool = True,
    width: int = 1,
) -> None:
    handle.check_live()

    def send(qrank: int) -> None:
        dev = map_quantum(handle.world, qrank)
        mpiq_send(handle, dev, tag, block_template.retarget(dev), stage=stage)

    failed = _fan_out(list(dict.fromkeys(targets)), send, width)
    if failed:
        raise CollectiveError("bcast", {_label(handle, q): e for q, e in failed.items()})


def _label(handle: RuntimeHandle, qrank: int) -> str:
    dev = handle.world.q_map.get(qrank)
    return str(dev) if dev is not None else f"qrank {qrank}"


def mpiq_scatter(
    handle: RuntimeHandle,
    global_blocks: Sequence[WaveformBlock],
    send_q: SendQ,
    *,
    tag: int = 0,
    stage: bool = True,
    targets: Sequence[int] | None = None,
    width: int = 1,
) -> list[tuple[int, int]]:
    """Deliver block i to qrank i (or targets[i]); returns the (qrank, tag) placement per block.

    A target that receives several blocks gets consecutive tags starting at `tag`.
    """
    handle.check_live()
    if len(global_blocks) != len(send_q.groups):
        raise ShapeError(f"{len(global_blocks)} blocks for {len(send_q.groups)} groups")
    check_coverage(send_q)
    for i, (block, group) in enumerate(zip(global_blocks, send_q.groups)):
        if sorted(block.qubit_indices) != list(range(len(group))):
            raise ShapeError(f"block {i} does not span local qubits 0..{len(group) - 1}")
    targets = list(range(len(send_q.groups))) if targets is None else list(targets)
    if len(targets) != len(global_blocks):
        raise ShapeError(f"{len(targets)} targets for {len(global_blocks)} blocks")
    devices = [map_quantum(handle.world, q) for q in targets]

    placements: list[tuple[int, int]] = []
    per_target: dict[int, list[int]] = {}
    seen: dict[int, int] = {}
    for i, q in enumerate(targets):
        placements.append((q, tag + seen.get(q, 0)))
        seen[q] = seen.get(q, 0) + 1
        per_target.setdefault(q, []).append(i)

    def send(qrank: int) -> None:
        # blocks for one device go out in order on its link
        for i in per_target[qrank]:
            mpiq_send(handle, devices[i], placements[i][1], global_blocks[i], stage=stage)

    failed = _fan_out(list(per_target), send, width)
    if failed:
        raise CollectiveError("scatter", {_label(handle, q): e for q, e in failed.items()})
    return placements


def mpiq_gather(
    handle: RuntimeHandle,
    sources: Sequence[int],
    tag: int,
    *,
    max_len: int | None = None,
    timeout_ms: int | None = None,
) -> GatherResult:
    handle.check_live()
    timeout_ms = timeout_ms or handle.timeout_ms
    deadline = time.monotonic() + timeout_ms / 1000.0
    tables: list[ShotTable] = []
    missing: list[int] = []
    for qrank in sorted(set(sources)):
        remaining = max(1, int((deadline - time.monotonic()) * 1000))
        try:
            dev = map_quantum(handle.world, qrank)
            tables.append(mpiq_recv(handle, dev, tag, max_len, timeout_ms=remaining))
        except (MpiqTimeoutError, ChannelClosed) as e:
            logger.warning("gather tag=%d: %s missing: %s", tag, _label(handle, qrank), e)
            missing.append(qrank)
        except (IntegrityError, QubitRangeError, DecodeError, ProtocolError) as e:
            logger.error("gather tag=%d: %s failed: %s", tag, _label(handle, qrank), e)
            missing.append(qrank)
    return GatherResult(tables=tables, complete=not missing, missing=missing)


def mpiq_allgather(
    handle: RuntimeHandle,
    sources: Sequence[int],
    tag: int,
    *,
    root: int = 0,
    timeout_ms: int | None = None,
) -> GatherResult:
    """Collect at root, then distribute the serialized tables to every other classical rank."""
    handle.check_live()
    if handle.size <= 1:
        return mpiq_gather(handle, sources, tag, timeout_ms=timeout_ms)
    if handle.my_rank == root:
        result = mpiq_gather(handle, sources, tag, timeout_ms=timeout_ms)
        blob = payloads.encode_tables(result.tables)
        others = [r for r in handle.world.group.classical_ranks if r != root]
        failed = _fan_out(others, lambda r: classical_send(handle, r, ALLGATHER_TAG, blob), 1)
        if failed:
            raise CollectiveError("allgather", {f"rank {r}": e for r, e in failed.items()})
        return result
    # root may spend the whole gather budget before it starts distributing
    wait_ms = (timeout_ms or handle.timeout_ms) + handle.timeout_ms
    blob = classical_recv(handle, root, ALLGATHER_TAG, timeout_ms=wait_ms)
    tables = payloads.decode_tables(blob)
    missing = sorted(set(sources) - {t.qrank for t in tables})
    return GatherResult(tables=tables, complete=not missing, missing=missing)
