#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: messaging.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Point-to-point operations.

- mpiq_send / mpiq_recv address a monitor by its {ip, device_id} identifier. A send completes when the
  monitor ACKs receipt; execution happens later. Receives match exactly on (context, source, tag);
  frames that do not match stay queued on the link.
- classical_send / classical_recv move opaque bytes between classical ranks; a self-send is buffered in
  the rank's own inbox.
"""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from . import payloads
from .domain import resolve_qrank
from .endpoint import MonitorLink
from .errors import NAK_CODES, AddressError, DecodeError, ProtocolError, QubitRangeError
from .models import DeviceIdentifier, ShotTable, WaveformBlock
from .wire import Envelope, Frame, MsgType, SrcKind

if TYPE_CHECKING:
    from .runtime import RuntimeHandle

logger = logging.getLogger(__name__)


def _raise_nak(frame: Frame, dev: DeviceIdentifier) -> None:
    status, text = payloads.decode_ack(frame.payload)
    if status:
        cls = NAK_CODES.get(status, ProtocolError)
        raise cls(f"{dev} rejected tag {frame.envelope.tag}: {text}")


def _monitor_link(handle: RuntimeHandle, dev: DeviceIdentifier) -> MonitorLink:
    handle.check_live()
    return handle.link(resolve_qrank(handle.world, dev))


def mpiq_send(
    handle: RuntimeHandle,
    dest: DeviceIdentifier,
    tag: int,
    block: WaveformBlock,
    *,
    stage: bool = False,
    timeout_ms: int | None = None,
) -> None:
    """Deliver one payload to dest's monitor; stage=True defers execution to the next QQ barrier."""
    link = _monitor_link(handle, dest)
    capacity = handle.world.qubit_count(link.qrank)
    if not block.channels:
        raise DecodeError("block carries no channels")
    for q in block.qubit_indices:
        if q >= capacity:
            raise QubitRangeError(f"qubit index {q} on {dest} with {capacity} qubit(s)")
    if (block.node_ip, block.device_id) != dest.key:
        block = block.retarget(dest)

    env = Envelope(
        msg_type=MsgType.DATA if stage else MsgType.EXECUTE,
        context=handle.context,
        src=handle.my_rank,
        dst=link.qrank,
        tag=tag,
        src_kind=SrcKind.CLASSICAL,
    )
    frame = link.request(env, payloads.encode_block(block), MsgType.ACK, timeout_ms or handle.timeout_ms)
    _raise_nak(frame, dest)
    logger.debug("sent tag=%d (%s) to %s", tag, env.msg_type.name, dest)


def mpiq_recv(
    handle: RuntimeHandle,
    source: DeviceIdentifier,
    tag: int,
    max_len: int | None = None,
    *,
    timeout_ms: int | None = None,
) -> ShotTable:
    link = _monitor_link(handle, source)

    def match(e: Envelope) -> bool:
        return e.tag == tag and e.src == link.qrank and e.msg_type in (MsgType.RESULT, MsgType.ACK)

    frame = link.await_frame(match, timeout_ms or handle.timeout_ms, max_len)
    if frame.envelope.msg_type is MsgType.ACK:
        # execution-time NAK for this tag
        _raise_nak(frame, source)
        raise ProtocolError(f"unexpected ACK for tag {tag} from {source}")
    return payloads.decode_result(frame.payload, link.qrank)


def _check_rank(handle: RuntimeHandle, rank: int) -> None:
    handle.check_live()
    if rank not in handle.world.group.classical_ranks:
        raise AddressError(f"unknown classical rank {rank} (world size {handle.size})")


def classical_send(handle: RuntimeHandle, peer_rank: int, tag: int, data: bytes) -> None:
    _check_rank(handle, peer_rank)
    env = Envelope(
        MsgType.DATA, handle.context, handle.my_rank, peer_rank, tag, len(data), SrcKind.CLASSICAL
    )
    if peer_rank == handle.my_rank:
        assert handle.post is not None
        handle.post.deliver(Frame(env, bytes(data)))
        return
    handle.peer_channel(peer_rank).send_frame(env, data)


def classical_recv(
    handle: RuntimeHandle,
    peer_rank: int,
    tag: int,
    max_len: int | None = None,
    *,
    timeout_ms: int | None = None,
) -> bytes:
    _check_rank(handle, peer_rank)
    assert handle.post is not None
    frame = handle.post.take(
        lambda e: e.context == handle.context and e.src == peer_rank and e.tag == tag,
        timeout_ms or handle.timeout_ms,
        max_len,
    )
    return frame.payload
