#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: wire.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Bit-exact frame codec.

Wire format (all integers little-endian):
  magic "MPIQ" (4) | version u8 (=1) | envelope (27) | payload (payload_len)
  envelope = msg_type u8 | src_kind u8 | context u32 | src u32 | dst u32 | tag u32 | payload_len u64 | reserved u8
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .errors import IncompleteFrame, ProtocolError, SizeError, VersionError

MAGIC = b"MPIQ"
VERSION = 1
PREAMBLE = struct.Struct("<4sB")
ENVELOPE = struct.Struct("<BBIIIIQx")
HEADER_SIZE = PREAMBLE.size + ENVELOPE.size  # 32
MAX_PAYLOAD = 1 << 32


class MsgType(IntEnum):
    EXECUTE = 1
    RESULT = 2
    SYNC_READY = 3
    SYNC_RELEASE = 4
    PING = 5
    PONG = 6
    SHUTDOWN = 7
    ACK = 8
    DATA = 9


class SrcKind(IntEnum):
    CLASSICAL = 0
    QUANTUM = 1


@dataclass(frozen=True, slots=True)
class Envelope:
    msg_type: MsgType
    context: int
    src: int
    dst: int
    tag: int = 0
    payload_len: int = 0
    src_kind: SrcKind = SrcKind.CLASSICAL


@dataclass(frozen=True, slots=True)
class Frame:
    envelope: Envelope
    payload: bytes


def encode_frame(env: Envelope, payload: bytes = b"") -> bytes:
    n = len(payload)
    if n > MAX_PAYLOAD:
        raise SizeError(f"payload of {n} bytes exceeds cap {MAX_PAYLOAD}")
    try:
        head = PREAMBLE.pack(MAGIC, VERSION) + ENVELOPE.pack(
            int(env.msg_type),
            int(env.src_kind),
            env.context,
            env.src,
            env.dst,
            env.tag,
            n,
        )
    except struct.error as e:
        raise ProtocolError(f"envelope field out of range: {e}") from e
    return head + bytes(payload)


def parse_header(data: bytes | memoryview) -> Envelope:
    """Decode the 32-byte header; payload_len tells the caller how much follows."""
    avail = len(data)
    head = bytes(data[: len(MAGIC)])
    if head != MAGIC[: len(head)]:
        raise ProtocolError(f"bad magic {head!r}")
    if avail < HEADER_SIZE:
        raise IncompleteFrame(HEADER_SIZE, avail)
    _, version = PREAMBLE.unpack_from(data, 0)
    if version != VERSION:
        raise VersionError(f"unsupported frame version {version}")
    msg_type, src_kind, context, src, dst, tag, plen = ENVELOPE.unpack_from(data, PREAMBLE.size)
    try:
        mt = MsgType(msg_type)
    except ValueError:
        raise ProtocolError(f"unknown msg_type {msg_type}") from None
    if src_kind not in (SrcKind.CLASSICAL, SrcKind.QUANTUM):
        raise ProtocolError(f"bad src_kind {src_kind}")
    if plen > MAX_PAYLOAD:
        raise SizeError(f"declared payload {plen} exceeds cap")
    return Envelope(mt, context, src, dst, tag, plen, SrcKind(src_kind))


def decode_frame(data: bytes | memoryview) -> tuple[Envelope, bytes]:
    env = parse_header(data)
    end = HEADER_SIZE + env.payload_len
    if len(data) < end:
        raise IncompleteFrame(end, len(data))
    return env, bytes(data[HEADER_SIZE:end])
