#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: payloads.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Payload layouts carried inside frames (little-endian, bit-exact):

  EXECUTE / DATA  shots u32 | num_channels u16 | {qubit_index u16, stream_len u32, stream}* | circuit_digest u64
  RESULT          shots u32 | width u16 | packed bitstrings (row-major, MSB first, byte-padded per shot)
  ACK             status u8 | [text_len u32 | utf-8 text]   (text present only when status != 0)
  SYNC_READY      qrank u32
  SYNC_RELEASE    target / actual local time, u64 ns
  PING / PONG     u64 ns, monotonic clock of the sender
  gathered tables count u16 | {qrank u32 | RESULT payload}*
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import DecodeError, ProtocolError
from .models import ChannelPayload, ShotTable, WaveformBlock

BLOCK_HEAD = struct.Struct("<IH")
CHANNEL_HEAD = struct.Struct("<HI")
DIGEST = struct.Struct("<Q")
RESULT_HEAD = struct.Struct("<IH")
U8 = struct.Struct("<B")
U16 = struct.Struct("<H")
U32 = struct.Struct("<I")
U64 = struct.Struct("<Q")


def encode_block(block: WaveformBlock) -> bytes:
    parts = [BLOCK_HEAD.pack(block.shots, len(block.channels))]
    for ch in block.channels:
        parts.append(CHANNEL_HEAD.pack(ch.qubit_index, len(ch.stream)))
        parts.append(ch.stream)
    parts.append(DIGEST.pack(block.circuit_digest))
    return b"".join(parts)


def decode_block(payload: bytes, node_ip: str, device_id: int) -> WaveformBlock:
    try:
        shots, count = BLOCK_HEAD.unpack_from(payload, 0)
        off = BLOCK_HEAD.size
        channels = []
        for _ in range(count):
            q, n = CHANNEL_HEAD.unpack_from(payload, off)
            off += CHANNEL_HEAD.size
            if off + n > len(payload):
                raise DecodeError(f"channel {q} stream overruns payload")
            channels.append(ChannelPayload(q, bytes(payload[off : off + n])))
            off += n
        (digest,) = DIGEST.unpack_from(payload, off)
        off += DIGEST.size
    except struct.error as e:
        raise DecodeError(f"truncated block payload: {e}") from e
    if off != len(payload):
        raise DecodeError(f"{len(payload) - off} trailing bytes after block")
    return WaveformBlock(node_ip, device_id, tuple(channels), shots, digest)


def encode_result(table: ShotTable) -> bytes:
    width = table.width
    head = RESULT_HEAD.pack(table.shots, width)
    if width == 0 or not table.bitstrings:
        return head
    bits = np.frombuffer("".join(table.bitstrings).encode("ascii"), dtype=np.uint8) - ord("0")
    return head + np.packbits(bits.reshape(len(table.bitstrings), width), axis=1).tobytes()


def result_size(payload: bytes, offset: int = 0) -> int:
    shots, width = RESULT_HEAD.unpack_from(payload, offset)
    return RESULT_HEAD.size + shots * ((width + 7) // 8)


def decode_result(payload: bytes, qrank: int, offset: int = 0, length: int | None = None) -> ShotTable:
    try:
        shots, width = RESULT_HEAD.unpack_from(payload, offset)
    except struct.error as e:
        raise ProtocolError(f"truncated RESULT payload: {e}") from e
    row = (width + 7) // 8
    start = offset + RESULT_HEAD.size
    end = start + shots * row
    if length is not None and end - offset != length:
        raise ProtocolError(f"RESULT payload length {length} does not match {shots}x{width}")
    if end > len(payload):
        raise ProtocolError("RESULT payload shorter than its shot table")
    if width == 0:
        return ShotTable(qrank, tuple("" for _ in range(shots)), shots)
    packed = np.frombuffer(payload, dtype=np.uint8, count=shots * row, offset=start)
    rows = np.unpackbits(packed.reshape(shots, row), axis=1)[:, :width] + ord("0")
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    return ShotTable(qrank, tuple(r.tobytes().decode("ascii") for r in rows), shots)


def encode_ack(status: int = 0, text: str = "") -> bytes:
    if status == 0:
        return U8.pack(0)
    raw = text.encode("utf-8")
    return U8.pack(status) + U32.pack(len(raw)) + raw


def decode_ack(payload: bytes) -> tuple[int, str]:
    try:
        (status,) = U8.unpack_from(payload, 0)
        if status == 0:
            return 0, ""
        (n,) = U32.unpack_from(payload, 1)
    except struct.error as e:
        raise ProtocolError(f"truncated ACK payload: {e}") from e
    return status, bytes(payload[5 : 5 + n]).decode("utf-8", errors="replace")


def encode_u32(value: int) -> bytes:
    return U32.pack(value)


def decode_u32(payload: bytes) -> int:
    try:
        return U32.unpack(payload)[0]
    except struct.error as e:
        raise ProtocolError(f"expected u32 payload, got {len(payload)} bytes") from e


def encode_u64(value: int) -> bytes:
    return U64.pack(value)


def decode_u64(payload: bytes) -> int:
    try:
        return U64.unpack(payload)[0]
    except struct.error as e:
        raise ProtocolError(f"expected u64 payload, got {len(payload)} bytes") from e


def encode_tables(tables: list[ShotTable]) -> bytes:
    parts = [U16.pack(len(tables))]
    for t in tables:
        parts.append(U32.pack(t.qrank))
        parts.append(encode_result(t))
    return b"".join(parts)


def decode_tables(payload: bytes) -> list[ShotTable]:
    try:
        (count,) = U16.unpack_from(payload, 0)
        off = U16.size
        out = []
        for _ in range(count):
            (qrank,) = U32.unpack_from(payload, off)
            off += U32.size
            size = result_size(payload, off)
            out.append(decode_result(payload, qrank, off, size))
            off += size
    except struct.error as e:
        raise ProtocolError(f"truncated gathered tables: {e}") from e
    if off != len(payload):
        raise ProtocolError(f"{len(payload) - off} trailing bytes after gathered tables")
    return out
