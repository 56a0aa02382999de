#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: models.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Typed domain models shared by every layer: device addressing, the hybrid communication domain, the
quantum-node configuration, compiled payloads (WaveformBlock), measurement tables and benchmark rows.

Notes:
- Identity of a quantum device is the (ip, device_id) pair; the port is where its monitor listens.
- Bitstrings use the project-wide convention: leftmost character is qubit 0.
"""
from __future__ import annotations

import threading
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import Any

from .errors import ConfigError, RangeError
from .utils import digest64

MAX_QUBITS = 26
U32_MAX = (1 << 32) - 1


@dataclass(frozen=True, slots=True)
class DeviceIdentifier:
    ip: str
    port: int
    device_id: int

    @property
    def key(self) -> tuple[str, int]:
        return (self.ip, self.device_id)

    def __str__(self) -> str:
        return f"{{{self.ip}, {self.device_id}}}@{self.port}"


@dataclass(frozen=True, slots=True)
class DeviceEntry:
    ip: str
    port: int
    device_id: int
    qubit_count: int
    backend: str = "statevector"

    @property
    def identifier(self) -> DeviceIdentifier:
        return DeviceIdentifier(self.ip, self.port, self.device_id)


@dataclass(slots=True)
class QuantumNodeConfig:
    devices: list[DeviceEntry] = field(default_factory=list)
    epsilon_sync_ms: float = 50.0
    margin_ms: float = 20.0
    offset_ttl_s: float = 10.0

    def validate(self) -> None:
        seen: dict[tuple[str, int], int] = {}
        ports: dict[tuple[str, int], int] = {}
        for i, d in enumerate(self.devices):
            where = f"devices[{i}]"
            if not d.ip:
                raise ConfigError("ip must be a non-empty address", f"{where}.ip")
            if not 1 <= d.port <= 65535:
                raise ConfigError(f"port {d.port} outside 1..65535", f"{where}.port")
            if d.device_id < 0:
                raise ConfigError("device_id must be non-negative", f"{where}.device_id")
            if not 1 <= d.qubit_count <= MAX_QUBITS:
                raise ConfigError(
                    f"qubit_count {d.qubit_count} outside 1..{MAX_QUBITS}", f"{where}.qubit_count"
                )
            if d.backend != "statevector":
                raise ConfigError(f"unsupported backend {d.backend!r}", f"{where}.backend")
            if (d.ip, d.device_id) in seen:
                raise ConfigError(
                    f"duplicate device {{{d.ip}, {d.device_id}}} (also devices[{seen[d.ip, d.device_id]}])",
                    f"{where}.device_id",
                )
            if (d.ip, d.port) in ports:
                raise ConfigError(
                    f"port {d.port} on {d.ip} already used by devices[{ports[d.ip, d.port]}]",
                    f"{where}.port",
                )
            seen[d.ip, d.device_id] = i
            ports[d.ip, d.port] = i
        if self.epsilon_sync_ms <= 0:
            raise ConfigError("must be positive", "epsilon_sync_ms")
        if self.margin_ms < 0:
            raise ConfigError("must be non-negative", "margin_ms")
        if self.offset_ttl_s <= 0:
            raise ConfigError("must be positive", "offset_ttl_s")

    def to_dict(self) -> dict:
        return {
            "epsilon_sync_ms": self.epsilon_sync_ms,
            "margin_ms": self.margin_ms,
            "offset_ttl_s": self.offset_ttl_s,
            "devices": [asdict(d) for d in self.devices],
        }

    @staticmethod
    def from_dict(data: Any) -> QuantumNodeConfig:
        if not isinstance(data, dict):
            raise ConfigError("top level must be an object")
        raw_devices = data.get("devices")
        if not isinstance(raw_devices, list):
            raise ConfigError("missing or not an array", "devices")
        devices = []
        for i, raw in enumerate(raw_devices):
            where = f"devices[{i}]"
            if not isinstance(raw, dict):
                raise ConfigError("must be an object", where)
            for key in ("ip", "port", "device_id", "qubit_count"):
                if key not in raw:
                    raise ConfigError("missing field", f"{where}.{key}")
            unknown = set(raw) - {"ip", "port", "device_id", "qubit_count", "backend"}
            if unknown:
                raise ConfigError(f"unknown field(s) {sorted(unknown)}", where)
            if not isinstance(raw["ip"], str):
                raise ConfigError("must be a string", f"{where}.ip")
            for key in ("port", "device_id", "qubit_count"):
                if not isinstance(raw[key], int) or isinstance(raw[key], bool):
                    raise ConfigError("must be an integer", f"{where}.{key}")
            devices.append(
                DeviceEntry(
                    ip=raw["ip"],
                    port=raw["port"],
                    device_id=raw["device_id"],
                    qubit_count=raw["qubit_count"],
                    backend=raw.get("backend", "statevector"),
                )
            )
        numbers = {}
        for key, default in (("epsilon_sync_ms", 50.0), ("margin_ms", 20.0), ("offset_ttl_s", 10.0)):
            value = data.get(key, default)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError("must be a number", key)
            numbers[key] = float(value)
        cfg = QuantumNodeConfig(devices=devices, **numbers)
        cfg.validate()
        return cfg


@dataclass(frozen=True, slots=True)
class ContextId:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= U32_MAX:
            raise RangeError(f"context id {self.value} outside u32")


WORLD_CONTEXT = ContextId(0)


class Role(str, Enum):
    CLASSICAL = "classical"
    MONITOR = "monitor"


@dataclass(frozen=True, slots=True)
class ProcessGroup:
    classical_ranks: tuple[int, ...]
    quantum_qranks: tuple[int, ...]


@dataclass(slots=True)
class ClassicalSlot:
    slot_id: int
    capacity: int
    load: int = 0


@dataclass(frozen=True, slots=True)
class QuantumVP:
    vp_id: int
    device: DeviceIdentifier
    qubit_count: int


@dataclass(slots=True)
class VirtualTopology:
    classical_vps: list[ClassicalSlot]
    quantum_vps: tuple[QuantumVP, ...]
    guard: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)


@dataclass(slots=True)
class HybridDomain:
    context: ContextId
    group: ProcessGroup
    topology: VirtualTopology
    q_map: dict[int, DeviceIdentifier]
    q_rev: dict[tuple[str, int], int]

    @property
    def size(self) -> int:
        return len(self.group.classical_ranks)

    @property
    def qsize(self) -> int:
        return len(self.group.quantum_qranks)

    def qubit_count(self, qrank: int) -> int:
        return self.topology.quantum_vps[qrank].qubit_count


@dataclass(frozen=True, slots=True)
class ChannelPayload:
    qubit_index: int
    stream: bytes


def channels_digest(channels: tuple[ChannelPayload, ...] | list[ChannelPayload]) -> int:
    parts = []
    for ch in channels:
        parts.append(ch.qubit_index.to_bytes(2, "little"))
        parts.append(len(ch.stream).to_bytes(4, "little"))
        parts.append(ch.stream)
    return digest64(*parts)


@dataclass(frozen=True, slots=True)
class WaveformBlock:
    """Pre-compiled payload for one device: node -> device -> per-qubit channel streams."""

    node_ip: str
    device_id: int
    channels: tuple[ChannelPayload, ...]
    shots: int
    circuit_digest: int

    @staticmethod
    def build(
        node_ip: str, device_id: int, channels: list[ChannelPayload], shots: int
    ) -> WaveformBlock:
        chans = tuple(channels)
        return WaveformBlock(node_ip, device_id, chans, shots, channels_digest(chans))

    def retarget(self, dev: DeviceIdentifier) -> WaveformBlock:
        return WaveformBlock(dev.ip, dev.device_id, self.channels, self.shots, self.circuit_digest)

    @property
    def qubit_indices(self) -> list[int]:
        return [c.qubit_index for c in self.channels]

    def digest_ok(self) -> bool:
        return channels_digest(self.channels) == self.circuit_digest


@dataclass(frozen=True, slots=True)
class ShotTable:
    qrank: int
    bitstrings: tuple[str, ...]
    shots: int

    @property
    def width(self) -> int:
        return len(self.bitstrings[0]) if self.bitstrings else 0

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for b in self.bitstrings:
            out[b] = out.get(b, 0) + 1
        return out


GLOBAL_QRANK = -1


@dataclass(frozen=True, slots=True)
class SendQ:
    """Qubit-to-device mapping; group i targets qrank i, list extent marks the group end."""

    groups: tuple[tuple[int, ...], ...]

    @property
    def n_qubits(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass(slots=True)
class GatherResult:
    tables: list[ShotTable]
    complete: bool
    missing: list[int] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class ClockOffset:
    peer: DeviceIdentifier
    offset_ms: float
    rtt_ms: float
    measured_at_ns: int


class BarrierFlag(IntEnum):
    CC = 0
    QQ = 2


@dataclass(frozen=True, slots=True)
class CutPlan:
    n_total: int
    m_fragments: int
    sizes: tuple[int, ...]
    boundaries: tuple[int, ...]


@dataclass(slots=True)
class BenchResult:
    n_total: int
    m_fragments: int
    nodes: int
    shots: int
    delay_ms: float
    t_serial_s: float
    t_parallel_s: float
    speedup: float
    valid: bool

    def to_row(self) -> dict:
        return asdict(self)
