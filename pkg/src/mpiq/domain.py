#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: domain.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
The heterogeneous hybrid communication domain: process group (ranks + qranks), context identifiers and the
virtual-processor topology, together with the two virtual-to-physical mappings:

- classical slots: seeded random adaptive allocation under a capacity predicate;
- quantum entries: strict fixed binding qrank <-> {IP, device_id}, in configuration-file order.

Usage:
registry = ContextRegistry()
dom = create_hybrid_domain(1, config, WORLD_CONTEXT, registry)
dev = map_quantum(dom, 0)
"""
from __future__ import annotations

import logging
import random
import threading

from .errors import AddressError, AllocationError, RangeError, ResourceError
from .models import (
    U32_MAX,
    WORLD_CONTEXT,
    ClassicalSlot,
    ContextId,
    DeviceIdentifier,
    HybridDomain,
    ProcessGroup,
    QuantumNodeConfig,
    QuantumVP,
    VirtualTopology,
)
from .utils import mix64

logger = logging.getLogger(__name__)


class ContextRegistry:
    """Hands out context ids for one launch. 0 is the world; ids are never reused."""

    def __init__(self, limit: int = U32_MAX):
        self._limit = limit
        self._next = 1
        self._live: set[int] = {WORLD_CONTEXT.value}
        self._log: list[int] = []
        self._lock = threading.Lock()

    @property
    def world(self) -> ContextId:
        return WORLD_CONTEXT

    @property
    def allocation_log(self) -> list[int]:
        return list(self._log)

    def exists(self, ctx: ContextId) -> bool:
        return ctx.value in self._live

    def allocate(self) -> ContextId:
        with self._lock:
            if self._next > self._limit:
                raise ResourceError("context id space exhausted")
            value = self._next
            self._next += 1
            self._live.add(value)
            self._log.append(value)
        return ContextId(value)

    def adopt(self, ctx: ContextId) -> None:
        """Register an id allocated by another rank's registry."""
        with self._lock:
            if ctx.value in self._live:
                raise ResourceError(f"context {ctx.value} is already live")
            if ctx.value < self._next:
                raise ResourceError(f"context {ctx.value} was already used in this launch")
            self._next = ctx.value + 1
            self._live.add(ctx.value)
            self._log.append(ctx.value)

    def free(self, ctx: ContextId) -> None:
        if ctx == WORLD_CONTEXT:
            return
        with self._lock:
            self._live.discard(ctx.value)


def allocate_context_id(registry: ContextRegistry) -> ContextId:
    return registry.allocate()


def _build_domain(
    context: ContextId, classical_count: int, config: QuantumNodeConfig, slot_capacity: int
) -> HybridDomain:
    if classical_count < 1:
        raise RangeError(f"classical_count must be >= 1, got {classical_count}")
    if slot_capacity < 1:
        raise RangeError(f"slot_capacity must be >= 1, got {slot_capacity}")
    config.validate()
    qvps = tuple(
        QuantumVP(vp_id=i, device=d.identifier, qubit_count=d.qubit_count)
        for i, d in enumerate(config.devices)
    )
    q_map = {vp.vp_id: vp.device for vp in qvps}
    q_rev = {vp.device.key: vp.vp_id for vp in qvps}
    topo = VirtualTopology(
        classical_vps=[ClassicalSlot(slot_id=r, capacity=slot_capacity) for r in range(classical_count)],
        quantum_vps=qvps,
    )
    dom = HybridDomain(
        context=context,
        group=ProcessGroup(tuple(range(classical_count)), tuple(range(len(qvps)))),
        topology=topo,
        q_map=q_map,
        q_rev=q_rev,
    )
    logger.debug(
        "domain ctx=%d ranks=%d qranks=%d", context.value, classical_count, len(qvps)
    )
    return dom


def world_domain(
    classical_count: int, config: QuantumNodeConfig, slot_capacity: int = 1
) -> HybridDomain:
    return _build_domain(WORLD_CONTEXT, classical_count, config, slot_capacity)


def create_hybrid_domain(
    classical_count: int,
    qnode_config: QuantumNodeConfig,
    parent_context: ContextId,
    registry: ContextRegistry,
    slot_capacity: int = 1,
) -> HybridDomain:
    if not registry.exists(parent_context):
        raise ResourceError(f"parent context {parent_context.value} is not live")
    qnode_config.validate()
    ctx = registry.allocate()
    return _build_domain(ctx, classical_count, qnode_config, slot_capacity)


def join_hybrid_domain(
    context: ContextId,
    classical_count: int,
    qnode_config: QuantumNodeConfig,
    registry: ContextRegistry,
    slot_capacity: int = 1,
) -> HybridDomain:
    """Same as create_hybrid_domain, for a context id allocated elsewhere (by rank 0)."""
    qnode_config.validate()
    registry.adopt(context)
    return _build_domain(context, classical_count, qnode_config, slot_capacity)


def map_classical(topology: VirtualTopology, demand: int, rng_seed: int) -> int:
    """Try slots in seeded random order without replacement; take the first that fits."""
    if demand < 0:
        raise RangeError(f"demand must be >= 0, got {demand}")
    if not topology.classical_vps:
        raise AllocationError("topology has no classical slots")
    order = list(range(len(topology.classical_vps)))
    random.Random(rng_seed).shuffle(order)
    with topology.guard:
        for idx in order:
            slot = topology.classical_vps[idx]
            if slot.load + demand <= slot.capacity:
                slot.load += demand
                return slot.slot_id
    raise AllocationError(
        f"no classical slot can take demand {demand} ({len(order)} tried)"
    )


def release_classical(topology: VirtualTopology, slot_id: int, demand: int) -> None:
    with topology.guard:
        for slot in topology.classical_vps:
            if slot.slot_id == slot_id:
                slot.load = max(0, slot.load - demand)
                return
    raise AddressError(f"unknown classical slot {slot_id}")


def place_ranks(topology: VirtualTopology, seed: int) -> tuple[int, ...]:
    """Slot of each classical rank, one load unit per rank, in rank order.

    Every rank of a world computes the same placement from the shared seed, so no exchange is needed
    to find a peer's listening port.
    """
    return tuple(
        map_classical(topology, 1, mix64(seed, rank)) for rank in range(len(topology.classical_vps))
    )


def map_quantum(domain: HybridDomain, qrank: int) -> DeviceIdentifier:
    try:
        return domain.q_map[qrank]
    except (KeyError, TypeError):
        raise AddressError(f"unknown qrank {qrank} (domain has {domain.qsize})") from None


def resolve_qrank(domain: HybridDomain, dev: DeviceIdentifier) -> int:
    try:
        return domain.q_rev[dev.key]
    except KeyError:
        raise AddressError(f"device {dev} is not registered in context {domain.context.value}") from None
