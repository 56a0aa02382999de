#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: runtime.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Initialization and finalization of the hybrid environment.

mpiq_init() builds the world domain from the quantum node configuration, opens one link per monitor,
verifies each with a PING/PONG exchange (which doubles as the first clock-offset measurement) and, when
there is more than one classical rank, starts the rank's classical listener on base + rank.

Notes:
- Classical ranks all live on the loopback address; multi-host launching is out of scope.
- Reserved tags (>= 0xFFFFFF00) are used by the runtime's own classical traffic.
"""
from __future__ import annotations

import itertools
import logging
import os
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import payloads
from .domain import (
    ContextRegistry,
    create_hybrid_domain,
    join_hybrid_domain,
    map_quantum,
    place_ranks,
    world_domain,
)
from .endpoint import ClassicalPost, MonitorLink
from .errors import (
    AddressError,
    ConfigError,
    ConnectError,
    InitError,
    MpiqError,
    MpiqTimeoutError,
    RangeError,
    StateError,
)
from .messaging import classical_recv, classical_send
from .models import ContextId, HybridDomain, QuantumNodeConfig, Role
from .monitor import SHUTDOWN_DRAIN_S, MonitorServer
from .storage import load_qnode_config
from .sync import classical_barrier, estimate_clock_offset
from .transport import Channel, Listener, open_channel
from .utils import default_seed, default_timeout_ms, env_int, mix64
from .wire import Envelope, MsgType

logger = logging.getLogger(__name__)

CLASSICAL_IP = "127.0.0.1"
DEFAULT_CLASSICAL_PORT_BASE = 7500
FINALIZE_BARRIER_MS = 60_000
RESERVED_TAG_BASE = 0xFFFFFF00
DOMAIN_TAG = 0xFFFFFFF3


@dataclass(eq=False)
class RuntimeHandle:
    world: HybridDomain
    my_rank: int
    role: Role
    config: QuantumNodeConfig
    registry: ContextRegistry
    rng_seed: int
    timeout_ms: int
    links: dict[int, MonitorLink] = field(default_factory=dict)
    classical_port_base: int = DEFAULT_CLASSICAL_PORT_BASE
    owns_monitors: bool = False
    allow_local: bool = True
    post: ClassicalPost | None = None
    listener: Listener | None = None
    monitor: MonitorServer | None = None
    peers: dict[int, Channel] = field(default_factory=dict)
    slots: tuple[int, ...] = ()
    members: tuple[int, ...] = ()
    parent: RuntimeHandle | None = None
    alive: bool = True
    _peer_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _tags: itertools.count = field(default_factory=lambda: itertools.count(1), repr=False)
    _tag_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def context(self) -> int:
        return self.world.context.value

    @property
    def size(self) -> int:
        return self.world.size

    def check_live(self) -> None:
        if not self.alive:
            raise StateError("runtime handle has been finalized")

    def link(self, qrank: int) -> MonitorLink:
        self.check_live()
        try:
            return self.links[qrank]
        except KeyError:
            raise AddressError(f"no monitor link for qrank {qrank}") from None

    def next_tag(self, count: int = 1) -> int:
        """Reserve `count` consecutive internal tags and return the first."""
        with self._tag_lock:
            first = next(self._tags)
            for _ in range(count - 1):
                next(self._tags)
        return first % RESERVED_TAG_BASE

    def world_rank(self, rank: int) -> int:
        """World rank of a rank of this domain."""
        return self.members[rank] if self.members else rank

    @property
    def slot_id(self) -> int:
        return self.slots[self.world_rank(self.my_rank)]

    def classical_endpoint(self, rank: int) -> tuple[str, int]:
        return (CLASSICAL_IP, self.classical_port_base + self.slots[self.world_rank(rank)])

    def peer_channel(self, rank: int) -> Channel:
        """Outgoing channel to another classical rank, opened on first use."""
        with self._peer_lock:
            ch = self.peers.get(rank)
            if ch is not None and not ch.closed:
                return ch
            deadline = time.monotonic() + self.timeout_ms / 1000.0
            while True:
                try:
                    ch = open_channel(
                        self.classical_endpoint(rank), self.timeout_ms, allow_local=self.allow_local
                    )
                    break
                except ConnectError:
                    # the peer may not have reached mpiq_init yet
                    if time.monotonic() >= deadline:
                        raise MpiqTimeoutError(
                            f"classical rank {rank} not reachable within {self.timeout_ms} ms"
                        ) from None
                    time.sleep(0.05)
            self.peers[rank] = ch
            return ch


def _resolve_config(config: QuantumNodeConfig | str | Path) -> QuantumNodeConfig:
    if isinstance(config, QuantumNodeConfig):
        config.validate()
        return config
    return load_qnode_config(Path(config))


def _connect_monitors(handle: RuntimeHandle) -> None:
    failed = []
    reasons: dict[str, str] = {}
    for qrank, dev in sorted(handle.world.q_map.items()):
        try:
            ch = open_channel(dev, handle.timeout_ms, allow_local=handle.allow_local)
        except (ConnectError, MpiqTimeoutError) as e:
            failed.append(dev)
            reasons[str(dev)] = str(e)
            continue
        link = MonitorLink(dev, qrank, ch, handle.context)
        handle.links[qrank] = link
        try:
            link.offset = estimate_clock_offset(handle, link)
        except MpiqError as e:
            failed.append(dev)
            reasons[str(dev)] = str(e)
    if failed:
        for link in handle.links.values():
            link.close()
        handle.links.clear()
        for dev in failed:
            logger.error("monitor %s unreachable: %s", dev, reasons[str(dev)])
        raise InitError(failed, reasons)


def mpiq_init(
    config: QuantumNodeConfig | str | Path,
    role: Role | str = Role.CLASSICAL,
    my_rank: int = 0,
    *,
    size: int = 1,
    classical_port_base: int = DEFAULT_CLASSICAL_PORT_BASE,
    timeout_ms: int | None = None,
    seed: int | None = None,
    owns_monitors: bool = False,
    allow_local: bool = True,
    registry: ContextRegistry | None = None,
) -> RuntimeHandle:
    role = Role(role)
    cfg = _resolve_config(config)
    registry = registry or ContextRegistry()
    seed = default_seed() if seed is None else seed

    if role is Role.MONITOR:
        if not 0 <= my_rank < len(cfg.devices):
            raise ConfigError(f"monitor rank {my_rank} has no device entry", "devices")
        world = world_domain(1, cfg)
        server = MonitorServer(cfg.devices[my_rank], seed=seed).start()
        return RuntimeHandle(
            world=world,
            my_rank=my_rank,
            role=role,
            config=cfg,
            registry=registry,
            rng_seed=seed,
            timeout_ms=timeout_ms or default_timeout_ms(),
            monitor=server,
        )

    if not 0 <= my_rank < size:
        raise ConfigError(f"rank {my_rank} outside world of size {size}", "my_rank")
    world = world_domain(size, cfg)
    slots = place_ranks(world.topology, seed)
    handle = RuntimeHandle(
        world=world,
        my_rank=my_rank,
        role=role,
        config=cfg,
        registry=registry,
        rng_seed=seed,
        timeout_ms=timeout_ms or default_timeout_ms(),
        classical_port_base=classical_port_base,
        owns_monitors=owns_monitors,
        allow_local=allow_local,
        post=ClassicalPost(world.context.value),
        slots=slots,
    )
    if size > 1:
        handle.listener = Listener(
            *handle.classical_endpoint(my_rank),
            handle.post.attach,
            name=f"rank-{my_rank}",
        ).start()
    try:
        _connect_monitors(handle)
    except MpiqError:
        _close(handle)
        raise
    logger.info(
        "rank %d/%d initialized with %d monitor(s)", my_rank, size, len(handle.links)
    )
    return handle


def mpiq_domain_create(
    handle: RuntimeHandle,
    ranks: Sequence[int] | None = None,
    qranks: Sequence[int] | None = None,
    *,
    timeout_ms: int | None = None,
) -> RuntimeHandle | None:
    """Carve a sub-domain out of `handle`'s domain; collective over all of its classical ranks.

    Rank 0 allocates the context id and sends it to every other rank. Members get a handle whose ranks
    and qranks are renumbered from 0 in the order given; its frames carry the new context and frames of
    any other context never reach it. Non-members get None.
    """
    handle.check_live()
    if handle.role is not Role.CLASSICAL:
        raise StateError("only classical ranks create domains")
    members = tuple(range(handle.size)) if ranks is None else tuple(ranks)
    chosen = tuple(sorted(handle.world.q_map)) if qranks is None else tuple(qranks)
    if not members:
        raise RangeError("a domain needs at least one classical rank")
    if len(set(members)) != len(members) or len(set(chosen)) != len(chosen):
        raise RangeError("ranks and qranks must be duplicate-free")
    for r in members:
        if r not in handle.world.group.classical_ranks:
            raise AddressError(f"unknown classical rank {r} (domain size {handle.size})")
    for q in chosen:
        map_quantum(handle.world, q)
    sub_cfg = replace(handle.config, devices=[handle.config.devices[q] for q in chosen])
    timeout_ms = timeout_ms or handle.timeout_ms

    if handle.my_rank == 0:
        domain = create_hybrid_domain(len(members), sub_cfg, handle.world.context, handle.registry)
        for r in range(1, handle.size):
            classical_send(handle, r, DOMAIN_TAG, payloads.encode_u32(domain.context.value))
    else:
        raw = classical_recv(handle, 0, DOMAIN_TAG, timeout_ms=timeout_ms)
        domain = join_hybrid_domain(
            ContextId(payloads.decode_u32(raw)), len(members), sub_cfg, handle.registry
        )
    member = handle.my_rank in members
    if member:
        assert handle.post is not None
        handle.post.open_context(domain.context.value)
    # nobody talks in the new context before every member listens on it
    classical_barrier(handle, timeout_ms)
    if not member:
        handle.registry.free(domain.context)
        return None

    sub = RuntimeHandle(
        world=domain,
        my_rank=members.index(handle.my_rank),
        role=handle.role,
        config=sub_cfg,
        registry=handle.registry,
        rng_seed=mix64(handle.rng_seed, domain.context.value),
        timeout_ms=handle.timeout_ms,
        classical_port_base=handle.classical_port_base,
        allow_local=handle.allow_local,
        post=handle.post,
        slots=handle.slots,
        members=tuple(handle.world_rank(r) for r in members),
        parent=handle,
    )
    try:
        _connect_monitors(sub)
    except MpiqError:
        _close(sub)
        raise
    logger.info(
        "rank %d joined context %d as rank %d/%d with %d monitor(s)",
        handle.my_rank,
        sub.context,
        sub.my_rank,
        sub.size,
        len(sub.links),
    )
    return sub


def _shutdown_monitors(handle: RuntimeHandle) -> None:
    wait_ms = int((SHUTDOWN_DRAIN_S + 5) * 1000)
    for qrank, link in sorted(handle.links.items()):
        env = Envelope(MsgType.SHUTDOWN, handle.context, handle.my_rank, qrank, handle.next_tag())
        try:
            frame = link.request(env, b"", MsgType.ACK, wait_ms)
            status, text = payloads.decode_ack(frame.payload)
            if status:
                logger.warning("monitor %s refused shutdown: %s", link.device, text)
        except MpiqError as e:
            logger.warning("shutdown of monitor %s not acknowledged: %s", link.device, e)


def _close(handle: RuntimeHandle) -> None:
    for link in handle.links.values():
        link.close()
    for ch in handle.peers.values():
        ch.close()
    if handle.listener is not None:
        handle.listener.close()
    if handle.post is None:
        return
    if handle.parent is None:
        handle.post.close()
    else:
        # the inbox belongs to the parent
        handle.post.close_context(handle.context)
        handle.registry.free(handle.world.context)


def mpiq_finalize(handle: RuntimeHandle) -> None:
    handle.check_live()
    if handle.role is Role.MONITOR:
        assert handle.monitor is not None
        handle.monitor.stop()
        handle.alive = False
        return
    if handle.size > 1:
        try:
            classical_barrier(handle, max(handle.timeout_ms, FINALIZE_BARRIER_MS))
        except MpiqError as e:
            logger.warning("rank %d: finalize barrier failed: %s", handle.my_rank, e)
    if handle.owns_monitors:
        _shutdown_monitors(handle)
    _close(handle)
    handle.alive = False
    logger.info("rank %d finalized", handle.my_rank)


def init_from_env(**overrides) -> RuntimeHandle:
    """Build a classical handle from the variables mpiq-launch exports to its children."""
    qconfig = os.environ.get("MPIQ_QCONFIG")
    if not qconfig:
        raise ConfigError("not set; run the program under mpiq-launch", "MPIQ_QCONFIG")
    kwargs = dict(
        size=env_int("MPIQ_SIZE", 1),
        classical_port_base=env_int("MPIQ_CLASSICAL_PORT_BASE", DEFAULT_CLASSICAL_PORT_BASE),
        owns_monitors=env_int("MPIQ_OWNS_MONITORS", 0) == 1,
    )
    kwargs.update(overrides)
    return mpiq_init(qconfig, Role.CLASSICAL, env_int("MPIQ_RANK", 0), **kwargs)


def under_launcher() -> bool:
    return bool(os.environ.get("MPIQ_QCONFIG"))
