#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: launcher.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Single-host job launcher: one monitor process per configured device plus np classical processes.

Classical children find their place through environment variables (MPIQ_RANK, MPIQ_SIZE, MPIQ_QCONFIG,
MPIQ_CLASSICAL_PORT_BASE, MPIQ_OWNS_MONITORS); rank 0 owns the monitors and shuts them down in
mpiq_finalize. The first nonzero child exit code becomes the job's exit code; survivors are terminated
together with their process trees.
"""
from __future__ import annotations

import logging
import os
import socket
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import psutil

from .domain import place_ranks, world_domain
from .errors import LaunchError, MpiqError
from .models import DeviceEntry, QuantumNodeConfig
from .monitor import SHUTDOWN_DRAIN_S
from .payloads import encode_ack
from .storage import load_qnode_config
from .transport import open_channel
from .utils import default_seed
from .wire import Envelope, MsgType

logger = logging.getLogger(__name__)

SRC_DIR = Path(__file__).resolve().parents[1]
READY_TIMEOUT_S = 15.0
TERMINATION_TIMEOUT_S = 3.0
POLL_S = 0.05


@dataclass(slots=True)
class LaunchReport:
    exit_code: int
    classical_codes: dict[int, int | None] = field(default_factory=dict)
    monitor_codes: dict[str, int | None] = field(default_factory=dict)

    @property
    def children(self) -> int:
        return len(self.classical_codes) + len(self.monitor_codes)


def child_env(extra: dict[str, str] | None = None) -> dict[str, str]:
    env = dict(os.environ)
    paths = [str(SRC_DIR)] + [p for p in env.get("PYTHONPATH", "").split(os.pathsep) if p]
    env["PYTHONPATH"] = os.pathsep.join(dict.fromkeys(paths))
    env.update(extra or {})
    return env


def monitor_command(
    entry: DeviceEntry, seed: int | None = None, delay_ms: float = 0.0, log_level: str | None = None
) -> list[str]:
    cmd = [
        sys.executable,
        "-m",
        "mpiq.monitor",
        "--ip",
        entry.ip,
        "--port",
        str(entry.port),
        "--device-id",
        str(entry.device_id),
        "--qubits",
        str(entry.qubit_count),
        "--delay-ms",
        str(delay_ms),
    ]
    if seed is not None:
        cmd += ["--seed", str(seed)]
    if log_level:
        cmd += ["--log-level", log_level]
    return cmd


def check_ports(endpoints: list[tuple[str, int]]) -> None:
    for ip, port in endpoints:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        try:
            sock.bind((ip, port))
        except OSError as e:
            raise LaunchError(f"port {port} on {ip} is in use ({e.strerror or e})") from e
        finally:
            sock.close()


def terminate_tree(procs: list[subprocess.Popen], timeout: float = TERMINATION_TIMEOUT_S) -> None:
    """terminate(), wait, then kill() every live process and its descendants."""
    targets: set[psutil.Process] = set()
    for p in procs:
        if p.poll() is not None:
            continue
        try:
            root = psutil.Process(p.pid)
            targets.add(root)
            targets.update(root.children(recursive=True))
        except psutil.NoSuchProcess:
            continue
    if not targets:
        return
    for t in targets:
        try:
            t.terminate()
        except psutil.NoSuchProcess:
            pass
    _, alive = psutil.wait_procs(list(targets), timeout=timeout)
    for t in alive:
        logger.warning("process %d ignored terminate, killing", t.pid)
        try:
            t.kill()
        except psutil.NoSuchProcess:
            pass
    psutil.wait_procs(alive, timeout=timeout)
    for p in procs:
        try:
            p.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            pass


class MonitorFleet:
    """Monitor subprocesses for every device of a configuration."""

    def __init__(
        self,
        config: QuantumNodeConfig,
        *,
        seed: int | None = None,
        delay_ms: float = 0.0,
        log_level: str | None = None,
    ):
        self.config = config
        self.seed = seed
        self.delay_ms = delay_ms
        self.log_level = log_level
        self.procs: dict[str, subprocess.Popen] = {}

    def start(self, ready_timeout_s: float = READY_TIMEOUT_S) -> MonitorFleet:
        check_ports([(d.ip, d.port) for d in self.config.devices])
        env = child_env()
        for d in self.config.devices:
            cmd = monitor_command(d, self.seed, self.delay_ms, self.log_level)
            self.procs[str(d.identifier)] = subprocess.Popen(cmd, env=env)
            logger.debug("spawned monitor %s pid=%d", d.identifier, self.procs[str(d.identifier)].pid)
        try:
            self.wait_ready(ready_timeout_s)
        except LaunchError:
            self.kill()
            raise
        logger.info("%d monitor(s) up", len(self.procs))
        return self

    def wait_ready(self, timeout_s: float) -> None:
        deadline = time.monotonic() + timeout_s
        pending = {str(d.identifier): d for d in self.config.devices}
        while pending:
            for name, d in list(pending.items()):
                code = self.procs[name].poll()
                if code is not None:
                    raise LaunchError(f"monitor {name} exited with code {code} during startup")
                try:
                    with socket.create_connection((d.ip, d.port), timeout=0.2):
                        del pending[name]
                except OSError:
                    pass
            if pending and time.monotonic() >= deadline:
                raise LaunchError(f"monitor(s) not listening after {timeout_s:.0f} s: {sorted(pending)}")
            if pending:
                time.sleep(POLL_S)

    def shutdown(self, timeout_s: float = SHUTDOWN_DRAIN_S + 5) -> dict[str, int | None]:
        """SHUTDOWN every monitor still running, then collect exit codes."""
        for d in self.config.devices:
            proc = self.procs.get(str(d.identifier))
            if proc is None or proc.poll() is not None:
                continue
            try:
                ch = open_channel(d.identifier, 2000, allow_local=False)
                try:
                    ch.send_frame(Envelope(MsgType.SHUTDOWN, 0, 0, 0), b"")
                    frame = ch.recv_frame(int(timeout_s * 1000))
                    if frame.payload != encode_ack():
                        logger.warning("monitor %s answered shutdown with %r", d.identifier, frame.payload)
                finally:
                    ch.close()
            except MpiqError as e:
                logger.warning("shutdown of %s failed: %s", d.identifier, e)
        codes: dict[str, int | None] = {}
        for name, proc in self.procs.items():
            try:
                codes[name] = proc.wait(timeout=TERMINATION_TIMEOUT_S)
            except subprocess.TimeoutExpired:
                codes[name] = None
        self.kill()
        return codes

    def kill(self) -> None:
        terminate_tree(list(self.procs.values()))

    def __enter__(self) -> MonitorFleet:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.shutdown()


def spawn_monitors(config: QuantumNodeConfig, **kwargs) -> MonitorFleet:
    """Context manager form: `with spawn_monitors(cfg, delay_ms=200) as fleet: ...`."""
    return MonitorFleet(config, **kwargs)


def launch(
    np_classical: int,
    config_path: str | Path,
    program_args: list[str],
    *,
    seed: int | None = None,
    classical_port_base: int = 7500,
    monitor_delay_ms: float = 0.0,
    log_level: str | None = None,
) -> LaunchReport:
    if np_classical < 1:
        raise LaunchError(f"--np must be >= 1, got {np_classical}")
    if not program_args:
        raise LaunchError("no program to launch")
    config_path = Path(config_path).resolve()
    config = load_qnode_config(config_path)
    classical_ports = [("127.0.0.1", classical_port_base + r) for r in range(np_classical)]
    check_ports([(d.ip, d.port) for d in config.devices] + classical_ports)

    # ranks must agree on the seed: it decides which port each rank listens on
    rank_seed = default_seed() if seed is None else seed
    placement = place_ranks(world_domain(np_classical, config).topology, rank_seed)
    logger.info(
        "classical placement (rank -> port): %s",
        {r: classical_port_base + s for r, s in enumerate(placement)},
    )

    fleet = MonitorFleet(config, seed=seed, delay_ms=monitor_delay_ms, log_level=log_level).start()
    ranks: dict[int, subprocess.Popen] = {}
    report = LaunchReport(exit_code=0)
    try:
        for r in range(np_classical):
            extra = {
                "MPIQ_RANK": str(r),
                "MPIQ_SIZE": str(np_classical),
                "MPIQ_QCONFIG": str(config_path),
                "MPIQ_CLASSICAL_PORT_BASE": str(classical_port_base),
                "MPIQ_OWNS_MONITORS": "1" if r == 0 else "0",
                "MPIQ_SEED": str(rank_seed),
                "MPIQ_MONITOR_DELAY_MS": str(monitor_delay_ms),
            }
            if log_level:
                extra["MPIQ_LOG_LEVEL"] = log_level
            ranks[r] = subprocess.Popen(program_args, env=child_env(extra))
        logger.info("launched %d classical rank(s), %d monitor(s)", np_classical, len(fleet.procs))

        running = dict(ranks)
        while running:
            for r, proc in list(running.items()):
                code = proc.poll()
                if code is None:
                    continue
                del running[r]
                report.classical_codes[r] = code
                logger.info("rank %d exited with code %d", r, code)
                if code != 0 and report.exit_code == 0:
                    report.exit_code = code
                    logger.error("rank %d failed; terminating the job", r)
                    terminate_tree(list(running.values()))
            time.sleep(POLL_S)
    finally:
        for r, proc in ranks.items():
            if r not in report.classical_codes:
                terminate_tree([proc])
                report.classical_codes[r] = proc.poll()
        report.monitor_codes = fleet.shutdown()

    if report.exit_code == 0:
        for name, code in report.monitor_codes.items():
            if code:
                logger.error("monitor %s exited with code %s", name, code)
                report.exit_code = code
                break
    return report
