#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: bench.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
mpiq-ghz-bench: serial versus parallel execution of a cut GHZ workload.

- serial: every fragment goes to one monitor, send -> execute -> recv, one after another.
- parallel: scatter (staged) -> QQ barrier -> execution on all nodes -> gather -> reconstruct.
  Fragments are assigned round-robin when there are more fragments than nodes.

Timers: serial covers the dispatch loop only; parallel covers scatter through reconstruction. Monitor
startup and fragment compilation are outside both.

Usage:
mpiq-ghz-bench --qubits 40 --fragments 10 --nodes 10 --shots 1000 --delay-ms 200
mpiq-ghz-bench --sweep scalability --fragment-size 20 --node-counts 1,2,4,6,8 --csv results/scal.csv --pdf results/scal.pdf
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path

from .collectives import build_send_q, mpiq_gather, mpiq_scatter
from .cutting import compile_fragments, cut_equal, reconstruct, validate_ghz_output
from .errors import CollectiveError, MpiqError, RangeError, ReconstructionError
from .launcher import MonitorFleet
from .messaging import mpiq_recv, mpiq_send
from .models import BarrierFlag, BenchResult, ShotTable
from .pdf import build_report
from .runtime import RuntimeHandle, init_from_env, mpiq_finalize, mpiq_init, under_launcher
from .storage import csv_path, emit_results, sample_config
from .sync import mpiq_barrier
from .utils import configure_logging, default_seed, env_float

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (4, 8, 12, 16, 20)
DEFAULT_NODE_COUNTS = (1, 2, 4, 6, 8)
DEFAULT_TIMEOUT_MS = 120_000


def compute_speedup(t_serial: float, t_parallel: float) -> float:
    if t_serial <= 0 or t_parallel <= 0:
        raise RangeError(f"times must be positive, got serial={t_serial}, parallel={t_parallel}")
    return t_serial / t_parallel


def run_serial(
    handle: RuntimeHandle,
    n: int,
    m: int,
    shots: int,
    *,
    qrank: int = 0,
    timeout_ms: int | None = None,
) -> tuple[float, ShotTable]:
    """All fragments on one monitor; returns (seconds, reconstructed table)."""
    plan = cut_equal(n, m)
    entry = handle.config.devices[qrank]
    blocks = compile_fragments(plan, shots, [entry] * m)
    dev = entry.identifier
    tag = handle.next_tag(m)

    start = time.perf_counter()
    tables = []
    for i, block in enumerate(blocks):
        mpiq_send(handle, dev, tag + i, block)
        tables.append(mpiq_recv(handle, dev, tag + i, timeout_ms=timeout_ms))
    elapsed = time.perf_counter() - start
    return elapsed, reconstruct(tables, plan)


def run_parallel(
    handle: RuntimeHandle,
    n: int,
    m: int,
    nodes: int,
    shots: int,
    *,
    timeout_ms: int | None = None,
) -> tuple[float, ShotTable]:
    """Scatter over `nodes` monitors, release them together, gather and reconstruct."""
    if not 1 <= nodes <= handle.world.qsize:
        raise RangeError(f"nodes must be in 1..{handle.world.qsize}, got {nodes}")
    plan = cut_equal(n, m)
    targets = [i % nodes for i in range(m)]
    blocks = compile_fragments(plan, shots, [handle.config.devices[q] for q in targets])
    send_q = build_send_q(n, plan.sizes)
    tag = handle.next_tag(m)

    start = time.perf_counter()
    placements = mpiq_scatter(handle, blocks, send_q, tag=tag, targets=targets, width=nodes)
    mpiq_barrier(handle, BarrierFlag.QQ, monitors=sorted(set(targets)))
    results: dict[tuple[int, int], ShotTable] = {}
    for wave_tag in sorted({t for _, t in placements}):
        sources = [q for q, t in placements if t == wave_tag]
        gathered = mpiq_gather(handle, sources, wave_tag, timeout_ms=timeout_ms)
        if not gathered.complete:
            raise CollectiveError(
                "gather", {f"qrank {q}": "no result" for q in gathered.missing}
            )
        for table in gathered.tables:
            results[table.qrank, wave_tag] = table
    global_table = reconstruct([results[p] for p in placements], plan)
    elapsed = time.perf_counter() - start
    return elapsed, global_table


def bench_point(
    handle: RuntimeHandle,
    n: int,
    m: int,
    nodes: int,
    shots: int,
    *,
    delay_ms: float = 0.0,
    mode: str = "both",
    timeout_ms: int | None = None,
) -> BenchResult:
    t_serial = t_parallel = 0.0
    valid = True
    runs = []
    if mode in ("serial", "both"):
        runs.append(("serial", lambda: run_serial(handle, n, m, shots, timeout_ms=timeout_ms)))
    if mode in ("parallel", "both"):
        runs.append(("parallel", lambda: run_parallel(handle, n, m, nodes, shots, timeout_ms=timeout_ms)))
    for name, run in runs:
        try:
            seconds, table = run()
            summary = validate_ghz_output(table, n)
            ok = summary.valid
            logger.info(
                "%s n=%d m=%d nodes=%d: %.3f s, P(0^n)=%.3f, p=%.3g",
                name, n, m, nodes, seconds, summary.p_zero, summary.p_value,
            )
        except ReconstructionError as e:
            seconds, ok = 0.0, False
            logger.error("%s n=%d m=%d: %s", name, n, m, e)
        if name == "serial":
            t_serial = seconds
        else:
            t_parallel = seconds
        valid = valid and ok

    speedup = compute_speedup(t_serial, t_parallel) if mode == "both" and valid else 0.0
    row = BenchResult(
        n_total=n,
        m_fragments=m,
        nodes=nodes,
        shots=shots,
        delay_ms=delay_ms,
        t_serial_s=round(t_serial, 6),
        t_parallel_s=round(t_parallel, 6),
        speedup=round(speedup, 4),
        valid=valid,
    )
    if not valid:
        logger.error("INVALID run n=%d m=%d nodes=%d excluded from speedup reporting", n, m, nodes)
    return row


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def plan_points(args: argparse.Namespace) -> list[tuple[int, int, int]]:
    """(n_total, m_fragments, nodes) per run."""
    if args.sweep == "granularity":
        sizes = args.sizes or list(DEFAULT_SIZES)
        return [(s * args.nodes, args.nodes, args.nodes) for s in sizes]
    if args.sweep == "scalability":
        counts = args.node_counts or list(DEFAULT_NODE_COUNTS)
        return [(args.fragment_size * k, k, k) for k in counts]
    return [(args.qubits, args.fragments, args.nodes)]


def _print_rows(rows: Sequence[BenchResult]) -> None:
    print(f"{'n':>5} {'m':>4} {'nodes':>5} {'serial s':>10} {'parallel s':>11} {'speedup':>8}  valid")
    for r in rows:
        print(
            f"{r.n_total:>5} {r.m_fragments:>4} {r.nodes:>5} {r.t_serial_s:>10.3f} "
            f"{r.t_parallel_s:>11.3f} {r.speedup:>8.2f}  {'true' if r.valid else 'FALSE'}"
        )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mpiq-ghz-bench", description="GHZ cutting benchmark")
    parser.add_argument("--qubits", type=int, default=40, help="Global GHZ size n")
    parser.add_argument("--fragments", type=int, default=10, help="Fragment count m")
    parser.add_argument("--nodes", type=int, default=10, help="Monitors used in parallel mode")
    parser.add_argument("--shots", type=int, default=1000)
    parser.add_argument("--delay-ms", type=float, default=0.0, help="Injected per-fragment compute delay")
    parser.add_argument("--mode", choices=("serial", "parallel", "both"), default="both")
    parser.add_argument("--csv", type=Path, default=None, help="CSV output (default results/bench-*.csv)")
    parser.add_argument("--pdf", type=Path, default=None, help="Also render a PDF report")
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    parser.add_argument("--sweep", choices=("granularity", "scalability"), default=None)
    parser.add_argument("--sizes", type=_int_list, default=None, help="Granularity sweep sizes, e.g. 4,8,12")
    parser.add_argument("--fragment-size", type=int, default=20, help="Scalability sweep fragment size")
    parser.add_argument("--node-counts", type=_int_list, default=None, help="Scalability sweep nodes")
    parser.add_argument("--base-port", type=int, default=7000, help="First port of a self-spawned fleet")
    parser.add_argument("--qconfig", type=Path, default=None, help="Attach to running monitors instead")
    parser.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    parser.add_argument("--log-level", default=None)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    fleet: MonitorFleet | None = None
    handle: RuntimeHandle | None = None
    delay_ms = args.delay_ms
    try:
        points = plan_points(args)
        if under_launcher():
            handle = init_from_env(timeout_ms=args.timeout_ms)
            if handle.my_rank != 0:
                return 0
            # the launcher configured the monitors; --delay-ms cannot change them
            delay_ms = env_float("MPIQ_MONITOR_DELAY_MS", 0.0)
            if args.delay_ms and args.delay_ms != delay_ms:
                logger.warning(
                    "--delay-ms %.1f ignored, monitors run with %.1f ms", args.delay_ms, delay_ms
                )
        elif args.qconfig is not None:
            handle = mpiq_init(args.qconfig, timeout_ms=args.timeout_ms)
        else:
            devices = max(k for _, _, k in points)
            qubits = max(-(-n // m) for n, m, _ in points)
            cfg = sample_config(devices=devices, base_port=args.base_port, qubits=qubits)
            seed = default_seed() if args.seed is None else args.seed
            fleet = MonitorFleet(cfg, seed=seed, delay_ms=args.delay_ms, log_level=args.log_level).start()
            handle = mpiq_init(cfg, timeout_ms=args.timeout_ms, seed=seed, owns_monitors=True)

        rows = [
            bench_point(
                handle,
                n,
                m,
                k,
                args.shots,
                delay_ms=delay_ms,
                mode=args.mode,
                timeout_ms=args.timeout_ms,
            )
            for n, m, k in points
        ]
        _print_rows(rows)
        out = emit_results(rows, args.csv or csv_path())
        print(f"CSV written to {out}")
        if args.pdf is not None:
            print(f"PDF written to {build_report(rows, args.pdf)}")
        return 0 if all(r.valid for r in rows) else 1
    except MpiqError as e:
        print(f"mpiq-ghz-bench: {e}", file=sys.stderr)
        return 2
    finally:
        if handle is not None and handle.alive:
            try:
                mpiq_finalize(handle)
            except MpiqError as e:
                logger.warning("finalize failed: %s", e)
        if fleet is not None:
            fleet.shutdown()


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
