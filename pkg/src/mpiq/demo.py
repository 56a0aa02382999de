#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: demo.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Distributed GHZ demo, meant to run under mpiq-launch.

Rank 0 cuts the circuit, scatters one fragment per monitor (staged), and releases the monitors with a
QQ barrier. Every rank then takes part in the allgather, reconstructs the global statistics and
validates them. The exit code is 0 only if validation passed.

Usage:
mpiq-launch --np 2 --qconfig configs/loopback10.json -- python -m mpiq.demo --qubits 40 --fragments 10
"""
from __future__ import annotations

import argparse
import logging
import sys

from .collectives import build_send_q, mpiq_allgather, mpiq_scatter
from .cutting import compile_fragments, cut_equal, reconstruct, validate_ghz_output
from .errors import MpiqError, RangeError
from .models import BarrierFlag
from .runtime import init_from_env, mpiq_finalize
from .sync import mpiq_barrier
from .utils import configure_logging

logger = logging.getLogger(__name__)

DEMO_TAG = 100
GATHER_TIMEOUT_MS = 300_000


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mpiq-demo", description="Distributed GHZ demo")
    parser.add_argument("--qubits", type=int, default=40)
    parser.add_argument("--fragments", type=int, default=10)
    parser.add_argument("--shots", type=int, default=1000)
    parser.add_argument("--log-level", default=None)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    handle = None
    try:
        handle = init_from_env()
        plan = cut_equal(args.qubits, args.fragments)
        if plan.m_fragments > handle.world.qsize:
            raise RangeError(
                f"{plan.m_fragments} fragments but only {handle.world.qsize} monitor(s) configured"
            )
        qranks = list(range(plan.m_fragments))

        if handle.my_rank == 0:
            blocks = compile_fragments(plan, args.shots, [handle.config.devices[q] for q in qranks])
            mpiq_scatter(handle, blocks, build_send_q(plan.n_total, plan.sizes), tag=DEMO_TAG)
            release = mpiq_barrier(handle, BarrierFlag.QQ, monitors=qranks)
            logger.info("monitors released, spread %.3f ms", release.spread_ms)

        gathered = mpiq_allgather(handle, qranks, DEMO_TAG, timeout_ms=GATHER_TIMEOUT_MS)
        if not gathered.complete:
            print(f"rank {handle.my_rank}: missing results from qranks {gathered.missing}", file=sys.stderr)
            return 1
        summary = validate_ghz_output(reconstruct(gathered.tables, plan), plan.n_total)
        print(
            f"rank {handle.my_rank}: n={summary.n} shots={summary.shots} "
            f"P(0^n)={summary.p_zero:.3f} P(1^n)={summary.ones / summary.shots:.3f} "
            f"other={summary.other} p={summary.p_value:.3g}"
        )
        return 0 if summary.valid else 1
    except MpiqError as e:
        print(f"mpiq-demo: {e}", file=sys.stderr)
        return 2
    finally:
        if handle is not None and handle.alive:
            try:
                mpiq_finalize(handle)
            except MpiqError as e:
                logger.warning("finalize failed: %s", e)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
