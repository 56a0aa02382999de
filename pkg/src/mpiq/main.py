#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: main.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
mpiq-launch: runs a classical program on np ranks against a fleet of freshly spawned monitors.
Also provides a --sample-config helper.

Usage:
mpiq-launch --np 1 --qconfig configs/loopback10.json -- python -m mpiq.demo --qubits 40 --fragments 10
mpiq-launch --sample-config configs/loopback10.json --devices 10
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import MpiqError
from .launcher import launch
from .storage import sample_config, save_qnode_config
from .utils import configure_logging

SAMPLE_CONFIG_PATH = Path("configs") / "loopback10.json"


def _seed(text: str) -> int:
    return int(text, 0)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mpiq-launch", description="Hybrid job launcher")
    parser.add_argument("--np", type=int, default=1, dest="np_classical", help="Classical ranks")
    parser.add_argument("--qconfig", type=Path, help="Quantum node configuration (JSON)")
    parser.add_argument("--seed", type=_seed, default=None, help="Seed for monitors and ranks")
    parser.add_argument("--classical-port-base", type=int, default=7500)
    parser.add_argument("--monitor-delay-ms", type=float, default=0.0, help="Injected compute delay")
    parser.add_argument("--log-level", default=None)
    parser.add_argument(
        "--sample-config",
        nargs="?",
        const=SAMPLE_CONFIG_PATH,
        type=Path,
        default=None,
        help="Write a loopback configuration and exit",
    )
    parser.add_argument("--devices", type=int, default=10, help="Devices in the sample configuration")
    parser.add_argument("--base-port", type=int, default=7000)
    parser.add_argument("--qubits", type=int, default=4)
    parser.add_argument("program", nargs=argparse.REMAINDER, help="-- program [args...]")
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.sample_config is not None:
            cfg = sample_config(args.devices, args.base_port, args.qubits)
            path = save_qnode_config(cfg, args.sample_config)
            print(json.dumps({"sample_config": str(path), "devices": len(cfg.devices)}, indent=2))
            return 0

        program = list(args.program)
        if program and program[0] == "--":
            program = program[1:]
        if args.qconfig is None:
            parser.error("--qconfig is required")
        report = launch(
            args.np_classical,
            args.qconfig,
            program,
            seed=args.seed,
            classical_port_base=args.classical_port_base,
            monitor_delay_ms=args.monitor_delay_ms,
            log_level=args.log_level,
        )
        return report.exit_code
    except MpiqError as e:
        print(f"mpiq-launch: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
