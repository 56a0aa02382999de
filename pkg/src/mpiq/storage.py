#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: storage.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Local filesystem persistence: quantum-node configuration files (JSON) and benchmark result tables (CSV).
"""
from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path

from .errors import ConfigError, IoError, RangeError
from .models import BenchResult, DeviceEntry, QuantumNodeConfig

BASE_DIR = Path.cwd()
RESULTS_DIR = BASE_DIR / "results"

CSV_FIELDS = (
    "n_total",
    "m_fragments",
    "nodes",
    "shots",
    "delay_ms",
    "t_serial_s",
    "t_parallel_s",
    "speedup",
    "valid",
)


def iso_stamp() -> str:
    return datetime.now().strftime("%Y%m%d-%H%M%S")


def csv_path(name: str | None = None) -> Path:
    return RESULTS_DIR / f"{name or f'bench-{iso_stamp()}'}.csv"


def pdf_path(name: str | None = None) -> Path:
    return RESULTS_DIR / f"{name or f'bench-{iso_stamp()}'}.pdf"


# quantum node configuration


def parse_qnode_config(text: str) -> QuantumNodeConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
    return QuantumNodeConfig.from_dict(data)


def dump_qnode_config(config: QuantumNodeConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"


def load_qnode_config(path: Path) -> QuantumNodeConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror or e}") from e
    return parse_qnode_config(text)


def save_qnode_config(config: QuantumNodeConfig, path: Path) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(dump_qnode_config(config), encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write {target}: {e.strerror or e}") from e
    return target


def sample_config(
    devices: int = 10, base_port: int = 7000, qubits: int = 4, ip: str = "127.0.0.1"
) -> QuantumNodeConfig:
    cfg = QuantumNodeConfig(
        devices=[DeviceEntry(ip, base_port + i, i, qubits) for i in range(devices)]
    )
    cfg.validate()
    return cfg


# benchmark results


def emit_results(rows: list[BenchResult], path: Path) -> Path:
    if not rows:
        raise RangeError("no benchmark rows to emit")
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                d = row.to_row()
                d["valid"] = "true" if row.valid else "false"
                writer.writerow({k: d[k] for k in CSV_FIELDS})
    except OSError as e:
        raise IoError(f"cannot write {target}: {e.strerror or e}") from e
    return target


def parse_results(path: Path) -> list[BenchResult]:
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_FIELDS:
                raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
            return [
                BenchResult(
                    n_total=int(r["n_total"]),
                    m_fragments=int(r["m_fragments"]),
                    nodes=int(r["nodes"]),
                    shots=int(r["shots"]),
                    delay_ms=float(r["delay_ms"]),
                    t_serial_s=float(r["t_serial_s"]),
                    t_parallel_s=float(r["t_parallel_s"]),
                    speedup=float(r["speedup"]),
                    valid=r["valid"].strip().lower() == "true",
                )
                for r in reader
            ]
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror or e}") from e
