#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: utils.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Helper utilities: safe env-var parsing, logging setup, 64-bit digests and seed mixing, address checks,
and number formatting for reports.
"""
from __future__ import annotations

import hashlib
import ipaddress
import logging
import os
import socket

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 5000
DEFAULT_SEED = 0x5EED
MASK64 = (1 << 64) - 1
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw.strip(), 0)
    except ValueError:
        logger.warning("ignoring invalid %s=%r, using %d", name, raw, default)
        return default


def env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw.strip())
    except ValueError:
        logger.warning("ignoring invalid %s=%r, using %s", name, raw, default)
        return default


def default_timeout_ms() -> int:
    value = env_int("MPIQ_TIMEOUT_MS", DEFAULT_TIMEOUT_MS)
    return value if value > 0 else DEFAULT_TIMEOUT_MS


def default_seed() -> int:
    return env_int("MPIQ_SEED", DEFAULT_SEED) & MASK64


def configure_logging(level: str | None = None) -> None:
    name = (level or os.environ.get("MPIQ_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(level=getattr(logging, name, logging.INFO), format=LOG_FORMAT)


def digest64(*chunks: bytes) -> int:
    h = hashlib.blake2b(digest_size=8)
    for c in chunks:
        h.update(c)
    return int.from_bytes(h.digest(), "little")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(*values: int) -> int:
    """Fold integers into one decorrelated 64-bit seed (order-sensitive)."""
    acc = 0
    for v in values:
        acc = _splitmix64(acc ^ (v & MASK64))
    return acc


def is_loopback(ip: str) -> bool:
    try:
        if ipaddress.ip_address(ip).is_loopback:
            return True
    except ValueError:
        return False
    try:
        return ip in socket.gethostbyname_ex(socket.gethostname())[2]
    except OSError:
        return False


def format_seconds(value: float, ndigits: int = 2) -> str:
    return f"{value:,.{ndigits}f} s"


