#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: errors.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
Exception hierarchy. Everything raised on purpose by the runtime derives from MpiqError; classes that
match a builtin category also inherit it so callers may catch e.g. TimeoutError.
"""
from __future__ import annotations

from typing import Iterable


class MpiqError(Exception):
    """Base class for runtime errors."""


# configuration / domain
class ConfigError(MpiqError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ResourceError(MpiqError):
    pass


class AllocationError(MpiqError):
    pass


class AddressError(MpiqError, LookupError):
    pass


class RangeError(MpiqError, ValueError):
    pass


class ShapeError(MpiqError, ValueError):
    pass


class MappingError(MpiqError, ValueError):
    pass


class CapacityError(MpiqError):
    pass


# wire / transport
class ProtocolError(MpiqError):
    pass


class VersionError(ProtocolError):
    pass


class ContextMismatch(ProtocolError):
    """A frame tagged with another communication context; it is consumed, never delivered."""


class IncompleteFrame(ProtocolError):
    """Input ended before a whole frame was available; the caller may read more."""

    def __init__(self, needed: int, available: int):
        super().__init__(f"incomplete frame: need {needed} bytes, have {available}")
        self.needed = needed
        self.available = available


class SizeError(MpiqError, ValueError):
    pass


class ChannelClosed(MpiqError, ConnectionError):
    pass


class ConnectError(MpiqError, ConnectionError):
    pass


class BindError(MpiqError, OSError):
    pass


class MpiqTimeoutError(MpiqError, TimeoutError):
    pass


# payload / execution
class QubitRangeError(MpiqError, IndexError):
    pass


class IntegrityError(MpiqError):
    pass


class DecodeError(MpiqError, ValueError):
    pass


class TruncationError(MpiqError):
    def __init__(self, payload_len: int, max_len: int):
        super().__init__(f"message of {payload_len} bytes exceeds max_len={max_len}")
        self.payload_len = payload_len
        self.max_len = max_len


# lifecycle
class StateError(MpiqError, RuntimeError):
    pass


class InitError(MpiqError):
    def __init__(self, devices: Iterable, reasons: dict | None = None):
        self.devices = list(devices)
        self.reasons = dict(reasons or {})
        names = ", ".join(str(d) for d in self.devices)
        super().__init__(f"unreachable monitor(s): {names}")


class LaunchError(MpiqError):
    pass


# collectives / sync
class CollectiveError(MpiqError):
    """A fan-out collective failed on some targets; delivered targets are not rolled back."""

    def __init__(self, op: str, failed: dict):
        self.op = op
        self.failed = dict(failed)
        detail = "; ".join(f"{k}: {v}" for k, v in self.failed.items())
        super().__init__(f"{op} failed for {len(self.failed)} target(s): {detail}")


class FlagError(MpiqError, ValueError):
    pass


class BarrierTimeout(MpiqTimeoutError):
    def __init__(self, absent: Iterable):
        self.absent = list(absent)
        super().__init__("barrier timed out; absent: " + ", ".join(str(a) for a in self.absent))


# cutting / bench
class ReconstructionError(MpiqError):
    def __init__(self, fragment: int, shot: int, bits: str):
        super().__init__(f"fragment {fragment} shot {shot}: non-GHZ outcome {bits!r}")
        self.fragment = fragment
        self.shot = shot
        self.bits = bits


class IoError(MpiqError, OSError):
    pass


# NAK status byte <-> exception class
NAK_CODES: dict[int, type[MpiqError]] = {
    1: IntegrityError,
    2: QubitRangeError,
    3: DecodeError,
    4: ProtocolError,
}


def nak_code_for(exc: BaseException) -> int:
    for code, cls in NAK_CODES.items():
        if type(exc) is cls:
            return code
    return 4
