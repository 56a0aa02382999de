#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: test_utils.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================
"""
from mpiq.utils import (
    DEFAULT_TIMEOUT_MS,
    default_timeout_ms,
    digest64,
    env_int,
    format_seconds,
    is_loopback,
    mix64,
)


def test_env_int(monkeypatch):
    monkeypatch.setenv("MPIQ_TEST_VALUE", "0x10")
    assert env_int("MPIQ_TEST_VALUE", 3) == 16
    monkeypatch.setenv("MPIQ_TEST_VALUE", "oops")
    assert env_int("MPIQ_TEST_VALUE", 3) == 3
    monkeypatch.delenv("MPIQ_TEST_VALUE")
    assert env_int("MPIQ_TEST_VALUE", 3) == 3


def test_default_timeout(monkeypatch):
    monkeypatch.setenv("MPIQ_TIMEOUT_MS", "250")
    assert default_timeout_ms() == 250
    monkeypatch.setenv("MPIQ_TIMEOUT_MS", "-5")
    assert default_timeout_ms() == DEFAULT_TIMEOUT_MS


def test_mix64_is_order_sensitive():
    assert mix64(1, 2) == mix64(1, 2)
    assert mix64(1, 2) != mix64(2, 1)
    assert 0 <= mix64(2**70) < 2**64


def test_digest64():
    assert digest64(b"ab", b"c") == digest64(b"abc")
    assert digest64(b"abc") != digest64(b"abd")


def test_is_loopback():
    assert is_loopback("127.0.0.1")
    assert not is_loopback("not-an-ip")


def test_format_seconds():
    assert format_seconds(1234.5) == "1,234.50 s"
