#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
============================================================================================================================
Project: Hybrid Message-Passing Runtime (classical ranks + quantum monitors)
File: pdf.py
Author: Mobin Yousefi (GitHub: https://github.com/mobinyousefi-cs)
Created: 2026-10-17
Updated: 2026-10-17
License: MIT License (see LICENSE file for details)
============================================================================================================================

Description:
PDF renderer using ReportLab. Generates an A4 benchmark report: run parameters, the results table and a
summary footer. Invalid rows are shown in red and excluded from the speedup summary.
"""
from __future__ import annotations

from pathlib import Path

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import mm
from reportlab.platypus import (
    HRFlowable,
    Paragraph,
    SimpleDocTemplate,
    Spacer,
    Table,
    TableStyle,
)

from .errors import IoError, RangeError
from .models import BenchResult
from .storage import iso_stamp
from .utils import format_seconds

PAGE_MARGIN = 18 * mm
HEADER = ["GHZ qubits", "Nodes", "Sub-circuit", "Shots", "Serial", "Parallel", "Speedup", "Valid"]


def _fragment_label(row: BenchResult) -> str:
    lo, hi = row.n_total // row.m_fragments, -(-row.n_total // row.m_fragments)
    return str(lo) if lo == hi else f"{lo}-{hi}"


def build_report(rows: list[BenchResult], output_path: Path, title: str = "GHZ cutting benchmark") -> Path:
    if not rows:
        raise RangeError("no benchmark rows to render")
    doc = SimpleDocTemplate(
        str(output_path),
        pagesize=A4,
        leftMargin=PAGE_MARGIN,
        rightMargin=PAGE_MARGIN,
        topMargin=20 * mm,
        bottomMargin=20 * mm,
    )

    styles = getSampleStyleSheet()
    heading = ParagraphStyle(name="ReportTitle", parent=styles["Heading1"], spaceAfter=6)
    normal = styles["Normal"]
    small = ParagraphStyle(name="Small", parent=normal, fontSize=9, leading=11)

    story = []
    story.append(Paragraph(f"<b>{title}</b>", heading))
    delays = sorted({r.delay_ms for r in rows})
    story.append(
        Paragraph(
            f"Generated {iso_stamp()} &nbsp;|&nbsp; {len(rows)} run(s) &nbsp;|&nbsp; "
            f"injected delay: {', '.join(f'{d:g} ms' for d in delays)}",
            small,
        )
    )
    story.append(Spacer(1, 6))
    story.append(HRFlowable(width="100%", color=colors.black))
    story.append(Spacer(1, 8))

    table_data = [HEADER]
    for r in rows:
        table_data.append(
            [
                str(r.n_total),
                str(r.nodes),
                _fragment_label(r),
                str(r.shots),
                format_seconds(r.t_serial_s),
                format_seconds(r.t_parallel_s),
                f"{r.speedup:.2f}",
                "yes" if r.valid else "NO",
            ]
        )

    tbl = Table(table_data, colWidths=[24 * mm, 16 * mm, 22 * mm, 18 * mm, 24 * mm, 24 * mm, 22 * mm, 14 * mm])
    style = [
        ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
        ("TEXTCOLOR", (0, 0), (-1, 0), colors.black),
        ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
        ("ALIGN", (0, 1), (-1, -1), "RIGHT"),
        ("VALIGN", (0, 0), (-1, -1), "TOP"),
        ("LEFTPADDING", (0, 0), (-1, -1), 6),
        ("RIGHTPADDING", (0, 0), (-1, -1), 6),
    ]
    for i, r in enumerate(rows, start=1):
        if not r.valid:
            style.append(("TEXTCOLOR", (0, i), (-1, i), colors.red))
    tbl.setStyle(TableStyle(style))
    story.append(tbl)
    story.append(Spacer(1, 10))

    counted = [r for r in rows if r.valid and r.speedup > 0]
    summary = [["Valid runs", f"{sum(r.valid for r in rows)} / {len(rows)}"]]
    if counted:
        best = max(counted, key=lambda r: r.speedup)
        summary.append(["Best speedup", f"{best.speedup:.2f} ({best.nodes} nodes)"])
        summary.append(["Mean speedup", f"{sum(r.speedup for r in counted) / len(counted):.2f}"])
    totals = Table(summary, colWidths=[40 * mm, 40 * mm], hAlign="RIGHT")
    totals.setStyle(
        TableStyle(
            [
                ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
                ("BACKGROUND", (0, -1), (-1, -1), colors.HexColor("#F0F0F0")),
                ("ALIGN", (0, 0), (-1, -1), "RIGHT"),
            ]
        )
    )
    story.append(totals)

    if any(not r.valid for r in rows):
        story.append(Spacer(1, 10))
        story.append(Paragraph("<b>Notes</b>", normal))
        story.append(
            Paragraph("Rows marked NO failed GHZ validation and are excluded from the summary.", small)
        )

    try:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        doc.build(story)
    except OSError as e:
        raise IoError(f"cannot write {output_path}: {e.strerror or e}") from e
    return Path(output_path)
