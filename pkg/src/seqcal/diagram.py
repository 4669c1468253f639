"""Standalone SVG reliability diagram (no timestamps, deterministic output)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .metrics import CalibrationReport, ReliabilityBin

SIZE = 360
PAD = 48


def _xy(x: float, y: float) -> tuple[str, str]:
    plot = SIZE - 2 * PAD
    return f"{PAD + x * plot:.2f}", f"{SIZE - PAD - y * plot:.2f}"


def reliability_svg(bins: Sequence[ReliabilityBin], title: str = "") -> str:
    plot = SIZE - 2 * PAD
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="black"/>',
    ]
    for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        x, y0 = _xy(t, 0)
        x0, y = _xy(0, t)
        parts.append(f'<text x="{x}" y="{float(y0) + 16:.2f}" font-size="10" text-anchor="middle">{t:.1f}</text>')
        parts.append(f'<text x="{float(x0) - 6:.2f}" y="{float(y) + 3:.2f}" font-size="10" text-anchor="end">{t:.1f}</text>')
    (ax, ay), (bx, by) = _xy(0, 0), _xy(1, 1)
    parts.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="gray" stroke-dasharray="5,4"/>')
    pts = [_xy(b.confidence, b.accuracy) for b in bins if b.count]
    if pts:
        path = " ".join(f"{x},{y}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="#1f5fbf" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{x}" cy="{y}" r="3" fill="#1f5fbf"/>')
    mid = f"{SIZE / 2:.2f}"
    parts.append(f'<text x="{mid}" y="{SIZE - 10}" font-size="12" text-anchor="middle">confidence</text>')
    parts.append(
        f'<text x="14" y="{mid}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {mid})">accuracy</text>'
    )
    if title:
        parts.append(f'<text x="{mid}" y="28" font-size="13" text-anchor="middle">{_escape(title)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(report: CalibrationReport, path: str | Path, title: str = "") -> None:
    Path(path).write_text(reliability_svg(report.bins, title), encoding="utf-8")
