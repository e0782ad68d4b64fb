"""Dependency-free SVG line plots of BLER and throughput curves."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .link_simulator import SimResult

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
_W, _H, _PAD = 480, 320, 50


def _panel(results, metric, label, x0):
    xs = np.concatenate([r.snr_db for r in results])
    ys = np.concatenate([getattr(r, metric) for r in results])
    xlo, xhi = float(xs.min()), float(xs.max()) or 1.0
    yhi = float(ys.max()) or 1.0
    if xhi == xlo:
        xhi = xlo + 1.0

    def px(x, y):
        return x0 + _PAD + (x - xlo) / (xhi - xlo) * (_W - 2 * _PAD), _H - _PAD - y / yhi * (_H - 2 * _PAD)

    out = [
        f'<rect x="{x0 + _PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#444"/>',
        f'<text x="{x0 + _W / 2}" y="{_H - 12}" text-anchor="middle">SNR (dB)</text>',
        f'<text x="{x0 + 12}" y="{_PAD - 12}">{escape(label)} (max {yhi:.3g})</text>',
    ]
    for i, r in enumerate(results):
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in (px(x, y) for x, y in zip(r.snr_db, getattr(r, metric))))
        dash = "" if r.adaptation.value == "ON" else ' stroke-dasharray="6,4"'
        out.append(f'<polyline points="{pts}" fill="none" stroke="{_COLORS[i % len(_COLORS)]}"{dash}/>')
    return out


def write_svg(path, results: Sequence[SimResult]) -> Path:
    """BLER (left) and throughput (right) versus SNR; OFF curves are dashed."""
    if not results:
        raise ValueError("nothing to plot")
    body = _panel(results, "bler", "BLER", 0) + _panel(results, "throughput_bits_per_slot", "bits/slot", _W)
    for i, r in enumerate(results):
        body.append(
            f'<text x="{_PAD + 8}" y="{_PAD + 16 + 14 * i}" fill="{_COLORS[i % len(_COLORS)]}" font-size="11">'
            f"{escape(r.scenario_id)} {r.adaptation.value}</text>"
        )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * _W}" height="{_H}" '
        'font-family="sans-serif" font-size="12">\n' + "\n".join(body) + "\n</svg>\n"
    )
    path = Path(path)
    path.write_text(svg)
    return path
