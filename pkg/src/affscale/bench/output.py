"""CSV and SVG writers for benchmark records and profile curves."""

from __future__ import annotations

import csv
import json
import math
from html import escape
from typing import Sequence

from .harness import RunRecord, write_records
from .profiles import ProfileCurve

CURVE_HEADER = ["scaling", "metric", "tau", "fraction"]

# singles are drawn dashed in greys, combinations solid in colour
_SINGLE_COLOURS = ["#000000", "#555555", "#999999", "#333333", "#777777"]
_COMBO_COLOURS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def write_curves(curves: Sequence[ProfileCurve], path) -> None:
    """Write the long-format curve table plus a ``.meta.json`` sidecar."""
    if not curves:
        raise ValueError("no curves to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for c in curves:
            for tau, frac in c.breakpoints:
                writer.writerow([c.scaling_id, c.metric, f"{tau:.17g}", f"{frac:.17g}"])
    meta = {"metric": curves[0].metric, **curves[0].meta}
    with open(f"{path}.meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def emit_csv(items, path) -> None:
    """Write run records or profile curves, depending on what ``items`` holds."""
    items = list(items)
    if not items:
        raise ValueError("nothing to write")
    if isinstance(items[0], RunRecord):
        write_records(items, path)
    elif isinstance(items[0], ProfileCurve):
        write_curves(items, path)
    else:
        raise TypeError(f"cannot write {type(items[0]).__name__} as CSV")


def _is_combination(scaling_id: str) -> bool:
    if not scaling_id.startswith("con:"):
        return False
    weights = scaling_id[4:].split(";")[0].split(",")
    return sum(1 for w in weights if w.strip() not in ("0", "")) > 1


def emit_svg(curves: Sequence[ProfileCurve], path, title: str = "", width: int = 640, height: int = 400) -> None:
    """Staircase plot of profile curves on a log2 tau axis."""
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to plot")
    left, right, top, bottom = 60, 190, 30, 50
    pw, ph = width - left - right, height - top - bottom
    tau_max = max(t for c in curves for t, _ in c.breakpoints)
    x_span = max(1.0, math.ceil(math.log2(tau_max) * 1.05 * 10) / 10) if tau_max > 1 else 1.0

    def px(tau):
        return left + pw * min(math.log2(tau), x_span) / x_span

    def py(frac):
        return top + ph * (1.0 - frac)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    meta = {"metric": curves[0].metric, **curves[0].meta}
    out.append(f"<desc>{escape(json.dumps(meta, sort_keys=True))}</desc>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')

    for i in range(6):
        frac = i / 5
        y = py(frac)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{frac:.1f}</text>')
    n_ticks = min(8, max(1, int(math.floor(x_span))))
    for i in range(n_ticks + 1):
        v = x_span * i / n_ticks
        x = left + pw * i / n_ticks
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle" font-size="11">{v:.2g}</text>')
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" font-size="12">log2(tau)</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.2f})">fraction solved</text>'
    )

    n_single = n_combo = 0
    for k, c in enumerate(curves):
        if _is_combination(c.scaling_id):
            colour, dash = _COMBO_COLOURS[n_combo % len(_COMBO_COLOURS)], ""
            n_combo += 1
        else:
            colour, dash = _SINGLE_COLOURS[n_single % len(_SINGLE_COLOURS)], ' stroke-dasharray="5,3"'
            n_single += 1
        pts = []
        prev = None
        for tau, frac in c.breakpoints:
            if prev is not None:
                pts.append((px(tau), py(prev)))
            pts.append((px(tau), py(frac)))
            prev = frac
        pts.append((left + pw, py(prev)))
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{coords}"/>')
        ly = top + 12 + 18 * k
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{colour}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="11">{escape(c.scaling_id)}</text>')

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
