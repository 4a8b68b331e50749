"""Side-by-side source/follow-up scatter plots as plain SVG."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .clusterers.base import NOISE

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
SHAPES = ("circle", "square", "triangle", "diamond")
PANEL = 320
MARGIN = 24


def _fmt(v):
    return f"{v:.2f}"


def _marker(shape, x, y, color, r=3.2):
    if shape == "circle":
        return f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{_fmt(x - r)}" y="{_fmt(y - r)}" width="{_fmt(2 * r)}" height="{_fmt(2 * r)}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{_fmt(x)},{_fmt(y - r)} {_fmt(x - r)},{_fmt(y + r)} {_fmt(x + r)},{_fmt(y + r)}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if shape == "diamond":
        pts = f"{_fmt(x)},{_fmt(y - r)} {_fmt(x + r)},{_fmt(y)} {_fmt(x)},{_fmt(y + r)} {_fmt(x - r)},{_fmt(y)}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    raise ValueError(shape)


def _noise_marker(x, y, r=3.2):
    # an unfilled black cross, never used for a cluster
    return (f'<path class="noise" d="M{_fmt(x - r)},{_fmt(y - r)}L{_fmt(x + r)},{_fmt(y + r)}'
            f'M{_fmt(x - r)},{_fmt(y + r)}L{_fmt(x + r)},{_fmt(y - r)}" stroke="#000" stroke-width="1.2"/>')


def _panel(coords, labels, lo, hi, x0, title, highlight=()):
    span = np.where(hi > lo, hi - lo, 1.0)
    inner = PANEL - 2 * MARGIN
    out = [f'<g transform="translate({x0},0)">',
           f'<rect x="0.5" y="0.5" width="{PANEL - 1}" height="{PANEL - 1}" fill="none" stroke="#999"/>',
           f'<text x="{PANEL / 2:.1f}" y="16" text-anchor="middle" font-size="12">{escape(title)}</text>']
    for i, ((a, b), lab) in enumerate(zip(coords, labels)):
        x = MARGIN + (a - lo[0]) / span[0] * inner
        y = PANEL - MARGIN - (b - lo[1]) / span[1] * inner
        if lab == NOISE:
            out.append(_noise_marker(x, y))
        else:
            lab = int(lab)
            out.append(_marker(SHAPES[lab // len(PALETTE) % len(SHAPES)], x, y, PALETTE[lab % len(PALETTE)]))
        if i in highlight:
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="6" fill="none" stroke="#000"/>')
    out.append("</g>")
    return out


def scatter_pair_svg(source_coords, source_labels, followup_coords, followup_labels,
                     title: str = "", added_rows=()) -> str:
    """Two panels sharing axis limits; NOISE points are drawn as black crosses.

    Output bytes depend only on the inputs.
    """
    s = np.asarray(source_coords, dtype=float)
    f = np.asarray(followup_coords, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2 or f.ndim != 2 or f.shape[1] != 2:
        raise ValueError("scatter plots need 2-D data")
    both = np.vstack([s, f])
    lo, hi = both.min(axis=0), both.max(axis=0)
    width = 2 * PANEL + 16
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL + 24}" '
        f'viewBox="0 0 {width} {PANEL + 24}">',
        f'<text x="{width / 2:.1f}" y="{PANEL + 18}" text-anchor="middle" font-size="11">{escape(title)}</text>',
    ]
    body = _panel(s, source_labels, lo, hi, 0, "source")
    body += _panel(f, followup_labels, lo, hi, PANEL + 16, "follow-up", set(int(r) for r in added_rows))
    return "\n".join(head + body + ["</svg>", ""])
