"""Minimal SVG output for landmark overlays and deformation grids.

The chart [0, 2 pi]^2 maps linearly onto an 800 x 800 viewport with y up.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from ..torus import TWO_PI, wrap_difference

SIZE = 800
COLORS = {"source": "#1f77b4", "target": "#ff7f0e", "warped": "#2ca02c", "grid": "#555555", "band": "#000000"}


def _px(x, y):
    return x / TWO_PI * SIZE, SIZE - y / TWO_PI * SIZE


def _fmt(v):
    return f"{v:.3f}"


def _document(body, title):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">\n'
        f"<title>{escape(title)}</title>\n"
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white" stroke="black"/>\n'
    )
    return head + "".join(body) + "</svg>\n"


def _markers(points, color, shape, label):
    out = [f'<g class="{label}" fill="{color}">\n']
    for x, y in points:
        px, py = _px(x, y)
        if shape == "square":
            out.append(f'<rect x="{_fmt(px - 4)}" y="{_fmt(py - 4)}" width="8" height="8"/>\n')
        elif shape == "hexagon":
            pts = " ".join(
                f"{_fmt(px + 5 * math.cos(a))},{_fmt(py + 5 * math.sin(a))}"
                for a in np.linspace(0, TWO_PI, 6, endpoint=False)
            )
            out.append(f'<polygon points="{pts}"/>\n')
        else:
            out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4"/>\n')
    out.append("</g>\n")
    return out


def landmark_overlay(sources, warped, targets=None, labels=None, band=False, title="landmarks") -> str:
    """Sources as hexagons, targets as circles, warped landmarks as squares.

    With ``labels`` (classifier problems) points are coloured by label and
    the band boundaries y = pi/2, 3 pi/2 are drawn.
    """
    body = []
    if band:
        for yb in (math.pi / 2, 1.5 * math.pi):
            _, py = _px(0, yb)
            body.append(f'<line x1="0" y1="{_fmt(py)}" x2="{SIZE}" y2="{_fmt(py)}" stroke="{COLORS["band"]}"/>\n')
    if labels is not None:
        labels = np.asarray(labels)
        for lab, color in ((0, COLORS["source"]), (1, COLORS["target"])):
            body += _markers(np.asarray(warped)[labels == lab], color, "square", f"warped-label-{lab}")
    else:
        body += _markers(sources, COLORS["source"], "hexagon", "source")
        if targets is not None:
            body += _markers(targets, COLORS["target"], "circle", "target")
        body += _markers(warped, COLORS["warped"], "square", "warped")
    return _document(body, title)


def grid_svg(warped_nodes, title="deformation grid") -> str:
    """Polylines along grid rows and columns, broken where a segment wraps the seam.

    ``warped_nodes`` has shape ``(n, n, 2)`` in canonical coordinates.
    """
    nodes = np.asarray(warped_nodes)
    body = [f'<g fill="none" stroke="{COLORS["grid"]}" stroke-width="1">\n']
    lines = [nodes[i, :, :] for i in range(nodes.shape[0])] + [nodes[:, j, :] for j in range(nodes.shape[1])]
    for line in lines:
        run = [line[0]]
        for b in line[1:]:
            a = run[-1]
            # shortest representative of the segment; break if it leaves the chart
            b2 = a + wrap_difference(b - a)
            if np.all((b2 >= -1e-9) & (b2 <= TWO_PI + 1e-9)):
                run.append(b2)
            else:
                body += _polyline(run)
                run = [b]
        body += _polyline(run)
    body.append("</g>\n")
    return _document(body, title)


def _polyline(run):
    if len(run) < 2:
        return []
    pts = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in (_px(x, y) for x, y in run))
    return [f'<polyline points="{pts}"/>\n']
