"""Deterministic SVG drawings of layouts with the door graph overlaid."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .layout import EdgeKind, Mode, merge_rooms

SCALE = 8.0
MARGIN = 16.0

FLOORPLAN_COLORS = {
    "exterior": "#ffffff",
    "bedroom": "#f4c27a",
    "bathroom": "#8fc9e8",
    "kitchen": "#e8897f",
    "living": "#b9d98a",
    "balcony": "#c7b4e0",
    "corridor": "#d9d9d9",
}
PALETTE = ("#f4c27a", "#8fc9e8", "#e8897f", "#b9d98a", "#c7b4e0", "#d9d9d9", "#f2a5c8", "#a3d9c9")


def type_color(layout, t):
    name = layout.types[t]
    if layout.mode is Mode.FLOORPLAN and name in FLOORPLAN_COLORS:
        return FLOORPLAN_COLORS[name]
    return PALETTE[t % len(PALETTE)]


def _f(v):
    return f"{v:.2f}"


def room_centroids(layout):
    """Area-weighted centre of each merged room, keyed by element index."""
    out = {}
    for room in merge_rooms(layout):
        els = [layout.elements[k] for k in room]
        area = sum(e.area for e in els)
        cx = sum(e.cx * e.area for e in els) / area
        cy = sum(e.cy * e.area for e in els) / area
        for k in room:
            out[k] = (cx, cy)
    return out


def render_svg(layout, scale=SCALE, margin=MARGIN):
    """SVG text for ``layout``; world y grows upwards."""
    size = 64.0 * scale + 2 * margin

    def px(x):
        return margin + x * scale

    def py(y):
        return size - margin - y * scale

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(size)}" height="{_f(size)}" '
        f'viewBox="0 0 {_f(size)} {_f(size)}">',
        f'<rect x="0" y="0" width="{_f(size)}" height="{_f(size)}" fill="#fafafa"/>',
    ]
    for k, e in enumerate(layout.elements):
        name = escape(layout.types[e.t])
        stroke = "#bbbbbb" if layout.mode is Mode.FLOORPLAN and e.t == layout.exterior_type else "#333333"
        lines.append(
            f'<rect x="{_f(px(e.x))}" y="{_f(py(e.y2))}" width="{_f(e.w * scale)}" height="{_f(e.h * scale)}" '
            f'fill="{type_color(layout, e.t)}" stroke="{stroke}" stroke-width="1"><title>{k}: {name}</title></rect>')
        if e.a is not None:
            x2 = e.cx + 0.5 * min(e.w, e.h) * math.cos(e.a)
            y2 = e.cy + 0.5 * min(e.w, e.h) * math.sin(e.a)
            lines.append(f'<line x1="{_f(px(e.cx))}" y1="{_f(py(e.cy))}" x2="{_f(px(x2))}" y2="{_f(py(y2))}" '
                         f'stroke="#333333" stroke-width="1.5"/>')
    for r in layout.edges_of(EdgeKind.WALL):
        a, b = layout.elements[r.i], layout.elements[r.j]
        x0, x1 = max(a.x, b.x), min(a.x2, b.x2)
        y0, y1 = max(a.y, b.y), min(a.y2, b.y2)
        lines.append(f'<line x1="{_f(px(x0))}" y1="{_f(py(y0))}" x2="{_f(px(x1))}" y2="{_f(py(y1))}" '
                     f'stroke="#000000" stroke-width="3"/>')
    if layout.mode is Mode.FLOORPLAN:
        cent = room_centroids(layout)
        for r in layout.edges_of(EdgeKind.DOOR):
            (x0, y0), (x1, y1) = cent[r.i], cent[r.j]
            lines.append(f'<line x1="{_f(px(x0))}" y1="{_f(py(y0))}" x2="{_f(px(x1))}" y2="{_f(py(y1))}" '
                         f'stroke="#1f4e79" stroke-width="2" stroke-dasharray="3,4"/>')
        for x, y in sorted(set(cent.values())):
            lines.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="#1f4e79"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def save_svg(path, layout, **kw):
    with open(path, "w") as fh:
        fh.write(render_svg(layout, **kw))
