"""SVG output for tilings and arctic curves.

Lattice points (x, y) map to the plane by a shear that makes every lozenge
a 60 degree rhombus; the SVG y axis is flipped so the lattice y points up.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .lattice import LozengeType, PathSystem, column_span, tiling_from_paths

FILLS = {
    "I": "#d95f02",
    "II_even": "#1b9e77",
    "II_odd": "#8fd3b8",
    "III": "#7570b3",
}
STROKE = "#222222"
SCALE = 20.0
S3 = math.sqrt(3) / 2


def to_plane(x: float, y: float) -> tuple[float, float]:
    return S3 * x, -(y - x / 2)


def lozenge_vertices(t: LozengeType, x: int, y: int) -> list[tuple[int, int]]:
    if t == LozengeType.TypeI:
        return [(x, y), (x + 1, y + 1), (x + 1, y + 2), (x, y + 1)]
    if t == LozengeType.TypeII:
        return [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
    return [(x - 1, y), (x, y), (x + 1, y + 1), (x, y + 1)]


def fill_class(t: LozengeType, x: int) -> str:
    if t == LozengeType.TypeII:
        return "II_even" if x % 2 == 0 else "II_odd"
    return "I" if t == LozengeType.TypeI else "III"


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _points(pts, margin: float, dy: float) -> str:
    out = []
    for x, y in pts:
        px, py = to_plane(x, y)
        out.append(f"{_fmt(SCALE * px + margin)},{_fmt(SCALE * py + margin + dy)}")
    return " ".join(out)


class _Canvas:
    def __init__(self, n: int) -> None:
        self.n = n
        self.margin = SCALE
        corners = [(0, 0), (n, 0), (2 * n, n), (2 * n, 2 * n), (n, 2 * n), (0, n)]
        ys = [to_plane(*c)[1] for c in corners]
        # shift so the top corner sits at the margin
        self.dy = -min(ys) * SCALE
        self.width = SCALE * S3 * 2 * n + 2 * self.margin
        self.height = SCALE * (max(ys) - min(ys)) + 2 * self.margin
        self.corners = corners
        self.body: list[str] = []

    def poly(self, pts, cls: str | None = None, fill: str | None = None, extra: str = "") -> None:
        p = _points(pts, self.margin, self.dy)
        attrs = f' class="{cls}"' if cls else ""
        attrs += f' fill="{fill}"' if fill else ""
        self.body.append(f'<polygon points="{p}"{attrs}{extra}/>')

    def polyline(self, pts, color: str) -> None:
        p = _points(pts, self.margin, self.dy)
        self.body.append(f'<polyline points="{p}" fill="none" stroke="{color}" stroke-width="2"/>')

    def svg(self, title: str) -> str:
        style = " ".join(f".{k} {{fill: {v};}}" for k, v in FILLS.items())
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f"<!-- hexatile {__version__} -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">',
            f"<title>{escape(title)}</title>",
            f"<style>{style} polygon {{stroke: {STROKE}; stroke-width: 0.5;}}</style>",
        ]
        return "\n".join(head + self.body + ["</svg>"]) + "\n"


def _overlay_lines(canvas: _Canvas, region: dict) -> None:
    n = canvas.n
    for line in region.get("boundary", []):
        pts = [(n * (xi + 1), n * (eta + 1)) for xi, eta in line]
        canvas.polyline(pts, "#e7298a")


def tiling_svg(p: PathSystem, alpha_label: str = "", overlay: dict | None = None) -> str:
    """One polygon per lozenge, classed I, II_even, II_odd or III."""
    n = p.n
    faces = tiling_from_paths(p)
    c = _Canvas(n)
    for x in range(2 * n):
        for y in range(*column_span(n, x)):
            t = LozengeType(int(faces[x, y]))
            c.poly(lozenge_vertices(t, x, y), cls=fill_class(t, x))
    if overlay is not None:
        _overlay_lines(c, overlay)
    return c.svg(f"tiling n={n} alpha={alpha_label}")


def region_svg(region: dict, n: int = 20) -> str:
    """The hexagon outline with the liquid-region boundary in scaled coordinates."""
    c = _Canvas(n)
    c.poly(c.corners, fill="#f4f4f4")
    _overlay_lines(c, region)
    return c.svg(f"arctic curve alpha={region.get('alpha', '')}")


def count_classes(svg: str) -> dict[str, int]:
    return {k: svg.count(f'class="{k}"') for k in FILLS}


def plane_area(pts) -> float:
    q = np.array([to_plane(*v) for v in pts])
    x, y = q[:, 0], q[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
