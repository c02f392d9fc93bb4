"""
Hexagon geometry, path systems, height functions and tiling weights.

A tiling of the N x N x N hexagon is stored as N non-intersecting up-right
paths on columns m = 0..2N. Row j of ``PathSystem.heights`` holds the
integer height of path j (its half-integer height minus 1/2).  Path j
starts at height j and ends at height N + j.

Faces are unit vertical edges {x} x [y, y+1] of the affine lattice, indexed
by (x, y).  The lozenge attached to face (x, y) is drawn as follows; ``o``
marks the point (x, y) that indexes it::

      type I (up step)      type II (flat step)      type III (no path)

            +                   +-----+                  +-----+
           /|                   |     |                 /     /
          / |                   |     |                /     /
         +  +                   o-----+               +-----o
         | /
         |/
         o

    I   : (x,y) (x+1,y+1) (x+1,y+2) (x,y+1)
    II  : (x,y) (x+1,y) (x+1,y+1) (x,y+1)
    III : (x-1,y) (x,y) (x+1,y+1) (x,y+1)

Types I and II carry the path crossing the edge at (x, y + 1/2) into the
next column.  A type III lozenge has no vertical edge; face (x, y) is its
short diagonal, so it straddles columns x - 1 .. x + 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

import numpy as np

AlphaLike = Union[Fraction, int, float, str]


class LozengeType(IntEnum):
    TypeI = 0
    TypeII = 1
    TypeIII = 2


def parse_alpha(alpha: AlphaLike) -> Fraction | float:
    """Return ``alpha`` as a Fraction when it is given exactly, else a float.

    Strings such as ``"1/4"`` or ``"0.05"`` and ints become Fractions;
    floats stay floats.
    """
    if isinstance(alpha, Fraction):
        a: Fraction | float = alpha
    elif isinstance(alpha, (int, np.integer)) and not isinstance(alpha, bool):
        a = Fraction(int(alpha))
    elif isinstance(alpha, str):
        a = Fraction(alpha.strip())
    elif isinstance(alpha, (float, np.floating)):
        a = float(alpha)
    else:
        raise TypeError(f"cannot interpret alpha={alpha!r}")
    if not 0 < a <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return a


def exact_alpha(alpha: AlphaLike) -> Fraction:
    """Rational value of ``alpha``; floats are read through their decimal repr."""
    a = parse_alpha(alpha)
    if isinstance(a, float):
        a = Fraction(repr(a))
    return a


def format_rational(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class HexagonSpec:
    n: int
    alpha: Fraction | float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))

    @property
    def columns(self) -> int:
        return 2 * self.n


def column_span(n: int, x: int) -> tuple[int, int]:
    """Half-open range of y with face (x, y) inside the hexagon."""
    return max(0, x - n), min(n + x, 2 * n)


def hexagon_mask(n: int) -> np.ndarray:
    """Boolean (2n, 2n) mask of faces x, y in 0..2n-1 that carry a hexagon lozenge."""
    mask = np.zeros((2 * n, 2 * n), dtype=bool)
    for x in range(2 * n):
        lo, hi = column_span(n, x)
        mask[x, lo:hi] = True
    return mask


def interior_faces(n: int) -> list[tuple[int, int]]:
    """Faces where probability queries are defined (columns 1..2n-1)."""
    return [(x, y) for x in range(1, 2 * n) for y in range(*column_span(n, x))]


@dataclass(frozen=True)
class PathSystem:
    n: int
    heights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        h = np.array(self.heights, dtype=np.int64, copy=True)
        n = int(self.n)
        if h.shape != (n, 2 * n + 1):
            raise ValueError(f"heights must have shape {(n, 2 * n + 1)}, got {h.shape}")
        if np.any(h[:, 0] != np.arange(n)) or np.any(h[:, -1] != n + np.arange(n)):
            raise ValueError("paths must start at heights 0..n-1 and end at n..2n-1")
        steps = np.diff(h, axis=1)
        if np.any((steps != 0) & (steps != 1)):
            raise ValueError("every step must be 0 (flat) or 1 (up)")
        if n > 1 and np.any(np.diff(h, axis=0) <= 0):
            raise ValueError("paths intersect")
        h.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "heights", h)

    @classmethod
    def from_steps(cls, steps: Iterable[Iterable[int]]) -> "PathSystem":
        """Build from per-path step lists (1 = up, 0 = flat)."""
        rows = [np.concatenate([[0], np.cumsum(list(s))]) for s in steps]
        n = len(rows)
        return cls(n, np.array(rows) + np.arange(n)[:, None])

    @classmethod
    def staircase(cls, n: int) -> "PathSystem":
        """The zero-energy tiling: every path goes up at even columns."""
        m = np.arange(2 * n + 1)
        return cls(n, np.arange(n)[:, None] + (m + 1)[None, :] // 2)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PathSystem) and self.n == other.n and np.array_equal(
            self.heights, other.heights
        )

    def __hash__(self) -> int:
        return hash((self.n, self.heights.tobytes()))

    def key(self) -> bytes:
        return self.heights.tobytes()


@dataclass(frozen=True)
class HeightField:
    h: np.ndarray

    def __call__(self, x: int, y: int) -> int:
        return int(self.h[x, y])


@dataclass(frozen=True)
class TilingStats:
    energy: int
    log_weight: float

    def weight(self, alpha: AlphaLike) -> Fraction | float:
        a = parse_alpha(alpha)
        return a**self.energy


def energy(p: PathSystem) -> int:
    flat = np.diff(p.heights, axis=1) == 0
    return int(flat[:, 0::2].sum())


def stats(p: PathSystem, alpha: AlphaLike) -> TilingStats:
    e = energy(p)
    return TilingStats(e, e * math.log(float(parse_alpha(alpha))))


def height_field(p: PathSystem) -> HeightField:
    """h(x, y) = number of paths strictly below y at column x, for x, y in 0..2n."""
    n = p.n
    ys = np.arange(2 * n + 1)
    h = (p.heights.T[:, :, None] < ys[None, None, :]).sum(axis=1)
    return HeightField(h.astype(np.int64))


def classify_faces(h: np.ndarray) -> np.ndarray:
    """Vectorised face classification from a height array of shape (2n+1, 2n+1)."""
    up = h[:-1, 1:] - h[1:, 1:] == 1
    flat = h[1:, 1:] - h[:-1, :-1] == 1
    empty = h[:-1, 1:] == h[:-1, :-1]
    if np.any(up.astype(int) + flat + empty != 1):
        raise ValueError("height field does not define a tiling")
    out = np.full(up.shape, LozengeType.TypeIII, dtype=np.int8)
    out[up] = LozengeType.TypeI
    out[flat] = LozengeType.TypeII
    return out


def lozenge_from_height(hf: HeightField, x: int, y: int) -> LozengeType:
    size = hf.h.shape[0] - 1
    if not (0 <= x < size and 0 <= y < size):
        raise IndexError(f"face ({x}, {y}) outside 0..{size - 1}")
    h = hf.h
    if h[x, y + 1] - h[x + 1, y + 1] == 1:
        return LozengeType.TypeI
    if h[x + 1, y + 1] - h[x, y] == 1:
        return LozengeType.TypeII
    if h[x, y + 1] == h[x, y]:
        return LozengeType.TypeIII
    raise ValueError("height field does not define a tiling")


def tiling_from_paths(p: PathSystem) -> np.ndarray:
    """Lozenge type of every face (x, y), x, y in 0..2n-1, as an int8 array.

    Faces outside the hexagon come out as TypeIII; use ``hexagon_mask`` to
    restrict to the 3n^2 lozenges of the tiling.
    """
    n = p.n
    out = np.full((2 * n, 2 * n), LozengeType.TypeIII, dtype=np.int8)
    steps = np.diff(p.heights, axis=1)
    for x in range(2 * n):
        ys = p.heights[:, x]
        out[x, ys] = np.where(steps[:, x] == 1, LozengeType.TypeI, LozengeType.TypeII)
    return out


def paths_from_tiling(faces: np.ndarray) -> PathSystem:
    """Inverse of ``tiling_from_paths``."""
    size = faces.shape[0]
    n = size // 2
    cols = []
    for x in range(size):
        ys = np.flatnonzero(faces[x] != LozengeType.TypeIII)
        if len(ys) != n:
            raise ValueError(f"column {x} carries {len(ys)} paths, expected {n}")
        cols.append(ys)
    cols.append(n + np.arange(n))
    return PathSystem(n, np.stack(cols, axis=1))


def tiling_to_json(p: PathSystem, alpha: AlphaLike) -> dict:
    a = parse_alpha(alpha)
    return {
        "n": p.n,
        "alpha": format_rational(a) if isinstance(a, Fraction) else a,
        "heights": [[int(v) for v in row] for row in p.heights],
    }


def tiling_from_json(obj: dict) -> tuple[PathSystem, Fraction | float]:
    a = obj["alpha"]
    return PathSystem(int(obj["n"]), np.array(obj["heights"])), parse_alpha(a)


def write_tiling(path: str | Path, p: PathSystem, alpha: AlphaLike) -> None:
    Path(path).write_text(json.dumps(tiling_to_json(p, alpha)) + "\n")


def read_tiling(path: str | Path) -> tuple[PathSystem, Fraction | float]:
    return tiling_from_json(json.loads(Path(path).read_text()))
