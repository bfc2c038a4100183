"""Primitive 2D geometry: barycentric coordinates, point location, arc-length
polyline tools, and occupancy-grid rasterization.

Everything here is frame-agnostic (plan pixels and world meters both flow
through) and pure; callers keep track of which frame a coordinate lives in.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

# Barycentric slack for boundary-inclusive containment tests.
INSIDE_TOL = 1e-9
# Relative signed-area threshold below which a triangle is degenerate.
DEGENERATE_AREA_TOL = 1e-12


class DegenerateTriangleError(ValueError):
    """Triangle too close to zero area for barycentric coordinates."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x!r}, {self.y!r})")

    def __iter__(self):
        yield self.x
        yield self.y


def distance(a: Point2, b: Point2) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


@dataclass(frozen=True)
class Triangle:
    v0: Point2
    v1: Point2
    v2: Point2

    def signed_area(self) -> float:
        return 0.5 * (
            (self.v1.x - self.v0.x) * (self.v2.y - self.v0.y)
            - (self.v2.x - self.v0.x) * (self.v1.y - self.v0.y)
        )

    def bbox_diag_sq(self) -> float:
        xs = (self.v0.x, self.v1.x, self.v2.x)
        ys = (self.v0.y, self.v1.y, self.v2.y)
        return (max(xs) - min(xs)) ** 2 + (max(ys) - min(ys)) ** 2

    def is_degenerate(self) -> bool:
        d = self.bbox_diag_sq()
        return d == 0.0 or abs(self.signed_area()) <= DEGENERATE_AREA_TOL * d


@dataclass(frozen=True)
class Barycentric:
    l0: float
    l1: float
    l2: float

    def __post_init__(self) -> None:
        s = self.l0 + self.l1 + self.l2
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"barycentric weights must sum to 1, got {s!r}")

    def inside(self, tol: float = INSIDE_TOL) -> bool:
        return self.l0 >= -tol and self.l1 >= -tol and self.l2 >= -tol


def barycentric(tri: Triangle, p: Point2) -> Barycentric:
    """Weights (l0, l1, l2) with l0*v0 + l1*v1 + l2*v2 == p and sum 1."""
    if tri.is_degenerate():
        raise DegenerateTriangleError(
            f"triangle area {tri.signed_area()!r} is below the degeneracy threshold"
        )
    x0, y0 = tri.v0.x, tri.v0.y
    x1, y1 = tri.v1.x, tri.v1.y
    x2, y2 = tri.v2.x, tri.v2.y
    d = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    l0 = ((y1 - y2) * (p.x - x2) + (x2 - x1) * (p.y - y2)) / d
    l1 = ((y2 - y0) * (p.x - x2) + (x0 - x2) * (p.y - y2)) / d
    return Barycentric(l0, l1, 1.0 - l0 - l1)


def apply_barycentric(tri: Triangle, b: Barycentric) -> Point2:
    return Point2(
        b.l0 * tri.v0.x + b.l1 * tri.v1.x + b.l2 * tri.v2.x,
        b.l0 * tri.v0.y + b.l1 * tri.v1.y + b.l2 * tri.v2.y,
    )


def locate(tris: Sequence[Triangle], p: Point2, tol: float = INSIDE_TOL) -> int | None:
    """Index of the first triangle containing p (boundary-inclusive), None if outside.

    Points on a shared edge resolve to the lowest triangle index.
    """
    for i, tri in enumerate(tris):
        if barycentric(tri, p).inside(tol):
            return i
    return None


@dataclass(frozen=True)
class Polyline:
    vertices: tuple[Point2, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) < 2:
            raise ValueError("polyline needs at least 2 vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise ValueError(f"zero-length segment at ({a.x}, {a.y})")

    @classmethod
    def from_pairs(cls, pts: Iterable[Sequence[float]]) -> "Polyline":
        return cls(tuple(Point2(float(x), float(y)) for x, y in pts))

    @cached_property
    def cumulative_lengths(self) -> tuple[float, ...]:
        acc = [0.0]
        for a, b in zip(self.vertices, self.vertices[1:]):
            acc.append(acc[-1] + distance(a, b))
        return tuple(acc)

    @property
    def total_length(self) -> float:
        return self.cumulative_lengths[-1]


def point_at_fraction(pl: Polyline, f: float) -> Point2:
    """Point at arc-length fraction f in [0, 1]; endpoints are returned exactly."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fraction {f!r} outside [0, 1]")
    if f == 0.0:
        return pl.vertices[0]
    if f == 1.0:
        return pl.vertices[-1]
    if pl.total_length <= 0.0:
        raise ValueError("zero-length polyline")
    target = f * pl.total_length
    cum = pl.cumulative_lengths
    i = min(bisect.bisect_right(cum, target) - 1, len(cum) - 2)
    t = (target - cum[i]) / (cum[i + 1] - cum[i])
    a, b = pl.vertices[i], pl.vertices[i + 1]
    return Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))


def resample_by_arclength(pl: Polyline, n: int) -> list[Point2]:
    """n points at arc-length fractions 0, 1/(n-1), ..., 1 along the polyline."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    if pl.total_length <= 0.0:
        raise ValueError("zero-length polyline")
    out = [pl.vertices[0]]
    for i in range(1, n - 1):
        out.append(point_at_fraction(pl, i / (n - 1)))
    out.append(pl.vertices[-1])
    return out


def segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    """Distance from p to the closed segment ab."""
    ax, ay = b.x - a.x, b.y - a.y
    px, py = p.x - a.x, p.y - a.y
    den = ax * ax + ay * ay
    if den == 0.0:
        return math.hypot(px, py)
    t = (px * ax + py * ay) / den
    t = min(1.0, max(0.0, t))
    return math.hypot(px - t * ax, py - t * ay)


def point_on_segment(p: Point2, a: Point2, b: Point2) -> bool:
    """Exact test: p lies on the closed segment ab (no tolerance)."""
    cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    if cross != 0.0:
        return False
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def segments_properly_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool:
    """True if ab and cd cross at a single interior point of both."""
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    return ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    )


def segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool:
    """True if the closed segments ab and cd share any point."""
    if segments_properly_intersect(a, b, c, d):
        return True
    return (
        point_on_segment(c, a, b)
        or point_on_segment(d, a, b)
        or point_on_segment(a, c, d)
        or point_on_segment(b, c, d)
    )


def is_simple_polygon(pts: Sequence[Point2]) -> bool:
    """No repeated vertices, no edge crossings, no collinear double-backs."""
    n = len(pts)
    if n < 3:
        return False
    if len(set(pts)) != n:
        return False
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            c, d = pts[j], pts[(j + 1) % n]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share one endpoint; reject collinear double-backs
                if i == 0 and j == n - 1:
                    # closing edge c->d arrives at d == a; edge i leaves a for b
                    if _orient(c, d, b) == 0.0 and (b.x - a.x) * (a.x - c.x) + (
                        b.y - a.y
                    ) * (a.y - c.y) < 0:
                        return False
                else:
                    # edge i ends at b == c; edge j continues b->d
                    if _orient(a, b, d) == 0.0 and (d.x - b.x) * (b.x - a.x) + (
                        d.y - b.y
                    ) * (b.y - a.y) < 0:
                        return False
            elif segments_intersect(a, b, c, d):
                return False
    return True


def polygon_signed_area(pts: Sequence[Point2]) -> float:
    acc = 0.0
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        acc += a.x * b.y - b.x * a.y
    return 0.5 * acc


def _on_polygon_boundary(pts: Sequence[Point2], p: Point2) -> bool:
    n = len(pts)
    return any(point_on_segment(p, pts[i], pts[(i + 1) % n]) for i in range(n))


def _row_crossings(pts: Sequence[Point2], yc: float) -> list[float]:
    # half-open vertex rule keeps the crossing count even for any yc
    xs = []
    n = len(pts)
    for i in range(n):
        p, q = pts[i], pts[(i + 1) % n]
        if (p.y > yc) != (q.y > yc):
            xs.append(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y))
    xs.sort()
    return xs


def rasterize_polygon(poly: Sequence[Point2], grid) -> list[tuple[int, int]]:
    """(row, col) cells of grid whose center lies strictly inside poly.

    Even-odd rule; centers exactly on the boundary are excluded. Scanline over
    cell-center rows. grid is anything exposing width, height, resolution,
    origin_x, origin_y (e.g. map_io.OccupancyGrid); poly is in world meters.
    """
    pts = list(poly)
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise ValueError("polygon needs at least 3 distinct vertices")
    if not is_simple_polygon(pts):
        raise ValueError("self-intersecting polygon")
    res = grid.resolution
    ox, oy = grid.origin_x, grid.origin_y
    ys = [p.y for p in pts]
    r_lo = max(0, math.floor((min(ys) - oy) / res - 0.5) + 1)
    r_hi = min(grid.height - 1, math.ceil((max(ys) - oy) / res - 0.5) - 1)
    out: list[tuple[int, int]] = []
    for r in range(r_lo, r_hi + 1):
        yc = oy + (r + 0.5) * res
        xs = _row_crossings(pts, yc)
        for k in range(0, len(xs) - 1, 2):
            lo, hi = xs[k], xs[k + 1]
            c_lo = max(0, math.floor((lo - ox) / res - 0.5) + 1)
            c_hi = min(grid.width - 1, math.ceil((hi - ox) / res - 0.5) - 1)
            for c in range(c_lo, c_hi + 1):
                if not _on_polygon_boundary(pts, Point2(ox + (c + 0.5) * res, yc)):
                    out.append((r, c))
    return out


def supercover_cells(a: Point2, b: Point2, grid) -> list[tuple[int, int]]:
    """All (row, col) cells whose closed square the segment ab touches.

    Touching a shared cell boundary counts for both cells, so the result has
    no diagonal gaps. Works per row band: within each band the segment spans a
    contiguous closed x-interval.
    """
    res = grid.resolution
    ox, oy = grid.origin_x, grid.origin_y
    x0, y0, x1, y1 = a.x, a.y, b.x, b.y
    dx, dy = x1 - x0, y1 - y0
    v0, v1 = (y0 - oy) / res, (y1 - oy) / res
    vmin, vmax = min(v0, v1), max(v0, v1)
    r_lo = max(0, math.ceil(vmin) - 1)
    r_hi = min(grid.height - 1, math.floor(vmax))
    cells: list[tuple[int, int]] = []
    for r in range(r_lo, r_hi + 1):
        if dy == 0.0:
            xa, xb = x0, x1
        else:
            ta = (oy + r * res - y0) / dy
            tb = (oy + (r + 1) * res - y0) / dy
            t0, t1 = (ta, tb) if ta <= tb else (tb, ta)
            t0 = max(t0, 0.0)
            t1 = min(t1, 1.0)
            if t0 > t1:
                continue
            xa = x0 + t0 * dx
            xb = x0 + t1 * dx
        ua, ub = (xa - ox) / res, (xb - ox) / res
        umin, umax = (ua, ub) if ua <= ub else (ub, ua)
        c_lo = max(0, math.ceil(umin) - 1)
        c_hi = min(grid.width - 1, math.floor(umax))
        for c in range(c_lo, c_hi + 1):
            cells.append((r, c))
    return cells
