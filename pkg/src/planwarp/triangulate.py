"""Deterministic Delaunay triangulation with optional forced edges.

Plain point sets go through scipy's Qhull wrapper. Forced edges are then
recovered by flipping the triangulation edges that cross them (Sloan-style
walk), followed by local Delaunay restoration flips on unconstrained edges.
Output is canonicalized (CCW triangles, lowest vertex first, sorted list) so
identical input always yields identical output.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Iterable

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .geometry import Point2, segments_properly_intersect


class TriangulationError(ValueError):
    """Point set or constraint edges cannot be triangulated."""


def _canon(tri: tuple[int, int, int], pts: np.ndarray) -> tuple[int, int, int]:
    i, j, k = tri
    area2 = (pts[j, 0] - pts[i, 0]) * (pts[k, 1] - pts[i, 1]) - (
        pts[k, 0] - pts[i, 0]
    ) * (pts[j, 1] - pts[i, 1])
    if area2 < 0:
        j, k = k, j
    m = min(i, j, k)
    while i != m:
        i, j, k = j, k, i
    return (i, j, k)


def _edges_of(tri: tuple[int, int, int]) -> Iterable[tuple[int, int]]:
    i, j, k = tri
    yield (min(i, j), max(i, j))
    yield (min(j, k), max(j, k))
    yield (min(k, i), max(k, i))


def _edge_map(tris: set[tuple[int, int, int]]) -> dict[tuple[int, int], list]:
    em: dict[tuple[int, int], list] = defaultdict(list)
    for t in tris:
        for e in _edges_of(t):
            em[e].append(t)
    return em


def _third_vertex(tri: tuple[int, int, int], edge: tuple[int, int]) -> int:
    return next(v for v in tri if v not in edge)


def _flip(
    tris: set[tuple[int, int, int]],
    pts: np.ndarray,
    edge: tuple[int, int],
    t1: tuple[int, int, int],
    t2: tuple[int, int, int],
) -> tuple[int, int]:
    x = _third_vertex(t1, edge)
    y = _third_vertex(t2, edge)
    tris.remove(t1)
    tris.remove(t2)
    tris.add(_canon((x, y, edge[0]), pts))
    tris.add(_canon((x, y, edge[1]), pts))
    return (min(x, y), max(x, y))


def _recover_edge(tris: set, pts: np.ndarray, a: int, b: int) -> None:
    pa, pb = Point2(*pts[a]), Point2(*pts[b])
    target = (min(a, b), max(a, b))
    max_iter = 4 * len(tris) * len(tris) + 64
    for _ in range(max_iter):
        em = _edge_map(tris)
        if target in em:
            return
        crossing = [
            e
            for e in sorted(em)
            if a not in e
            and b not in e
            and segments_properly_intersect(Point2(*pts[e[0]]), Point2(*pts[e[1]]), pa, pb)
        ]
        if not crossing:
            raise TriangulationError(
                f"cannot force edge ({a}, {b}): no crossing edge left "
                "(a point may lie on the constraint segment)"
            )
        flipped = False
        for e in crossing:
            adj = em[e]
            if len(adj) != 2:
                continue
            px = Point2(*pts[_third_vertex(adj[0], e)])
            py = Point2(*pts[_third_vertex(adj[1], e)])
            # flip is only valid when the surrounding quad is strictly convex
            if segments_properly_intersect(Point2(*pts[e[0]]), Point2(*pts[e[1]]), px, py):
                _flip(tris, pts, e, adj[0], adj[1])
                flipped = True
                break
        if not flipped:
            raise TriangulationError(f"stuck while forcing edge ({a}, {b})")
    raise TriangulationError(f"edge recovery for ({a}, {b}) did not terminate")


def _in_circumcircle(pts: np.ndarray, tri: tuple[int, int, int], d: int) -> bool:
    # tri is CCW; positive determinant puts d strictly inside the circumcircle
    ax, ay = pts[tri[0]]
    bx, by = pts[tri[1]]
    cx, cy = pts[tri[2]]
    dx, dy = pts[d]
    m = np.array(
        [
            [ax - dx, ay - dy, (ax - dx) ** 2 + (ay - dy) ** 2],
            [bx - dx, by - dy, (bx - dx) ** 2 + (by - dy) ** 2],
            [cx - dx, cy - dy, (cx - dx) ** 2 + (cy - dy) ** 2],
        ]
    )
    scale = max(abs(m[:, :2]).max(), 1.0)
    return float(np.linalg.det(m)) > 1e-12 * scale**4


def _restore_delaunay(
    tris: set, pts: np.ndarray, constrained: set[tuple[int, int]]
) -> None:
    for _ in range(64 * len(tris) + 64):
        em = _edge_map(tris)
        flipped = False
        for e in sorted(em):
            if e in constrained:
                continue
            adj = em[e]
            if len(adj) != 2:
                continue
            x = _third_vertex(adj[0], e)
            y = _third_vertex(adj[1], e)
            if not _in_circumcircle(pts, adj[0], y) and not _in_circumcircle(
                pts, adj[1], x
            ):
                continue
            if segments_properly_intersect(
                Point2(*pts[e[0]]), Point2(*pts[e[1]]), Point2(*pts[x]), Point2(*pts[y])
            ):
                _flip(tris, pts, e, adj[0], adj[1])
                flipped = True
                break
        if not flipped:
            return


def triangulate(
    points: np.ndarray, constraint_edges: Iterable[tuple[int, int]] = ()
) -> np.ndarray:
    """Triangulate a 2D point set; returns (T, 3) vertex-index triples.

    Delaunay by default; constraint_edges are forced to appear as edges.
    Every input point appears in the result. Deterministic for identical
    input order.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n < 3:
        raise TriangulationError("need at least 3 points")
    constraints = set()
    for a, b in constraint_edges:
        a, b = int(a), int(b)
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise TriangulationError(f"invalid constraint edge ({a}, {b})")
        constraints.add((min(a, b), max(a, b)))

    if n == 3:
        tris = {_canon((0, 1, 2), pts)}
    else:
        try:
            d = Delaunay(pts)
        except QhullError as e:
            raise TriangulationError(f"degenerate point set: {e}") from e
        tris = {_canon(tuple(map(int, s)), pts) for s in d.simplices}
        used = {v for t in tris for v in t}
        missing = sorted(set(range(n)) - used)
        if missing:
            raise TriangulationError(
                f"points {missing} dropped by triangulation (near-degenerate input)"
            )

    if constraints:
        for a, b in sorted(constraints):
            _recover_edge(tris, pts, a, b)
        _restore_delaunay(tris, pts, constraints)

    return np.array(sorted(tris), dtype=np.int32)
