"""Bidirectional piecewise-affine mapping between the floor-plan frame and
the occupancy-grid world frame, built from user-clicked point pairs.

The plan-side point set is triangulated once and the grid side reuses the
same vertex indices, so each triangle pair carries its own affine transform
and the two sides stay in one-to-one correspondence. Evaluation transports
barycentric weights between paired triangles: values are continuous across
shared edges (only derivatives jump), and a point outside the triangulated
hull maps to nothing rather than being extrapolated.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import (
    INSIDE_TOL,
    Point2,
    Polyline,
    Triangle,
    point_at_fraction,
    segment_distance,
)
from .triangulate import TriangulationError, triangulate

# Subdivision depth cap for polyline refinement.
_MAX_REFINE_DEPTH = 12
# Relative signed-area threshold for degenerate mapped triangles.
_DEGENERATE_REL_TOL = 1e-12


class MappingError(ValueError):
    """A correspondence set cannot produce a valid bijection."""


class DuplicatePointError(MappingError):
    pass


class CollinearPointsError(MappingError):
    pass


class FoldOverError(MappingError):
    """Some grid triangles flip orientation (or collapse), breaking bijectivity.

    triangles holds the offending vertex-index triples so a UI can highlight
    the correspondences to fix.
    """

    def __init__(self, message: str, triangles: tuple[tuple[int, int, int], ...]):
        super().__init__(message)
        self.triangles = triangles


class OutsideHullError(ValueError):
    """A point that must be mapped lies outside the triangulated hull."""


@dataclass(frozen=True)
class CorrespondenceSet:
    """Ordered (plan point, grid point) pairs; optionally forced triangulation edges."""

    pairs: tuple[tuple[Point2, Point2], ...]
    constraint_edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "constraint_edges", tuple(self.constraint_edges))
        if len(self.pairs) < 3:
            raise MappingError(
                f"need at least 3 correspondence pairs, got {len(self.pairs)}"
            )
        seen_plan: dict[Point2, int] = {}
        seen_grid: dict[Point2, int] = {}
        for i, (p, g) in enumerate(self.pairs):
            if p in seen_plan:
                raise DuplicatePointError(
                    f"plan point ({p.x}, {p.y}) repeated at pairs {seen_plan[p]} and {i}"
                )
            if g in seen_grid:
                raise DuplicatePointError(
                    f"grid point ({g.x}, {g.y}) repeated at pairs {seen_grid[g]} and {i}"
                )
            seen_plan[p] = i
            seen_grid[g] = i


def _bbox_diag_sq(pts: np.ndarray) -> float:
    span = pts.max(axis=0) - pts.min(axis=0)
    return float(span[0] ** 2 + span[1] ** 2)


def _all_collinear(pts: np.ndarray) -> bool:
    base = pts[0]
    d = pts - base
    far = int(np.argmax((d**2).sum(axis=1)))
    if not (d[far] ** 2).sum() > 0:
        return True
    cross = d[:, 0] * d[far, 1] - d[:, 1] * d[far, 0]
    return bool((np.abs(cross) <= _DEGENERATE_REL_TOL * _bbox_diag_sq(pts)).all())


def _signed_areas(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    return 0.5 * (
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    )


def _tri_diag_sq(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    corners = pts[tris]  # (T, 3, 2)
    span = corners.max(axis=1) - corners.min(axis=1)
    return span[:, 0] ** 2 + span[:, 1] ** 2


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """Shared triangulation with per-triangle affine pairs.

    plan_points/grid_points are (N, 2) arrays in pair order; triangles is a
    (T, 3) array of vertex indices valid on both sides.
    """

    plan_points: np.ndarray
    grid_points: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        for name in ("plan_points", "grid_points", "triangles"):
            arr = np.ascontiguousarray(
                getattr(self, name), dtype=np.int32 if name == "triangles" else np.float64
            )
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def triangles_plan(self) -> tuple[Triangle, ...]:
        return self._tri_tuple(self.plan_points)

    @property
    def triangles_grid(self) -> tuple[Triangle, ...]:
        return self._tri_tuple(self.grid_points)

    def _tri_tuple(self, pts: np.ndarray) -> tuple[Triangle, ...]:
        return tuple(
            Triangle(Point2(*pts[i]), Point2(*pts[j]), Point2(*pts[k]))
            for i, j, k in self.triangles
        )

    # Per-triangle solve data: columns of P are (v1-v0, v2-v0); weights
    # (l1, l2) = P^-1 (p - v0) and l0 = 1 - l1 - l2.
    @cached_property
    def _plan_solve(self) -> tuple[np.ndarray, np.ndarray]:
        return self._solve_data(self.plan_points)

    @cached_property
    def _grid_solve(self) -> tuple[np.ndarray, np.ndarray]:
        return self._solve_data(self.grid_points)

    def _solve_data(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v0 = pts[self.triangles[:, 0]]
        e1 = pts[self.triangles[:, 1]] - v0
        e2 = pts[self.triangles[:, 2]] - v0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        inv = np.empty((len(self.triangles), 2, 2))
        inv[:, 0, 0] = e2[:, 1] / det
        inv[:, 0, 1] = -e2[:, 0] / det
        inv[:, 1, 0] = -e1[:, 1] / det
        inv[:, 1, 1] = e1[:, 0] / det
        return v0, inv

    @cached_property
    def _linear_fwd(self) -> np.ndarray:
        return self._linear_parts(self.plan_points, self.grid_points)

    @cached_property
    def _linear_inv(self) -> np.ndarray:
        return self._linear_parts(self.grid_points, self.plan_points)

    def _linear_parts(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        """Jacobian of each triangle's src->dst affine (heading pushforward)."""
        s0 = src[self.triangles[:, 0]]
        s1 = src[self.triangles[:, 1]] - s0
        s2 = src[self.triangles[:, 2]] - s0
        d0 = dst[self.triangles[:, 0]]
        d1 = dst[self.triangles[:, 1]] - d0
        d2 = dst[self.triangles[:, 2]] - d0
        det = s1[:, 0] * s2[:, 1] - s1[:, 1] * s2[:, 0]
        lin = np.empty((len(self.triangles), 2, 2))
        # dst edge matrix [d1 d2] times inverse of src edge matrix [s1 s2]
        lin[:, 0, 0] = (d1[:, 0] * s2[:, 1] - d2[:, 0] * s1[:, 1]) / det
        lin[:, 0, 1] = (d2[:, 0] * s1[:, 0] - d1[:, 0] * s2[:, 0]) / det
        lin[:, 1, 0] = (d1[:, 1] * s2[:, 1] - d2[:, 1] * s1[:, 1]) / det
        lin[:, 1, 1] = (d2[:, 1] * s1[:, 0] - d1[:, 1] * s2[:, 0]) / det
        return lin


def build_map(cs: CorrespondenceSet) -> PiecewiseAffineMap:
    """Triangulate the plan points and pair each triangle with its grid image.

    Raises CollinearPointsError for flat input and FoldOverError (naming the
    offending triangles) when any grid triangle degenerates or flips
    orientation relative to the rest.
    """
    plan = np.array([[p.x, p.y] for p, _ in cs.pairs], dtype=np.float64)
    grid = np.array([[g.x, g.y] for _, g in cs.pairs], dtype=np.float64)
    if _all_collinear(plan):
        raise CollinearPointsError("plan points are collinear; spread the clicks out")
    tris = triangulate(plan, cs.constraint_edges)

    areas_plan = _signed_areas(plan, tris)
    areas_grid = _signed_areas(grid, tris)
    degen_plan = np.abs(areas_plan) <= _DEGENERATE_REL_TOL * _tri_diag_sq(plan, tris)
    if degen_plan.any():
        raise TriangulationError(
            f"degenerate plan triangles {[tuple(t) for t in tris[degen_plan]]}"
        )
    degenerate = np.abs(areas_grid) <= _DEGENERATE_REL_TOL * _tri_diag_sq(grid, tris)
    rel = np.sign(areas_plan) * np.sign(areas_grid)
    majority = 1.0 if (rel > 0).sum() >= (rel < 0).sum() else -1.0
    offending = degenerate | (rel != majority)
    if offending.any():
        bad = tuple(tuple(int(v) for v in t) for t in tris[offending])
        raise FoldOverError(
            f"fold-over: grid triangles {list(bad)} flip orientation or collapse; "
            "adjust those correspondences",
            triangles=bad,
        )
    return PiecewiseAffineMap(plan, grid, tris)


def _locate_weights(
    points: np.ndarray, v0: np.ndarray, inv: np.ndarray, tol: float = INSIDE_TOL
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest containing triangle per point, its weights, and a found mask."""
    d = points[:, None, :] - v0[None, :, :]  # (P, T, 2)
    l1 = inv[None, :, 0, 0] * d[:, :, 0] + inv[None, :, 0, 1] * d[:, :, 1]
    l2 = inv[None, :, 1, 0] * d[:, :, 0] + inv[None, :, 1, 1] * d[:, :, 1]
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)  # (P, T)
    idx = np.argmax(inside, axis=1)
    rows = np.arange(len(points))
    found = inside[rows, idx]
    weights = np.stack([l0[rows, idx], l1[rows, idx], l2[rows, idx]], axis=1)
    return idx, weights, found


def _transport(
    m: PiecewiseAffineMap, points: np.ndarray, inverse: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    src_v0, src_inv = m._grid_solve if inverse else m._plan_solve
    dst_pts = m.plan_points if inverse else m.grid_points
    idx, w, found = _locate_weights(points, src_v0, src_inv)
    corners = dst_pts[m.triangles[idx]]  # (P, 3, 2)
    out = np.einsum("pk,pkj->pj", w, corners)
    return out, idx, found


def forward_many(m: PiecewiseAffineMap, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map (P, 2) plan points to grid points; second output flags points inside the hull."""
    out, _, found = _transport(m, np.asarray(points, dtype=np.float64), inverse=False)
    return out, found


def inverse_many(m: PiecewiseAffineMap, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out, _, found = _transport(m, np.asarray(points, dtype=np.float64), inverse=True)
    return out, found


def _map_point_detail(
    m: PiecewiseAffineMap, p: Point2, inverse: bool
) -> tuple[Point2, int] | None:
    out, idx, found = _transport(m, np.array([[p.x, p.y]]), inverse)
    if not found[0]:
        return None
    return Point2(float(out[0, 0]), float(out[0, 1])), int(idx[0])


def forward(m: PiecewiseAffineMap, p_plan: Point2) -> Point2 | None:
    """Plan-frame point to grid frame; None when outside the plan hull."""
    hit = _map_point_detail(m, p_plan, inverse=False)
    return None if hit is None else hit[0]


def inverse(m: PiecewiseAffineMap, p_grid: Point2) -> Point2 | None:
    """Grid-frame point to plan frame; None when outside the grid-side hull."""
    hit = _map_point_detail(m, p_grid, inverse=True)
    return None if hit is None else hit[0]


def transport_via_triangle(
    m: PiecewiseAffineMap, tri_index: int, p: Point2, inverse: bool = False
) -> Point2:
    """Evaluate through one specific triangle (edge-continuity checks)."""
    src_v0, src_inv = m._grid_solve if inverse else m._plan_solve
    dst = m.plan_points if inverse else m.grid_points
    d = np.array([p.x, p.y]) - src_v0[tri_index]
    l1 = src_inv[tri_index, 0, 0] * d[0] + src_inv[tri_index, 0, 1] * d[1]
    l2 = src_inv[tri_index, 1, 0] * d[0] + src_inv[tri_index, 1, 1] * d[1]
    corners = dst[m.triangles[tri_index]]
    out = (1.0 - l1 - l2) * corners[0] + l1 * corners[1] + l2 * corners[2]
    return Point2(float(out[0]), float(out[1]))


def _unique_edges(tris: np.ndarray) -> list[tuple[int, int]]:
    edges = set()
    for i, j, k in tris:
        edges.add((min(i, j), max(i, j)))
        edges.add((min(j, k), max(j, k)))
        edges.add((min(k, i), max(k, i)))
    return sorted(edges)


def _crossing_params(src_pts: np.ndarray, tris: np.ndarray, a: Point2, b: Point2) -> list[float]:
    """Parameters in (0, 1) where segment ab crosses triangulation edges."""
    ts: list[float] = []
    abx, aby = b.x - a.x, b.y - a.y
    for i, j in _unique_edges(tris):
        cx, cy = src_pts[i]
        dx, dy = src_pts[j]
        ex, ey = dx - cx, dy - cy
        den = abx * ey - aby * ex
        if den == 0.0:
            continue
        t = ((cx - a.x) * ey - (cy - a.y) * ex) / den
        s = ((cx - a.x) * aby - (cy - a.y) * abx) / den
        if 0.0 < t < 1.0 and -1e-12 <= s <= 1.0 + 1e-12:
            ts.append(t)
    ts.sort()
    merged: list[float] = []
    for t in ts:
        if not merged or t - merged[-1] > 1e-12:
            merged.append(t)
    return merged


def _map_or_raise(m: PiecewiseAffineMap, p: Point2, inverse: bool) -> Point2:
    hit = _map_point_detail(m, p, inverse)
    if hit is None:
        raise OutsideHullError(f"point ({p.x}, {p.y}) is outside the mapped hull")
    return hit[0]


def _refine(
    m: PiecewiseAffineMap,
    p0: Point2,
    q0: Point2,
    p1: Point2,
    q1: Point2,
    max_err: float,
    inverse: bool,
    depth: int,
) -> list[tuple[Point2, Point2]]:
    if depth >= _MAX_REFINE_DEPTH:
        return []
    pm = Point2(0.5 * (p0.x + p1.x), 0.5 * (p0.y + p1.y))
    qm = _map_or_raise(m, pm, inverse)
    if segment_distance(qm, q0, q1) <= max_err:
        return []
    return (
        _refine(m, p0, q0, pm, qm, max_err, inverse, depth + 1)
        + [(pm, qm)]
        + _refine(m, pm, qm, p1, q1, max_err, inverse, depth + 1)
    )


def _map_polyline(
    m: PiecewiseAffineMap, pl: Polyline, max_err: float, inverse: bool
) -> Polyline:
    if not max_err > 0:
        raise ValueError(f"max_err must be > 0, got {max_err!r}")
    src_pts = m.grid_points if inverse else m.plan_points
    dst_pts = m.plan_points if inverse else m.grid_points
    images = [_map_or_raise(m, v, inverse) for v in pl.vertices]

    # (source, image, was_inserted) triples along the whole polyline
    chain: list[tuple[Point2, Point2, bool]] = [(pl.vertices[0], images[0], False)]
    for a, b, qa, qb in zip(pl.vertices, pl.vertices[1:], images, images[1:]):
        pieces: list[tuple[Point2, Point2]] = [(a, qa)]
        for t in _crossing_params(src_pts, m.triangles, a, b):
            pt = Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            pieces.append((pt, _map_or_raise(m, pt, inverse)))
        pieces.append((b, qb))
        for (p0, q0), (p1, q1) in zip(pieces, pieces[1:]):
            for pm, qm in _refine(m, p0, q0, p1, q1, max_err, inverse, 0):
                chain.append((pm, qm, True))
            if (p1, q1) != pieces[-1]:
                chain.append((p1, q1, True))
        chain.append((b, qb, False))

    # prune inserted vertices whose image is collinear with its neighbours:
    # identity or globally-affine maps then return the input polyline
    span = dst_pts.max(axis=0) - dst_pts.min(axis=0)
    eps = min(1e-9 * float(np.hypot(span[0], span[1])), 0.25 * max_err)
    pruned = True
    while pruned:
        pruned = False
        for i in range(1, len(chain) - 1):
            if not chain[i][2]:
                continue
            if segment_distance(chain[i][1], chain[i - 1][1], chain[i + 1][1]) <= eps:
                del chain[i]
                pruned = True
                break

    out: list[Point2] = []
    for _, q, _ins in chain:
        if not out or q != out[-1]:
            out.append(q)
    return Polyline(tuple(out))


def forward_polyline(m: PiecewiseAffineMap, pl: Polyline, max_err: float) -> Polyline:
    """Map a plan polyline to the grid frame, bending it where triangles change.

    Vertices are inserted at triangle-edge crossings and wherever a source
    midpoint's image strays more than max_err (grid units) from the mapped
    segment; inserted vertices that end up collinear are dropped again.
    Raises OutsideHullError if any vertex is outside the hull.
    """
    return _map_polyline(m, pl, max_err, inverse=False)


def inverse_polyline(m: PiecewiseAffineMap, pl: Polyline, max_err: float) -> Polyline:
    """Grid-to-plan counterpart of forward_polyline (max_err in plan pixels)."""
    return _map_polyline(m, pl, max_err, inverse=True)


@dataclass(frozen=True)
class CurvePair:
    """Two user-drawn curves to be matched by arc length; tolerance is the
    allowed chord deviation, checked in each curve's own frame units."""

    curve_plan: Polyline
    curve_grid: Polyline
    tolerance: float

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance!r}")


@dataclass(frozen=True)
class CurveCorrespondence:
    """Matched samples: one shared arc-length fraction set, evaluated on both curves."""

    fractions: tuple[float, ...]
    pairs: tuple[tuple[Point2, Point2], ...]


def _vertex_fractions(pl: Polyline) -> list[float]:
    total = pl.total_length
    return [c / total for c in pl.cumulative_lengths]


def _chord_deviation(pl: Polyline, fractions: list[float]) -> tuple[float, float]:
    """(worst distance, its fraction) from curve vertices to the chord polyline."""
    chord = [point_at_fraction(pl, f) for f in fractions]
    worst_d, worst_f = 0.0, 0.0
    for v, f in zip(pl.vertices, _vertex_fractions(pl)):
        d = min(
            segment_distance(v, chord[k], chord[k + 1]) for k in range(len(chord) - 1)
        )
        if d > worst_d and 0.0 < f < 1.0:
            worst_d, worst_f = d, f
    return worst_d, worst_f


def correspond_curves(cp: CurvePair) -> CurveCorrespondence:
    """Split a drawn curve pair into matched samples by adaptive refinement.

    Starting from the endpoints, the arc-length fraction of the worst chord
    deviation (on whichever curve deviates most) is inserted into the shared
    fraction set until both chords track their curves within cp.tolerance.
    """
    for pl in (cp.curve_plan, cp.curve_grid):
        if pl.total_length <= 0:
            raise ValueError("zero-length curve")
    fractions = [0.0, 1.0]
    for _ in range(len(cp.curve_plan.vertices) + len(cp.curve_grid.vertices) + 4):
        worst_d, worst_f = 0.0, None
        for pl in (cp.curve_plan, cp.curve_grid):
            d, f = _chord_deviation(pl, fractions)
            if d > worst_d:
                worst_d, worst_f = d, f
        if worst_d <= cp.tolerance or worst_f is None:
            break
        i = bisect.bisect_left(fractions, worst_f)
        if i < len(fractions) and abs(fractions[i] - worst_f) <= 1e-12:
            break
        if i > 0 and abs(fractions[i - 1] - worst_f) <= 1e-12:
            break
        fractions.insert(i, worst_f)
    pairs = tuple(
        (point_at_fraction(cp.curve_plan, f), point_at_fraction(cp.curve_grid, f))
        for f in fractions
    )
    return CurveCorrespondence(fractions=tuple(fractions), pairs=pairs)


def mapping_to_json(m: PiecewiseAffineMap) -> str:
    return json.dumps(
        {
            "plan_points": m.plan_points.tolist(),
            "grid_points": m.grid_points.tolist(),
            "triangles": m.triangles.tolist(),
        }
    )


def mapping_from_json(text: str) -> PiecewiseAffineMap:
    try:
        obj = json.loads(text)
        return PiecewiseAffineMap(
            np.array(obj["plan_points"], dtype=np.float64),
            np.array(obj["grid_points"], dtype=np.float64),
            np.array(obj["triangles"], dtype=np.int32),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise MappingError(f"bad mapping JSON: {e}") from e
