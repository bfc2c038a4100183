"""Random fixture builders shared by the property and acceptance tests.

Validity ground truth for correspondence sets is established here without
planwarp.triangulate: scipy's Delaunay is called directly and relative
triangle orientations are computed from the raw signed-area formula.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import Delaunay

from planwarp.geometry import Point2
from planwarp.map_io import FloorPlan, OccupancyGrid
from planwarp.mapping import CorrespondenceSet, PiecewiseAffineMap, build_map


def random_affine(rng: np.random.Generator, allow_reflection: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(A, t) with singular values in [0.3, 3] and optional reflection."""
    a1, a2 = rng.uniform(0, 2 * math.pi, 2)
    r1 = np.array([[math.cos(a1), -math.sin(a1)], [math.sin(a1), math.cos(a1)]])
    r2 = np.array([[math.cos(a2), -math.sin(a2)], [math.sin(a2), math.cos(a2)]])
    s = np.diag(rng.uniform(0.3, 3.0, 2))
    if allow_reflection and rng.random() < 0.5:
        s[0, 0] *= -1.0
    return r1 @ s @ r2, rng.uniform(-20.0, 20.0, 2)


def random_plan_points(rng: np.random.Generator, n: int, extent: float = 100.0) -> np.ndarray:
    """n well-separated, non-collinear points in [0, extent]^2."""
    min_sep = extent / (2.0 * n)
    while True:
        pts: list[np.ndarray] = []
        for _ in range(200):
            cand = rng.uniform(0.0, extent, 2)
            if all(np.hypot(*(cand - p)) > min_sep for p in pts):
                pts.append(cand)
            if len(pts) == n:
                break
        if len(pts) < n:
            continue
        arr = np.array(pts)
        d = arr - arr[0]
        far = int(np.argmax((d**2).sum(axis=1)))
        cross = d[:, 0] * d[far, 1] - d[:, 1] * d[far, 0]
        if np.abs(cross).max() > 1e-6 * extent**2:
            return arr


def relative_orientations(plan: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """sign(plan area) * sign(grid area) per Delaunay simplex of the plan points."""
    tris = Delaunay(plan).simplices
    out = []
    for t in tris:
        ap = _area(plan[t[0]], plan[t[1]], plan[t[2]])
        ag = _area(grid[t[0]], grid[t[1]], grid[t[2]])
        out.append(math.copysign(1.0, ap) * math.copysign(1.0, ag) if ap * ag != 0 else 0.0)
    return np.array(out)


def _area(a, b, c) -> float:
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


def to_cs(plan: np.ndarray, grid: np.ndarray) -> CorrespondenceSet:
    return CorrespondenceSet(
        tuple((Point2(*p), Point2(*g)) for p, g in zip(plan, grid))
    )


def random_affine_cs(
    rng: np.random.Generator, n: int | None = None, allow_reflection: bool = True
) -> tuple[CorrespondenceSet, np.ndarray, np.ndarray]:
    """Correspondences with grid = A(plan); returns (cs, A, t)."""
    n = n or int(rng.integers(4, 12))
    plan = random_plan_points(rng, n)
    a, t = random_affine(rng, allow_reflection)
    return to_cs(plan, plan @ a.T + t), a, t


def random_valid_map(rng: np.random.Generator, n: int | None = None) -> PiecewiseAffineMap:
    """Fold-over-free map: affine image plus jitter, rejection-checked for
    consistent orientation AND a gap/overlap-free image (sum of image triangle
    areas equals the image hull area), so round trips are well defined."""
    n = n or int(rng.integers(4, 12))
    while True:
        plan = random_plan_points(rng, n)
        a, t = random_affine(rng, allow_reflection=True)
        grid = plan @ a.T + t
        span = grid.max(axis=0) - grid.min(axis=0)
        grid = grid + rng.uniform(-0.02, 0.02, grid.shape) * np.hypot(*span)
        rel = relative_orientations(plan, grid)
        if len(set(rel.tolist())) != 1 or 0.0 in rel:
            continue
        tris = Delaunay(plan).simplices
        tri_area = sum(abs(_area(grid[t2[0]], grid[t2[1]], grid[t2[2]])) for t2 in tris)
        hull_area = _image_hull_area(plan, grid)
        if hull_area <= 0 or abs(tri_area - hull_area) > 1e-9 * hull_area:
            continue
        return build_map(to_cs(plan, grid))


def _image_hull_area(plan: np.ndarray, grid: np.ndarray) -> float:
    hull_idx = _convex_hull_order(plan)
    ring = grid[hull_idx]
    x, y = ring[:, 0], ring[:, 1]
    return abs(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _convex_hull_order(pts: np.ndarray) -> list[int]:
    from scipy.spatial import ConvexHull

    return list(ConvexHull(pts).vertices)


def folded_cs(rng: np.random.Generator, n: int | None = None) -> CorrespondenceSet:
    """Valid affine set with one grid vertex reflected across the opposite
    edge of one of its triangles; rejection keeps only mixed-orientation
    (genuinely folded) outcomes."""
    n = n or int(rng.integers(5, 12))
    while True:
        plan = random_plan_points(rng, n)
        a, t = random_affine(rng, allow_reflection=False)
        grid = plan @ a.T + t
        tris = Delaunay(plan).simplices
        tri = tris[rng.integers(len(tris))]
        v = int(tri[rng.integers(3)])
        others = [int(i) for i in tri if i != v]
        pa, pb = grid[others[0]], grid[others[1]]
        d = pb - pa
        proj = pa + d * float(np.dot(grid[v] - pa, d) / np.dot(d, d))
        grid2 = grid.copy()
        grid2[v] = 2 * proj - grid[v]
        rel = relative_orientations(plan, grid2)
        if 0.0 in rel or len(set(rel.tolist())) != 2:
            continue
        return to_cs(plan, grid2)


def sample_interior(rng: np.random.Generator, m: PiecewiseAffineMap, count: int) -> np.ndarray:
    """Points strictly inside the plan-side hull, sampled per triangle."""
    tri_idx = rng.integers(0, len(m.triangles), count)
    u = rng.uniform(0, 1, count)
    v = rng.uniform(0, 1, count)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    w = np.stack([1 - u - v, u, v], axis=1)
    w = 0.94 * w + 0.02  # pull toward the centroid to stay strictly inside
    corners = m.plan_points[m.triangles[tri_idx]]
    return np.einsum("pk,pkj->pj", w, corners)


def star_polygon(
    rng: np.random.Generator,
    center: tuple[float, float],
    n: int,
    r_min: float,
    r_max: float,
) -> list[Point2]:
    """Simple polygon by construction: sorted angles around a center, every
    angular gap in (0.05, pi - 0.05) so each edge stays inside its own wedge."""
    while True:
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        gaps = np.append(np.diff(angles), 2 * math.pi - angles[-1] + angles[0])
        if gaps.min() < 0.05 or gaps.max() > math.pi - 0.05:
            continue
        radii = rng.uniform(r_min, r_max, n)
        return [
            Point2(center[0] + r * math.cos(a), center[1] + r * math.sin(a))
            for a, r in zip(angles, radii)
        ]


def random_grid(rng: np.random.Generator, max_side: int = 12) -> OccupancyGrid:
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return OccupancyGrid(
        width=w,
        height=h,
        resolution=float(rng.uniform(0.05, 2.0)),
        origin_x=float(rng.uniform(-10, 10)),
        origin_y=float(rng.uniform(-10, 10)),
        cells=rng.integers(0, 3, (h, w)).astype(np.uint8),
        occupied_thresh=float(rng.uniform(0.3, 0.95)),
        free_thresh=float(rng.uniform(0.02, 0.19)),
        negate=bool(rng.random() < 0.5),
    )


def random_plan(rng: np.random.Generator) -> FloorPlan:
    from planwarp.geometry import Polyline

    w = int(rng.integers(10, 400))
    h = int(rng.integers(10, 400))
    strokes = []
    for _ in range(int(rng.integers(0, 6))):
        k = int(rng.integers(2, 8))
        pts: list[tuple[float, float]] = []
        while len(pts) < k:
            cand = (float(rng.uniform(0, w)), float(rng.uniform(0, h)))
            if not pts or cand != pts[-1]:
                pts.append(cand)
        strokes.append(Polyline.from_pairs(pts))
    backdrop = "sketch.png" if rng.random() < 0.3 else None
    return FloorPlan(width=w, height=h, strokes=tuple(strokes), backdrop=backdrop)


def corner_cs(width: float, height: float, transform=None) -> CorrespondenceSet:
    """Four plan corners; grid side optionally transformed."""
    corners = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]
    transform = transform or (lambda x, y: (x, y))
    return CorrespondenceSet(
        tuple((Point2(x, y), Point2(*transform(x, y))) for x, y in corners)
    )
