"""Map annotation: no-go regions drawn on the floor plan become occupied
"wall" cells in the grid, and grid-frame robot poses are projected onto the
plan (position through the map, heading through the containing triangle's
Jacobian)."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .geometry import Point2, Polyline, is_simple_polygon, rasterize_polygon, supercover_cells
from .mapping import (
    OutsideHullError,
    PiecewiseAffineMap,
    _map_point_detail,
    forward_polyline,
)

if TYPE_CHECKING:
    from .map_io import FloorPlan, OccupancyGrid


class RegionKind(Enum):
    NO_GO = "no_go"


class Frame(Enum):
    PLAN = "plan"
    GRID = "grid"


@dataclass(frozen=True)
class Region:
    """Labeled simple polygon in plan pixels."""

    label: str
    polygon: tuple[Point2, ...]
    kind: RegionKind = RegionKind.NO_GO

    def __post_init__(self) -> None:
        object.__setattr__(self, "polygon", tuple(self.polygon))
        if len(self.polygon) < 3:
            raise ValueError(f"region {self.label!r} needs at least 3 vertices")
        if not is_simple_polygon(self.polygon):
            raise ValueError(f"region {self.label!r} polygon is self-intersecting")


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose2D:
    position: Point2
    heading: float
    frame: Frame

    def __post_init__(self) -> None:
        if not math.isfinite(self.heading):
            raise ValueError(f"non-finite heading {self.heading!r}")
        object.__setattr__(self, "heading", normalize_angle(self.heading))


def region_cells(
    m: PiecewiseAffineMap, region: Region, grid: "OccupancyGrid"
) -> list[tuple[int, int]]:
    """Cells a region claims: interior by cell-center test plus the boundary
    supercover, so the wall is closed even when the region is thinner than a
    cell."""
    closed = Polyline(region.polygon + (region.polygon[0],))
    mapped = forward_polyline(m, closed, max_err=grid.resolution / 4.0)
    mv = mapped.vertices
    selected = set(rasterize_polygon(mv[:-1], grid))
    for a, b in zip(mv, mv[1:]):
        selected.update(supercover_cells(a, b, grid))
    return sorted(selected)


def burn_region(
    m: PiecewiseAffineMap, region: Region, grid: "OccupancyGrid"
) -> "OccupancyGrid":
    """New grid with the region's image burned in as OCCUPIED cells.

    Never clears a cell; applying twice equals applying once. Raises
    OutsideHullError if a polygon vertex falls outside the mapped hull and
    ValueError if the polygon self-intersects.
    """
    cells = grid.cells.copy()
    selected = region_cells(m, region, grid)
    if selected:
        rows, cols = zip(*selected)
        cells[list(rows), list(cols)] = 1  # CellState.OCCUPIED
    return replace(grid, cells=cells)


def map_pose(m: PiecewiseAffineMap, pose: Pose2D) -> Pose2D:
    """Transport a pose to the other frame.

    Position goes through the point map; the heading vector goes through the
    linear part of the containing triangle's affine and is renormalized, so
    similarity transforms shift the heading by exactly their rotation angle.
    """
    inverse = pose.frame == Frame.GRID
    hit = _map_point_detail(m, pose.position, inverse=inverse)
    if hit is None:
        raise OutsideHullError(
            f"pose position ({pose.position.x}, {pose.position.y}) outside the mapped hull"
        )
    point, tri = hit
    lin = (m._linear_inv if inverse else m._linear_fwd)[tri]
    h = np.array([math.cos(pose.heading), math.sin(pose.heading)])
    v = lin @ h
    norm = float(np.hypot(v[0], v[1]))
    if norm == 0.0:
        raise ValueError("degenerate heading image (map is not fold-over free?)")
    return Pose2D(
        position=point,
        heading=math.atan2(v[1], v[0]),
        frame=Frame.PLAN if inverse else Frame.GRID,
    )


# Region fill colors (cycled) and the pose marker color, mirroring the usual
# red/green region + blue robot convention.
_PALETTE = ((220, 50, 47), (64, 160, 70), (230, 155, 25), (150, 60, 200))
_POSE_COLOR = (35, 90, 220)
_GRID_GRAY = {0: 254, 1: 0, 2: 205}  # FREE, OCCUPIED, UNKNOWN
_PANE_GAP = 8


def _draw_pose_marker(draw: ImageDraw.ImageDraw, x: float, y: float, heading: float, size: float) -> None:
    tip = (x + size * math.cos(heading), y + size * math.sin(heading))
    left = (x + 0.45 * size * math.cos(heading + 2.5), y + 0.45 * size * math.sin(heading + 2.5))
    right = (x + 0.45 * size * math.cos(heading - 2.5), y + 0.45 * size * math.sin(heading - 2.5))
    draw.polygon([tip, left, (x, y), right], fill=_POSE_COLOR)


def render_overlay(
    m: PiecewiseAffineMap,
    plan: "FloorPlan",
    grid: "OccupancyGrid",
    regions: Sequence[Region] = (),
    pose: Pose2D | None = None,
) -> bytes:
    """Side-by-side PNG: plan pane (strokes, regions, pose marker) next to the
    grid pane (grayscale cells with burned regions tinted). Deterministic for
    fixed inputs."""
    left = Image.new("RGBA", (plan.width, plan.height), (255, 255, 255, 255))
    ld = ImageDraw.Draw(left)
    for stroke in plan.strokes:
        ld.line([(v.x, v.y) for v in stroke.vertices], fill=(20, 20, 20, 255), width=1)
    for i, region in enumerate(regions):
        color = _PALETTE[i % len(_PALETTE)]
        fill = Image.new("RGBA", left.size, (0, 0, 0, 0))
        fd = ImageDraw.Draw(fill)
        fd.polygon([(v.x, v.y) for v in region.polygon], fill=color + (110,), outline=color + (255,))
        left = Image.alpha_composite(left, fill)
    if pose is not None:
        plan_pose = pose if pose.frame == Frame.PLAN else map_pose(m, pose)
        _draw_pose_marker(
            ImageDraw.Draw(left), plan_pose.position.x, plan_pose.position.y,
            plan_pose.heading, size=max(8.0, plan.width / 30.0),
        )

    scale = max(1, round(plan.height / grid.height))
    gray = np.zeros((grid.height, grid.width), dtype=np.uint8)
    for state, value in _GRID_GRAY.items():
        gray[grid.cells == state] = value
    rgb = np.repeat(np.flipud(gray)[:, :, None], 3, axis=2).astype(np.float64)
    for i, region in enumerate(regions):
        color = np.array(_PALETTE[i % len(_PALETTE)], dtype=np.float64)
        for r, c in region_cells(m, region, grid):
            img_r = grid.height - 1 - r  # world y up, image y down
            rgb[img_r, c] = 0.5 * rgb[img_r, c] + 0.5 * color
    right = Image.fromarray(rgb.astype(np.uint8), "RGB").convert("RGBA")
    right = right.resize((grid.width * scale, grid.height * scale), Image.NEAREST)

    width = left.width + _PANE_GAP + right.width
    height = max(left.height, right.height)
    canvas = Image.new("RGBA", (width, height), (240, 240, 240, 255))
    canvas.paste(left, (0, 0))
    canvas.paste(right, (left.width + _PANE_GAP, 0))
    buf = io.BytesIO()
    canvas.convert("RGB").save(buf, "PNG")
    return buf.getvalue()
