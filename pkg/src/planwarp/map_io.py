"""Readers and writers for the on-disk artifacts: occupancy grids as binary
PGM + YAML metadata (the ROS map_server convention), vector floor plans as
JSON, and session files tying the two together with correspondences and
no-go regions.

Grid cell rows are stored bottom-up (row 0 has the smallest world y) while
PGM stores the top image row first, so parsing and serialization flip rows.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
import yaml

from .annotate import Region
from .geometry import Point2, Polyline


class MapFormatError(ValueError):
    """Malformed or inconsistent map/plan/session data."""


class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


# Canonical serialization pixel values. The negate=true row keeps the same
# occupancy fractions (1.0, 1/255, 50/255) as the negate=false row, so grids
# round-trip regardless of the flag.
_CANONICAL_PIXELS = {
    False: {CellState.OCCUPIED: 0, CellState.FREE: 254, CellState.UNKNOWN: 205},
    True: {CellState.OCCUPIED: 255, CellState.FREE: 1, CellState.UNKNOWN: 50},
}


@dataclass(frozen=True)
class OccupancyGrid:
    """SLAM-side map: (height, width) cell array plus metric metadata.

    cells[row, col] holds a CellState value; row 0 is the bottom
    (world-y-increasing) row. origin is the world position of the lower-left
    cell corner.
    """

    width: int
    height: int
    resolution: float
    origin_x: float
    origin_y: float
    cells: np.ndarray
    occupied_thresh: float = 0.65
    free_thresh: float = 0.196
    negate: bool = False

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise MapFormatError(f"bad grid size {self.width}x{self.height}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise MapFormatError(f"resolution must be > 0, got {self.resolution!r}")
        if not 0.0 <= self.free_thresh < self.occupied_thresh <= 1.0:
            raise MapFormatError(
                f"need 0 <= free_thresh < occupied_thresh <= 1, got "
                f"({self.free_thresh!r}, {self.occupied_thresh!r})"
            )
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.shape != (self.height, self.width):
            raise MapFormatError(
                f"cells shape {cells.shape} != (height, width) "
                f"({self.height}, {self.width})"
            )
        if not np.isin(cells, (0, 1, 2)).all():
            raise MapFormatError("cell values outside {FREE, OCCUPIED, UNKNOWN}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def cell_center(self, row: int, col: int) -> Point2:
        return Point2(
            self.origin_x + (col + 0.5) * self.resolution,
            self.origin_y + (row + 0.5) * self.resolution,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            (self.width, self.height, self.resolution, self.origin_x, self.origin_y,
             self.occupied_thresh, self.free_thresh, self.negate)
            == (other.width, other.height, other.resolution, other.origin_x,
                other.origin_y, other.occupied_thresh, other.free_thresh, other.negate)
            and np.array_equal(self.cells, other.cells)
        )


def _read_pgm(data: bytes) -> tuple[int, int, np.ndarray]:
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapFormatError("truncated PGM header")
        return data[start:pos]

    if token() != b"P5":
        raise MapFormatError("not a binary PGM (P5) file")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as e:
        raise MapFormatError(f"malformed PGM header: {e}") from e
    if width <= 0 or height <= 0:
        raise MapFormatError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise MapFormatError(f"unsupported PGM maxval {maxval} (must be 255)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MapFormatError("missing whitespace after PGM maxval")
    raster = data[pos + 1 :]
    if len(raster) < width * height:
        raise MapFormatError(
            f"truncated PGM pixel data: {len(raster)} bytes for {width}x{height}"
        )
    if len(raster) > width * height:
        raise MapFormatError("trailing bytes after PGM raster")
    return width, height, np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


_REQUIRED_YAML_KEYS = ("resolution", "origin", "occupied_thresh", "free_thresh", "negate")


def parse_grid(pgm_bytes: bytes, yaml_text: str) -> OccupancyGrid:
    """Decode a binary PGM + YAML metadata pair into an OccupancyGrid.

    Occupancy fraction per pixel v: p = (255 - v)/255 when negate is false,
    p = v/255 when true; then p > occupied_thresh -> OCCUPIED,
    p < free_thresh -> FREE, otherwise UNKNOWN.
    """
    try:
        meta = yaml.safe_load(yaml_text)
    except yaml.YAMLError as e:
        raise MapFormatError(f"bad YAML metadata: {e}") from e
    if not isinstance(meta, dict):
        raise MapFormatError("YAML metadata is not a mapping")
    for key in _REQUIRED_YAML_KEYS:
        if key not in meta:
            raise MapFormatError(f"missing YAML key {key!r}")
    origin = meta["origin"]
    if not isinstance(origin, (list, tuple)) or len(origin) != 3:
        raise MapFormatError(f"origin must be [x, y, yaw], got {origin!r}")
    if float(origin[2]) != 0.0:
        raise MapFormatError("non-zero origin yaw is not supported")
    negate = meta["negate"]
    if negate not in (0, 1, True, False):
        raise MapFormatError(f"negate must be 0 or 1, got {negate!r}")
    negate = bool(negate)

    width, height, pixels = _read_pgm(pgm_bytes)
    p = pixels / 255.0 if negate else (255 - pixels) / 255.0
    occ = float(meta["occupied_thresh"])
    free = float(meta["free_thresh"])
    states = np.where(
        p > occ, CellState.OCCUPIED, np.where(p < free, CellState.FREE, CellState.UNKNOWN)
    ).astype(np.uint8)
    return OccupancyGrid(
        width=width,
        height=height,
        resolution=float(meta["resolution"]),
        origin_x=float(origin[0]),
        origin_y=float(origin[1]),
        cells=np.flipud(states),
        occupied_thresh=occ,
        free_thresh=free,
        negate=negate,
    )


def serialize_grid(grid: OccupancyGrid, image_name: str = "map.pgm") -> tuple[bytes, str]:
    """Canonical PGM bytes + YAML text for a grid; parse_grid inverts it."""
    lut = np.zeros(3, dtype=np.uint8)
    for state, pixel in _CANONICAL_PIXELS[grid.negate].items():
        lut[state] = pixel
    pgm = (
        b"P5\n%d %d\n255\n" % (grid.width, grid.height)
        + np.flipud(lut[grid.cells]).tobytes()
    )
    meta = {
        "image": image_name,
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin_x), float(grid.origin_y), 0.0],
        "occupied_thresh": float(grid.occupied_thresh),
        "free_thresh": float(grid.free_thresh),
        "negate": int(grid.negate),
    }
    return pgm, yaml.safe_dump(meta, sort_keys=False, default_flow_style=None)


@dataclass(frozen=True)
class FloorPlan:
    """Human-side map: polyline strokes in a [0, width] x [0, height] pixel frame."""

    width: int
    height: int
    strokes: tuple[Polyline, ...] = ()
    backdrop: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "strokes", tuple(self.strokes))
        if self.width <= 0 or self.height <= 0:
            raise MapFormatError(f"bad plan size {self.width}x{self.height}")
        for stroke in self.strokes:
            for v in stroke.vertices:
                if not (0 <= v.x <= self.width and 0 <= v.y <= self.height):
                    raise MapFormatError(
                        f"stroke vertex ({v.x}, {v.y}) outside plan bounds "
                        f"{self.width}x{self.height}"
                    )


def parse_plan(json_text: str) -> FloorPlan:
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise MapFormatError(f"bad plan JSON: {e}") from e
    if not isinstance(obj, dict):
        raise MapFormatError("plan JSON is not an object")
    for key in ("width", "height", "strokes"):
        if key not in obj:
            raise MapFormatError(f"missing plan key {key!r}")
    try:
        strokes = tuple(Polyline.from_pairs(s) for s in obj["strokes"])
    except (TypeError, ValueError) as e:
        raise MapFormatError(f"bad stroke: {e}") from e
    return FloorPlan(
        width=int(obj["width"]),
        height=int(obj["height"]),
        strokes=strokes,
        backdrop=obj.get("backdrop"),
    )


def plan_to_dict(plan: FloorPlan) -> dict:
    return {
        "width": plan.width,
        "height": plan.height,
        "strokes": [[[v.x, v.y] for v in s.vertices] for s in plan.strokes],
        "backdrop": plan.backdrop,
    }


def serialize_plan(plan: FloorPlan) -> str:
    return json.dumps(plan_to_dict(plan))


@dataclass(frozen=True)
class SessionFile:
    """Batch session: map file paths plus clicked pairs and drawn regions.

    Correspondence plan points are in plan pixels, grid points in world
    meters. Paths are interpreted relative to the session file's directory.
    """

    plan_path: str
    grid_path: str
    correspondences: tuple[tuple[Point2, Point2], ...] = ()
    regions: tuple[Region, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.plan_path or not self.grid_path:
            raise MapFormatError("session needs non-empty plan and grid paths")
        if len(self.correspondences) < 3:
            raise MapFormatError(
                f"session needs at least 3 correspondences, got {len(self.correspondences)}"
            )


def parse_session(json_text: str) -> SessionFile:
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise MapFormatError(f"bad session JSON: {e}") from e
    if not isinstance(obj, dict):
        raise MapFormatError("session JSON is not an object")
    for key in ("plan", "grid", "correspondences"):
        if key not in obj:
            raise MapFormatError(f"missing session key {key!r}")
    try:
        pairs = tuple(
            (Point2(float(p[0]), float(p[1])), Point2(float(g[0]), float(g[1])))
            for p, g in obj["correspondences"]
        )
        regions = tuple(
            Region(
                label=str(r.get("label", "region")),
                polygon=tuple(Point2(float(x), float(y)) for x, y in r["polygon"]),
            )
            for r in obj.get("regions", [])
        )
    except (TypeError, KeyError, IndexError, ValueError) as e:
        if isinstance(e, MapFormatError):
            raise
        raise MapFormatError(f"bad session payload: {e}") from e
    return SessionFile(
        plan_path=str(obj["plan"]),
        grid_path=str(obj["grid"]),
        correspondences=pairs,
        regions=regions,
    )


def serialize_session(session: SessionFile) -> str:
    return json.dumps(
        {
            "plan": session.plan_path,
            "grid": session.grid_path,
            "correspondences": [
                [[p.x, p.y], [g.x, g.y]] for p, g in session.correspondences
            ],
            "regions": [
                {"label": r.label, "polygon": [[v.x, v.y] for v in r.polygon]}
                for r in session.regions
            ],
        }
    )


def load_plan(path: str | Path) -> FloorPlan:
    return parse_plan(Path(path).read_text())


def load_grid(yaml_path: str | Path) -> OccupancyGrid:
    """Read YAML metadata, then the PGM it names (relative to the YAML)."""
    yaml_path = Path(yaml_path)
    yaml_text = yaml_path.read_text()
    try:
        meta = yaml.safe_load(yaml_text)
    except yaml.YAMLError as e:
        raise MapFormatError(f"bad YAML metadata: {e}") from e
    if not isinstance(meta, dict) or "image" not in meta:
        raise MapFormatError("grid YAML must name its PGM under the 'image' key")
    pgm_path = yaml_path.parent / str(meta["image"])
    return parse_grid(pgm_path.read_bytes(), yaml_text)


def save_grid(grid: OccupancyGrid, out_dir: str | Path, stem: str = "map") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pgm, yaml_text = serialize_grid(grid, image_name=f"{stem}.pgm")
    pgm_path = out_dir / f"{stem}.pgm"
    yaml_path = out_dir / f"{stem}.yaml"
    pgm_path.write_bytes(pgm)
    yaml_path.write_text(yaml_text)
    return pgm_path, yaml_path


def load_session(path: str | Path) -> tuple[SessionFile, FloorPlan, OccupancyGrid]:
    path = Path(path)
    session = parse_session(path.read_text())
    plan = load_plan(path.parent / session.plan_path)
    grid = load_grid(path.parent / session.grid_path)
    for r in session.regions:
        for v in r.polygon:
            if not (0 <= v.x <= plan.width and 0 <= v.y <= plan.height):
                raise MapFormatError(
                    f"region {r.label!r} vertex ({v.x}, {v.y}) outside plan bounds"
                )
    return session, plan, grid
