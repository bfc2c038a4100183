"""planwarp: piecewise-affine bridge between sketched floor plans and SLAM
occupancy grids.

Click point pairs on both maps, build a bijective piecewise-affine mapping,
then project robot poses onto the plan or burn plan-drawn no-go regions into
the grid as walls.
"""

from .annotate import Frame, Pose2D, Region, burn_region, map_pose, render_overlay
from .geometry import Point2, Polyline, Triangle
from .map_io import (
    CellState,
    FloorPlan,
    MapFormatError,
    OccupancyGrid,
    SessionFile,
    parse_grid,
    parse_plan,
    parse_session,
    serialize_grid,
    serialize_plan,
    serialize_session,
)
from .mapping import (
    CorrespondenceSet,
    CurvePair,
    FoldOverError,
    MappingError,
    OutsideHullError,
    PiecewiseAffineMap,
    build_map,
    correspond_curves,
    forward,
    forward_polyline,
    inverse,
    inverse_polyline,
)

__version__ = "0.1.0"

__all__ = [
    "CellState",
    "CorrespondenceSet",
    "CurvePair",
    "FloorPlan",
    "FoldOverError",
    "Frame",
    "MapFormatError",
    "MappingError",
    "OccupancyGrid",
    "OutsideHullError",
    "PiecewiseAffineMap",
    "Point2",
    "Polyline",
    "Pose2D",
    "Region",
    "SessionFile",
    "Triangle",
    "build_map",
    "burn_region",
    "correspond_curves",
    "forward",
    "forward_polyline",
    "inverse",
    "inverse_polyline",
    "map_pose",
    "parse_grid",
    "parse_plan",
    "parse_session",
    "render_overlay",
    "serialize_grid",
    "serialize_plan",
    "serialize_session",
]
