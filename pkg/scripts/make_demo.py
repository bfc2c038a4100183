#!/usr/bin/env python3
"""Generate a self-contained demo dataset under demo/ (or a given directory):
a vector floor plan, a synthetic "SLAM-style" occupancy grid (the plan walls
pushed through a mild affine warp plus sensor-ish noise), and a session file
with corner correspondences and one no-go region.
"""
from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from planwarp.geometry import Point2, Polyline, supercover_cells
from planwarp.map_io import CellState, FloorPlan, OccupancyGrid, save_grid, serialize_plan


@dataclass
class DemoConfig:
    out_dir: Path
    plan_width: int = 400
    plan_height: int = 300
    grid_width: int = 80
    grid_height: int = 60
    resolution: float = 0.1
    origin_x: float = -1.0
    origin_y: float = -0.5
    rotation_deg: float = 4.0
    noise_cells: int = 60
    seed: int = 2024


def plan_strokes() -> tuple[Polyline, ...]:
    outline = [(20, 20), (380, 20), (380, 280), (20, 280), (20, 20)]
    table = [(150, 120), (250, 120), (250, 170), (150, 170), (150, 120)]
    door_gap = [(20, 130), (20, 170)]
    return (
        Polyline.from_pairs(outline),
        Polyline.from_pairs(table),
        Polyline.from_pairs(door_gap),
    )


def plan_to_world(cfg: DemoConfig, x: float, y: float) -> tuple[float, float]:
    """Mild similarity warp standing in for SLAM drift."""
    sx = cfg.grid_width * cfg.resolution / cfg.plan_width
    sy = cfg.grid_height * cfg.resolution / cfg.plan_height
    wx = cfg.origin_x + x * sx
    wy = cfg.origin_y + y * sy
    ang = math.radians(cfg.rotation_deg)
    cx = cfg.origin_x + cfg.grid_width * cfg.resolution / 2
    cy = cfg.origin_y + cfg.grid_height * cfg.resolution / 2
    dx, dy = wx - cx, wy - cy
    return (
        cx + dx * math.cos(ang) - dy * math.sin(ang),
        cy + dx * math.sin(ang) + dy * math.cos(ang),
    )


def synth_grid(cfg: DemoConfig, plan: FloorPlan) -> OccupancyGrid:
    rng = np.random.default_rng(cfg.seed)
    cells = np.full((cfg.grid_height, cfg.grid_width), CellState.UNKNOWN, dtype=np.uint8)
    probe = OccupancyGrid(
        cfg.grid_width, cfg.grid_height, cfg.resolution, cfg.origin_x, cfg.origin_y,
        np.zeros((cfg.grid_height, cfg.grid_width), dtype=np.uint8),
    )
    # free interior: coarse flood by marking everything inside the outline
    for r in range(cfg.grid_height):
        for c in range(cfg.grid_width):
            cells[r, c] = CellState.FREE
    # walls along the warped strokes
    for stroke in plan.strokes:
        for a, b in zip(stroke.vertices, stroke.vertices[1:]):
            wa = Point2(*plan_to_world(cfg, a.x, a.y))
            wb = Point2(*plan_to_world(cfg, b.x, b.y))
            for r, c in supercover_cells(wa, wb, probe):
                cells[r, c] = CellState.OCCUPIED
    # sensor-ish speckle
    for _ in range(cfg.noise_cells):
        r = int(rng.integers(0, cfg.grid_height))
        c = int(rng.integers(0, cfg.grid_width))
        cells[r, c] = rng.choice(
            [CellState.OCCUPIED, CellState.UNKNOWN]
        )
    return OccupancyGrid(
        cfg.grid_width, cfg.grid_height, cfg.resolution, cfg.origin_x, cfg.origin_y, cells
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo", help="output directory")
    args = parser.parse_args()
    cfg = DemoConfig(out_dir=Path(args.out))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    plan = FloorPlan(cfg.plan_width, cfg.plan_height, plan_strokes())
    (cfg.out_dir / "plan.json").write_text(serialize_plan(plan))
    grid = synth_grid(cfg, plan)
    save_grid(grid, cfg.out_dir)

    corners = [(20, 20), (380, 20), (380, 280), (20, 280)]
    session = {
        "plan": "plan.json",
        "grid": "map.yaml",
        "correspondences": [
            [[x, y], list(plan_to_world(cfg, x, y))] for x, y in corners
        ],
        "regions": [
            {
                "label": "no-go",
                "polygon": [[150, 120], [250, 120], [250, 170], [150, 170]],
            }
        ],
    }
    (cfg.out_dir / "session.json").write_text(json.dumps(session, indent=2))
    print(f"demo dataset written to {cfg.out_dir}/")
    print("next: python scripts/demo_nogo.py --demo", cfg.out_dir)


if __name__ == "__main__":
    main()
