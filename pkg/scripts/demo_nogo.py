#!/usr/bin/env python3
"""End-to-end demo: load the session, build the mapping, burn the no-go
region into the grid, project a fake robot pose onto the plan, and render the
side-by-side overlay PNG.

Run scripts/make_demo.py first (or point --demo at your own session dir).
"""
from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from planwarp.annotate import Frame, Pose2D, burn_region, map_pose, render_overlay
from planwarp.geometry import Point2
from planwarp.map_io import CellState, load_session, save_grid
from planwarp.mapping import CorrespondenceSet, build_map, forward


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--demo", default="demo", help="session directory")
    args = parser.parse_args()
    demo = Path(args.demo)

    session, plan, grid = load_session(demo / "session.json")
    m = build_map(CorrespondenceSet(session.correspondences))
    print(f"mapping: {len(session.correspondences)} pairs, {len(m.triangles)} triangles")

    burned = grid
    for region in session.regions:
        burned = burn_region(m, region, burned)
    flipped = int(((grid.cells != CellState.OCCUPIED) & (burned.cells == CellState.OCCUPIED)).sum())
    print(f"burned {flipped} cells to occupied across {len(session.regions)} region(s)")
    save_grid(burned, demo, stem="map_nogo")

    # pretend the robot sits at the plan center and look it up both ways
    center = Point2(plan.width / 2, plan.height / 2)
    world = forward(m, center)
    pose = Pose2D(world, math.pi / 3, Frame.GRID)
    on_plan = map_pose(m, pose)
    print(
        f"pose: grid ({world.x:.2f}, {world.y:.2f}) -> "
        f"plan ({on_plan.position.x:.1f}, {on_plan.position.y:.1f}), "
        f"heading {on_plan.heading:.3f} rad"
    )

    png = render_overlay(m, plan, burned, session.regions, pose)
    out = demo / "overlay.png"
    out.write_bytes(png)
    print(f"overlay written to {out}")


if __name__ == "__main__":
    main()
