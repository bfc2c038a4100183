"""planwarp command line: batch access to the pipeline.

    planwarp build <session.json> [--out mapping.json]
    planwarp map <mapping.json> --dir fwd|inv <points.csv> [--out out.csv]
    planwarp nogo <session.json> --out <dir>
    planwarp overlay <session.json> [--out overlay.png] [--pose x,y,theta]

Exit codes: 0 success, 1 I/O failure, 2 validation or mapping failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import annotate, map_io, mapping
from .geometry import Point2

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def _build_from_session(session: map_io.SessionFile) -> mapping.PiecewiseAffineMap:
    cs = mapping.CorrespondenceSet(session.correspondences)
    return mapping.build_map(cs)


def cmd_build(args: argparse.Namespace) -> int:
    session, _plan, _grid = map_io.load_session(args.session)
    try:
        m = _build_from_session(session)
    except mapping.MappingError as e:
        print(f"mapping failed: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"pairs: {len(session.correspondences)}")
    print(f"triangles: {len(m.triangles)}")
    if args.out:
        Path(args.out).write_text(mapping.mapping_to_json(m))
        print(f"mapping written to {args.out}")
    return EXIT_OK


def cmd_map(args: argparse.Namespace) -> int:
    m = mapping.mapping_from_json(Path(args.mapping).read_text())
    apply = mapping.forward if args.dir == "fwd" else mapping.inverse
    with open(args.points, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            print(f"points csv must start with header 'x,y', got {header}", file=sys.stderr)
            return EXIT_INVALID
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "y"])
    for x, y in rows:
        q = apply(m, Point2(x, y))
        if q is None:
            writer.writerow(["outside", "outside"])
        else:
            writer.writerow([repr(q.x), repr(q.y)])
    text = out.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_nogo(args: argparse.Namespace) -> int:
    session, _plan, grid = map_io.load_session(args.session)
    burned = grid
    if session.regions:
        try:
            m = _build_from_session(session)
            for region in session.regions:
                burned = annotate.burn_region(m, region, burned)
        except (mapping.MappingError, mapping.OutsideHullError, ValueError) as e:
            print(f"no-go burn failed: {e}", file=sys.stderr)
            return EXIT_INVALID
    flipped = int(((grid.cells != 1) & (burned.cells == 1)).sum())
    pgm_path, yaml_path = map_io.save_grid(burned, args.out)
    print(f"{flipped} cells flipped to occupied")
    print(f"wrote {pgm_path} and {yaml_path}")
    return EXIT_OK


def _parse_pose(text: str) -> annotate.Pose2D:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"pose must be x,y,theta; got {text!r}")
    return annotate.Pose2D(Point2(parts[0], parts[1]), parts[2], annotate.Frame.GRID)


def cmd_overlay(args: argparse.Namespace) -> int:
    session, plan, grid = map_io.load_session(args.session)
    pose = _parse_pose(args.pose) if args.pose else None
    try:
        m = _build_from_session(session)
        png = annotate.render_overlay(m, plan, grid, session.regions, pose)
    except (mapping.MappingError, mapping.OutsideHullError, ValueError) as e:
        print(f"overlay failed: {e}", file=sys.stderr)
        return EXIT_INVALID
    Path(args.out).write_bytes(png)
    print(f"wrote {args.out}")
    return EXIT_OK


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planwarp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="triangulate a session's correspondences")
    p.add_argument("session")
    p.add_argument("--out", help="write the mapping as JSON")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("map", help="map a CSV of points through a mapping")
    p.add_argument("mapping")
    p.add_argument("points")
    p.add_argument("--dir", choices=("fwd", "inv"), required=True)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("nogo", help="burn session regions into the grid as walls")
    p.add_argument("session")
    p.add_argument("--out", required=True, help="output directory for map.pgm/map.yaml")
    p.set_defaults(func=cmd_nogo)

    p = sub.add_parser("overlay", help="render a side-by-side annotated PNG")
    p.add_argument("session")
    p.add_argument("--out", default="overlay.png")
    p.add_argument("--pose", help="grid-frame pose as x,y,theta")
    p.set_defaults(func=cmd_overlay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (map_io.MapFormatError, mapping.MappingError, ValueError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
