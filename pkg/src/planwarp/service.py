"""HTTP/JSON session service: the interactive UI drives the whole pipeline
through these endpoints.

    POST /sessions                          create from plan JSON + grid files
    GET  /sessions/{id}                     session state summary
    GET  /sessions/{id}/plan                plan JSON
    GET  /sessions/{id}/grid                grid metadata + PGM as base64
    POST /sessions/{id}/correspondences     add a pair (auto-rebuild)
    DELETE /sessions/{id}/correspondences/last   undo last pair
    GET  /sessions/{id}/map?dir=fwd&x=&y=   map one point
    POST /sessions/{id}/regions             add a no-go region
    GET  /sessions/{id}/export/nogo         burned grid as a PGM+YAML zip
    POST /sessions/{id}/pose                push a grid-frame pose
    GET  /sessions/{id}/pose                latest pose mapped to the plan

Every mutation is serialized per session and, when a data dir is configured,
persisted as one JSON file per session so state survives restarts. Errors are
{"error": code, "detail": text}. Plan coordinates are pixels, grid
coordinates world meters.
"""
from __future__ import annotations

import argparse
import base64
import binascii
import io
import json
import os
import threading
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import annotate, map_io, mapping
from .geometry import Point2, Polyline

DEFAULT_PORT = 7878
DEFAULT_MAX_SESSIONS = 64


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


@dataclass
class Session:
    id: str
    plan: map_io.FloorPlan
    grid: map_io.OccupancyGrid
    grid_pgm: bytes
    grid_yaml: str
    correspondences: list[tuple[Point2, Point2]] = field(default_factory=list)
    regions: list[annotate.Region] = field(default_factory=list)
    built_map: mapping.PiecewiseAffineMap | None = None
    build_status: dict[str, Any] = field(default_factory=lambda: {"status": "insufficient", "detail": "no correspondences yet"})
    pose_grid: annotate.Pose2D | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def rebuild(self) -> None:
        """Refresh built_map from the current correspondence list."""
        self.built_map = None
        if len(self.correspondences) < 3:
            self.build_status = {
                "status": "insufficient",
                "detail": f"need at least 3 pairs, have {len(self.correspondences)}",
            }
            return
        try:
            self.built_map = mapping.build_map(
                mapping.CorrespondenceSet(tuple(self.correspondences))
            )
            self.build_status = {
                "status": "ok",
                "triangle_count": len(self.built_map.triangles),
            }
        except mapping.FoldOverError as e:
            self.build_status = {
                "status": "fold_over",
                "detail": str(e),
                "triangles": [list(t) for t in e.triangles],
            }
        except mapping.CollinearPointsError as e:
            self.build_status = {"status": "collinear", "detail": str(e)}
        except mapping.MappingError as e:
            self.build_status = {"status": "error", "detail": str(e)}


class SessionStore:
    def __init__(self, data_dir: Path | None = None, max_sessions: int = DEFAULT_MAX_SESSIONS):
        self.data_dir = Path(data_dir) if data_dir else None
        self.max_sessions = max_sessions
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self.data_dir.glob("*.json")):
                self._load_session_file(path)

    def _load_session_file(self, path: Path) -> None:
        payload = json.loads(path.read_text())
        grid_pgm = base64.b64decode(payload["grid"]["pgm_base64"])
        sess = Session(
            id=path.stem,
            plan=map_io.parse_plan(json.dumps(payload["plan"])),
            grid=map_io.parse_grid(grid_pgm, payload["grid"]["yaml"]),
            grid_pgm=grid_pgm,
            grid_yaml=payload["grid"]["yaml"],
        )
        sess.correspondences = [
            (Point2(*p), Point2(*g)) for p, g in payload["correspondences"]
        ]
        sess.regions = [
            annotate.Region(r["label"], tuple(Point2(*v) for v in r["polygon"]))
            for r in payload["regions"]
        ]
        if payload.get("pose") is not None:
            p = payload["pose"]
            sess.pose_grid = annotate.Pose2D(
                Point2(p["x"], p["y"]), p["heading"], annotate.Frame.GRID
            )
        sess.rebuild()
        self.sessions[sess.id] = sess

    def persist(self, sess: Session) -> None:
        if not self.data_dir:
            return
        payload = {
            "plan": map_io.plan_to_dict(sess.plan),
            "grid": {
                "pgm_base64": base64.b64encode(sess.grid_pgm).decode(),
                "yaml": sess.grid_yaml,
            },
            "correspondences": [
                [[p.x, p.y], [g.x, g.y]] for p, g in sess.correspondences
            ],
            "regions": [
                {"label": r.label, "polygon": [[v.x, v.y] for v in r.polygon]}
                for r in sess.regions
            ],
            "pose": None
            if sess.pose_grid is None
            else {
                "x": sess.pose_grid.position.x,
                "y": sess.pose_grid.position.y,
                "heading": sess.pose_grid.heading,
            },
        }
        tmp = self.data_dir / f".{sess.id}.tmp"
        tmp.write_text(json.dumps(payload))
        os.replace(tmp, self.data_dir / f"{sess.id}.json")

    def create(self, plan: map_io.FloorPlan, grid: map_io.OccupancyGrid, grid_pgm: bytes, grid_yaml: str) -> Session:
        with self._store_lock:
            if len(self.sessions) >= self.max_sessions:
                raise ApiError(409, "max_sessions", f"session limit {self.max_sessions} reached")
            sess = Session(
                id=uuid.uuid4().hex, plan=plan, grid=grid, grid_pgm=grid_pgm, grid_yaml=grid_yaml
            )
            self.sessions[sess.id] = sess
        self.persist(sess)
        return sess

    def get(self, session_id: str) -> Session:
        sess = self.sessions.get(session_id)
        if sess is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return sess


class GridFiles(BaseModel):
    pgm_base64: str
    yaml: str


class CreateSessionBody(BaseModel):
    plan: dict
    grid: GridFiles


class PairBody(BaseModel):
    plan: tuple[float, float]
    grid: tuple[float, float]


class RegionBody(BaseModel):
    label: str = "region"
    polygon: list[tuple[float, float]]


class PoseBody(BaseModel):
    x: float
    y: float
    heading: float


def _region_payload(sess: Session, region: annotate.Region) -> dict:
    payload: dict[str, Any] = {
        "label": region.label,
        "polygon": [[v.x, v.y] for v in region.polygon],
        "grid_polygon": None,
    }
    if sess.built_map is not None:
        closed = Polyline(region.polygon + (region.polygon[0],))
        try:
            mapped = mapping.forward_polyline(
                sess.built_map, closed, max_err=sess.grid.resolution / 4.0
            )
            payload["grid_polygon"] = [[v.x, v.y] for v in mapped.vertices]
        except mapping.OutsideHullError:
            pass
    return payload


def _session_payload(sess: Session) -> dict:
    return {
        "id": sess.id,
        "plan_size": [sess.plan.width, sess.plan.height],
        "grid_size": [sess.grid.width, sess.grid.height],
        "pair_count": len(sess.correspondences),
        "correspondences": [
            [[p.x, p.y], [g.x, g.y]] for p, g in sess.correspondences
        ],
        "regions": [_region_payload(sess, r) for r in sess.regions],
        "map": sess.build_status,
        "has_pose": sess.pose_grid is not None,
    }


def create_app(data_dir: str | Path | None = None, max_sessions: int = DEFAULT_MAX_SESSIONS) -> FastAPI:
    store = SessionStore(Path(data_dir) if data_dir else None, max_sessions)
    app = FastAPI(title="planwarp session service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "detail": exc.detail}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"error": "validation", "detail": str(exc)}
        )

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            pgm = base64.b64decode(body.grid.pgm_base64, validate=True)
        except (binascii.Error, ValueError) as e:
            raise ApiError(422, "parse_failure", f"bad PGM base64: {e}")
        try:
            plan = map_io.parse_plan(json.dumps(body.plan))
            grid = map_io.parse_grid(pgm, body.grid.yaml)
        except map_io.MapFormatError as e:
            raise ApiError(422, "parse_failure", str(e))
        sess = store.create(plan, grid, pgm, body.grid.yaml)
        return {"id": sess.id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            return _session_payload(sess)

    @app.get("/sessions/{session_id}/plan")
    def get_plan(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            return map_io.plan_to_dict(sess.plan)

    @app.get("/sessions/{session_id}/grid")
    def get_grid(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            return {
                "width": sess.grid.width,
                "height": sess.grid.height,
                "resolution": sess.grid.resolution,
                "origin": [sess.grid.origin_x, sess.grid.origin_y],
                "pgm_base64": base64.b64encode(sess.grid_pgm).decode(),
            }

    @app.post("/sessions/{session_id}/correspondences")
    def add_correspondence(session_id: str, body: PairBody):
        sess = store.get(session_id)
        with sess.lock:
            plan_pt = Point2(*body.plan)
            grid_pt = Point2(*body.grid)
            for p, g in sess.correspondences:
                if p == plan_pt:
                    raise ApiError(409, "duplicate_point", f"plan point ({p.x}, {p.y}) already used")
                if g == grid_pt:
                    raise ApiError(409, "duplicate_point", f"grid point ({g.x}, {g.y}) already used")
            sess.correspondences.append((plan_pt, grid_pt))
            sess.rebuild()
            store.persist(sess)
            return {
                "index": len(sess.correspondences) - 1,
                "pair_count": len(sess.correspondences),
                "rebuild": sess.build_status,
            }

    @app.delete("/sessions/{session_id}/correspondences/last")
    def undo_correspondence(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            if not sess.correspondences:
                raise ApiError(409, "empty", "no correspondences to undo")
            sess.correspondences.pop()
            sess.rebuild()
            store.persist(sess)
            return {"pair_count": len(sess.correspondences), "rebuild": sess.build_status}

    @app.get("/sessions/{session_id}/map")
    def query_map(session_id: str, dir: str, x: float, y: float):
        sess = store.get(session_id)
        if dir not in ("fwd", "inv"):
            raise ApiError(422, "validation", f"dir must be fwd or inv, got {dir!r}")
        with sess.lock:
            if sess.built_map is None:
                raise ApiError(409, "no_map", sess.build_status.get("detail", "no valid map"))
            fn = mapping.forward if dir == "fwd" else mapping.inverse
            q = fn(sess.built_map, Point2(x, y))
        if q is None:
            return {"outside": True}
        return {"point": [q.x, q.y]}

    @app.post("/sessions/{session_id}/regions")
    def put_region(session_id: str, body: RegionBody):
        sess = store.get(session_id)
        with sess.lock:
            if sess.built_map is None:
                raise ApiError(409, "no_map", "add correspondences until the map builds")
            try:
                region = annotate.Region(
                    body.label, tuple(Point2(x, y) for x, y in body.polygon)
                )
            except ValueError as e:
                raise ApiError(422, "bad_region", str(e))
            for v in region.polygon:
                if not (0 <= v.x <= sess.plan.width and 0 <= v.y <= sess.plan.height):
                    raise ApiError(422, "bad_region", f"vertex ({v.x}, {v.y}) outside the plan")
            try:
                payload = _region_payload(sess, region)
                if payload["grid_polygon"] is None:
                    raise ApiError(422, "outside_hull", "region leaves the mapped hull")
            except mapping.OutsideHullError as e:
                raise ApiError(422, "outside_hull", str(e))
            sess.regions.append(region)
            store.persist(sess)
            return {"index": len(sess.regions) - 1, **payload}

    @app.get("/sessions/{session_id}/export/nogo")
    def export_nogo(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            burned = sess.grid
            if sess.regions:
                if sess.built_map is None:
                    raise ApiError(409, "no_map", "regions exist but the map is not valid")
                for region in sess.regions:
                    burned = annotate.burn_region(sess.built_map, region, burned)
            pgm, yaml_text = map_io.serialize_grid(burned)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for name, data in (("map.pgm", pgm), ("map.yaml", yaml_text.encode())):
                info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, data)
        return Response(
            content=buf.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition": 'attachment; filename="nogo_map.zip"'},
        )

    @app.post("/sessions/{session_id}/pose")
    def push_pose(session_id: str, body: PoseBody):
        sess = store.get(session_id)
        with sess.lock:
            sess.pose_grid = annotate.Pose2D(
                Point2(body.x, body.y), body.heading, annotate.Frame.GRID
            )
            store.persist(sess)
            return {"ok": True}

    @app.get("/sessions/{session_id}/pose")
    def get_pose(session_id: str):
        sess = store.get(session_id)
        with sess.lock:
            if sess.pose_grid is None:
                raise ApiError(404, "no_pose", "no pose posted yet")
            if sess.built_map is None:
                raise ApiError(409, "no_map", "no valid map to project the pose with")
            try:
                mapped = annotate.map_pose(sess.built_map, sess.pose_grid)
            except mapping.OutsideHullError:
                return {"outside": True}
        return {
            "x": mapped.position.x,
            "y": mapped.position.y,
            "heading": mapped.heading,
            "frame": "plan",
        }

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="planwarp session service")
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("PLANWARP_PORT", DEFAULT_PORT))
    )
    parser.add_argument("--host", default=os.environ.get("PLANWARP_HOST", "127.0.0.1"))
    parser.add_argument(
        "--data-dir", default=os.environ.get("PLANWARP_DATA_DIR") or None
    )
    parser.add_argument(
        "--max-sessions",
        type=int,
        default=int(os.environ.get("PLANWARP_MAX_SESSIONS", DEFAULT_MAX_SESSIONS)),
    )
    args = parser.parse_args(argv)

    import uvicorn

    uvicorn.run(
        create_app(args.data_dir, args.max_sessions), host=args.host, port=args.port
    )


if __name__ == "__main__":
    main()
