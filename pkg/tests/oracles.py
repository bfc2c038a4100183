"""Independent brute-force oracles the fast implementations are checked
against. Everything here is written from the definitions, not from the
library code: per-point even-odd ray casting instead of scanline spans, and
per-cell Liang-Barsky rectangle clipping instead of grid traversal.
"""
from __future__ import annotations


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def on_segment(px, py, ax, ay, bx, by):
    if _orient(ax, ay, bx, by, px, py) != 0.0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def on_boundary(poly, px, py):
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        if on_segment(px, py, ax, ay, bx, by):
            return True
    return False


def strictly_inside(poly, px, py):
    """Even-odd ray cast to +x; boundary points count as outside."""
    if on_boundary(poly, px, py):
        return False
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > py) != (y1 > py):
            xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < xc:
                inside = not inside
    return inside


def interior_cells(poly, grid):
    """All-cell-centers point-in-polygon sweep."""
    out = set()
    for r in range(grid.height):
        for c in range(grid.width):
            px = grid.origin_x + (c + 0.5) * grid.resolution
            py = grid.origin_y + (r + 0.5) * grid.resolution
            if strictly_inside(poly, px, py):
                out.add((r, c))
    return out


def segment_touches_rect(x0, y0, x1, y1, rx0, ry0, rx1, ry1):
    """Closed-rectangle Liang-Barsky clip: any shared point counts."""
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - rx0), (dx, rx1 - x0), (-dy, y0 - ry0), (dy, ry1 - y0)):
        if p == 0.0:
            if q < 0.0:
                return False
        else:
            t = q / p
            if p < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
    return t0 <= t1


def boundary_cells(vertices, grid):
    """Cells whose closed square any polyline segment touches, by brute force."""
    out = set()
    res = grid.resolution
    for (x0, y0), (x1, y1) in zip(vertices, vertices[1:]):
        for r in range(grid.height):
            for c in range(grid.width):
                rx0 = grid.origin_x + c * res
                ry0 = grid.origin_y + r * res
                if segment_touches_rect(x0, y0, x1, y1, rx0, ry0, rx0 + res, ry0 + res):
                    out.add((r, c))
    return out


def burn_cells(mapped_closed, grid):
    """Expected burn selection: interior centers plus boundary supercover.

    mapped_closed is the mapped region outline as (x, y) tuples with the
    first vertex repeated at the end.
    """
    return interior_cells(mapped_closed[:-1], grid) | boundary_cells(mapped_closed, grid)
