"""Deterministic grid A* used to seed the trajectory optimization.

The workspace is rasterized onto a square grid; a cell is blocked when its
center is closer to any obstacle polygon than the inflation radius (half the
vehicle width by default).  Search is 8-connected with the octile-distance
heuristic and fully deterministic tie-breaking.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import InfeasibleScenarioError
from .sdist import sd_points_polygon

_STEPS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, math.sqrt(2.0)),
    (1, -1, math.sqrt(2.0)),
    (-1, 1, math.sqrt(2.0)),
    (-1, -1, math.sqrt(2.0)),
)


def _octile(a, b):
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (math.sqrt(2.0) - 1.0) * min(dx, dy)


def occupancy_grid(polygons, origin, shape, cell, inflation):
    """Boolean blocked-mask over cell centers."""
    nx, ny = shape
    xs = origin[0] + (np.arange(nx) + 0.5) * cell
    ys = origin[1] + (np.arange(ny) + 0.5) * cell
    centers = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    blocked = np.zeros(len(centers), dtype=bool)
    for poly in polygons:
        vals, _ = sd_points_polygon(centers, poly)
        blocked |= vals < inflation
    return blocked.reshape(nx, ny)


def grid_path(start, goal, polygons, cell=0.25, inflation=0.18, margin=2.0):
    """Shortest collision-free grid path from start to goal, in world meters.

    Returns an (n, 2) array of cell-center waypoints including snapped start
    and goal cells.  Raises InfeasibleScenarioError when no path exists.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    pts = [start, goal]
    for poly in polygons:
        pts.extend(poly.vertices)
    pts = np.asarray(pts)
    lo = pts.min(axis=0) - margin
    hi = pts.max(axis=0) + margin
    shape = tuple(int(math.ceil(d / cell)) for d in hi - lo)
    blocked = occupancy_grid(polygons, lo, shape, cell, inflation)

    def to_cell(p):
        c = tuple(int((v - o) / cell) for v, o in zip(p, lo))
        return (min(max(c[0], 0), shape[0] - 1), min(max(c[1], 0), shape[1] - 1))

    def to_world(c):
        return lo + (np.array(c, dtype=float) + 0.5) * cell

    s, g = to_cell(start), to_cell(goal)
    for name, c in (("start", s), ("goal", g)):
        if blocked[c]:
            raise InfeasibleScenarioError(f"{name} cell is blocked at grid resolution {cell}")

    dist = {s: 0.0}
    parent = {}
    heap = [(_octile(s, g), 0.0, s)]
    closed = set()
    while heap:
        _, d, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == g:
            path = [cur]
            while path[-1] in parent:
                path.append(parent[path[-1]])
            cells = path[::-1]
            return np.array([to_world(c) for c in cells])
        closed.add(cur)
        for dx, dy, w in _STEPS:
            nxt = (cur[0] + dx, cur[1] + dy)
            if not (0 <= nxt[0] < shape[0] and 0 <= nxt[1] < shape[1]):
                continue
            if blocked[nxt]:
                continue
            # no corner cutting on diagonal moves
            if dx and dy and (blocked[cur[0] + dx, cur[1]] or blocked[cur[0], cur[1] + dy]):
                continue
            nd = d + w
            if nd < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = nd
                parent[nxt] = cur
                heapq.heappush(heap, (nd + _octile(nxt, g), nd, nxt))
    raise InfeasibleScenarioError("no grid path from start to goal")


def path_length(path):
    d = np.diff(np.asarray(path, dtype=float), axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))
