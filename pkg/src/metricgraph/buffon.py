"""Random Buffon's-needle graphs.

Needles are straight segments dropped in a square; their pairwise
intersections become vertices and the pieces of needle between vertices
become arcs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .graph import Arc, GraphError, MetricGraph

__all__ = ["DegenerateGraphError", "sample_needles", "needle_graph", "buffon_generate", "merge_radius"]


class DegenerateGraphError(GraphError):
    def __init__(self, message: str, intersections: int):
        super().__init__(f"{message} ({intersections} raw intersections)")
        self.intersections = intersections


def merge_radius(diagonal: float, diameter: float) -> float:
    return (12.0 * diameter / diagonal) ** 2


def sample_needles(needle_count: int, diagonal: float, rng: np.random.Generator) -> np.ndarray:
    """Segments as an array of shape (needle_count, 2, 2).

    Start points are uniform in the square of the given diagonal, angles
    uniform on [0, 2*pi), lengths uniform on (0, diagonal/2].
    """
    side = diagonal / math.sqrt(2.0)
    start = rng.uniform(0.0, side, size=(needle_count, 2))
    angle = rng.uniform(0.0, 2.0 * math.pi, size=needle_count)
    length = 0.5 * diagonal * (1.0 - rng.uniform(0.0, 1.0, size=needle_count))
    end = start + length[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
    return np.stack([start, end], axis=1)


def _intersections(segments: np.ndarray):
    """Pairwise proper intersections: lists of (i, j, t_i, t_j, point)."""
    p = segments[:, 0, :]
    d = segments[:, 1, :] - p
    n = len(segments)
    ii, jj = np.triu_indices(n, k=1)
    cross = d[ii, 0] * d[jj, 1] - d[ii, 1] * d[jj, 0]
    ok = np.abs(cross) > 1e-14
    ii, jj, cross = ii[ok], jj[ok], cross[ok]
    w = p[jj] - p[ii]
    t = (w[:, 0] * d[jj, 1] - w[:, 1] * d[jj, 0]) / cross
    u = (w[:, 0] * d[ii, 1] - w[:, 1] * d[ii, 0]) / cross
    hit = (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    ii, jj, t, u = ii[hit], jj[hit], t[hit], u[hit]
    pts = p[ii] + t[:, None] * d[ii]
    return ii, jj, t, u, pts


def needle_graph(segments, radius: float, *, prune: bool = False) -> MetricGraph:
    """Graph of a needle configuration.

    Points closer than ``radius`` are merged into one vertex. Needle tips are
    kept as degree-1 vertices unless ``prune`` is set, in which case the
    dangling tip pieces are dropped. Only the largest connected component is
    returned.
    """
    segments = np.asarray(segments, dtype=float)
    ii, jj, t, u, pts = _intersections(segments)
    n_cross = len(ii)

    # points: (needle, parameter, xy)
    needle_ids = [ii, jj]
    params = [t, u]
    coords = [pts, pts]
    if not prune:
        k = np.arange(len(segments))
        needle_ids += [k, k]
        params += [np.zeros(len(k)), np.ones(len(k))]
        coords += [segments[:, 0, :], segments[:, 1, :]]
    needle_of = np.concatenate(needle_ids)
    param_of = np.concatenate(params)
    xy = np.concatenate(coords)
    # an intersection contributes the same location to both needles
    point_key = np.concatenate([np.arange(n_cross), np.arange(n_cross)] + (
        [n_cross + np.arange(2 * len(segments))] if not prune else []))

    n_keys = int(point_key.max()) + 1 if len(point_key) else 0
    key_xy = np.zeros((n_keys, 2))
    key_xy[point_key] = xy
    parent = np.arange(n_keys)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if n_keys > 1 and radius > 0.0:
        for a, b in sorted(cKDTree(key_xy).query_pairs(radius)):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    cluster = np.array([find(a) for a in range(n_keys)], dtype=int)

    seg_len = np.linalg.norm(segments[:, 1, :] - segments[:, 0, :], axis=1)
    edges: list[tuple[int, int, float]] = []
    for needle in range(len(segments)):
        sel = np.flatnonzero(needle_of == needle)
        if len(sel) < 2:
            continue
        order = sel[np.argsort(param_of[sel], kind="stable")]
        for a, b in zip(order[:-1], order[1:]):
            ca, cb = cluster[point_key[a]], cluster[point_key[b]]
            length = (param_of[b] - param_of[a]) * seg_len[needle]
            if ca == cb or length <= 0.0:
                continue
            edges.append((ca, cb, length))

    if not edges:
        raise DegenerateGraphError("degenerate needle graph: no arcs survive", n_cross)
    used = sorted({c for e in edges for c in e[:2]})
    relabel = {c: i + 1 for i, c in enumerate(used)}
    full = MetricGraph(
        len(used),
        [Arc(i + 1, relabel[a], relabel[b], l) for i, (a, b, l) in enumerate(edges)],
        allow_disconnected=True,
    )
    comps = full.components()
    best = max(comps, key=lambda c: (len(c), -c[0]))
    if len(best) < 2:
        raise DegenerateGraphError("degenerate needle graph: fewer than 2 vertices", n_cross)
    keep = {v: i + 1 for i, v in enumerate(best)}
    arcs = []
    for arc in full.arcs:
        if arc.tail in keep:
            arcs.append(Arc(len(arcs) + 1, keep[arc.tail], keep[arc.head], arc.length))
    return MetricGraph(len(best), arcs)


def buffon_generate(
    needle_count: int,
    diagonal: float,
    diameter: float,
    seed: int,
    *,
    prune: bool = False,
) -> MetricGraph:
    """Random Buffon's-needle graph, reproducible for a fixed ``seed``."""
    if needle_count < 2:
        raise ValueError("needle_count must be >= 2")
    if diagonal <= 0.0 or diameter <= 0.0:
        raise ValueError("diagonal and diameter must be positive")
    rng = np.random.default_rng(seed)
    segments = sample_needles(needle_count, diagonal, rng)
    return needle_graph(segments, merge_radius(diagonal, diameter), prune=prune)
