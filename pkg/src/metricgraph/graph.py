"""Metric graph data model, text format and benchmark graphs.

Vertices are numbered ``1..n``. Arc ``j`` runs from its tail (local
coordinate ``x = 0``) to its head (``x = l_j``); the orientation is arbitrary
but fixed, and every solver reads it the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Arc",
    "Incidence",
    "MetricGraph",
    "GraphError",
    "GraphFormatError",
    "build_graph",
    "pumpkin_graph",
    "g14_graph",
    "G14_LENGTHS",
    "serialize_graph",
    "parse_graph",
    "read_graph",
    "write_graph",
]

# Arc lengths l_1..l_14 of the G14 benchmark, in table order.
G14_LENGTHS = (
    11.91371443, 7.08276253, 6.0, 2.236067977, 4.123105626,
    1.414213562, 2.0, 1.0, 4.7169892, 4.472135955,
    2.0, 2.0, 1.414213562, 4.472135955,
)


class GraphError(ValueError):
    """Invalid graph data (bad length, vertex id, or connectivity)."""

    def __init__(self, message: str, components: list[list[int]] | None = None):
        super().__init__(message)
        self.components = components


class GraphFormatError(GraphError):
    """Malformed graph file; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    length: float


class Incidence(NamedTuple):
    """One arc end meeting a vertex.

    ``at_head`` is False for the tail (x = 0, arc outgoing from the vertex)
    and True for the head (x = l, arc incoming).
    """

    arc: int
    at_head: bool

    @property
    def sign(self) -> int:
        """Factor turning d/dx on the arc into the derivative pointing away from the vertex."""
        return -1 if self.at_head else 1


class MetricGraph:
    """Immutable metric graph with 1-based vertex and arc ids."""

    def __init__(self, vertex_count: int, arcs: Iterable[Arc], *, allow_disconnected: bool = False):
        arcs = tuple(arcs)
        if vertex_count < 1:
            raise GraphError(f"vertex count must be >= 1, got {vertex_count}")
        if not arcs:
            raise GraphError("graph has no arcs")
        for pos, arc in enumerate(arcs, start=1):
            if arc.id != pos:
                raise GraphError(f"arc ids must be 1..m in order; position {pos} holds id {arc.id}")
            length = float(arc.length)
            if not math.isfinite(length) or length <= 0.0:
                raise GraphError(f"arc {arc.id}: length must be finite and > 0, got {arc.length!r}")
            for v in (arc.tail, arc.head):
                if not 1 <= v <= vertex_count:
                    raise GraphError(f"arc {arc.id}: vertex id {v} outside 1..{vertex_count}")
        self._n = int(vertex_count)
        self._arcs = arcs
        self._lengths = np.array([a.length for a in arcs], dtype=float)
        self._lengths.flags.writeable = False

        incid: list[list[Incidence]] = [[] for _ in range(self._n)]
        for arc in arcs:
            incid[arc.tail - 1].append(Incidence(arc.id, False))
            incid[arc.head - 1].append(Incidence(arc.id, True))
        # tail before head for self-loops; arcs ascending
        self._incidences = tuple(tuple(sorted(lst)) for lst in incid)

        isolated = [v for v in range(1, self._n + 1) if not self._incidences[v - 1]]
        comps = self.components()
        if not allow_disconnected and len(comps) > 1:
            raise GraphError(
                f"graph is disconnected ({len(comps)} components)"
                + (f"; isolated vertices {isolated}" if isolated else ""),
                components=comps,
            )

    @property
    def vertex_count(self) -> int:
        return self._n

    @property
    def arc_count(self) -> int:
        return len(self._arcs)

    @property
    def arcs(self) -> tuple[Arc, ...]:
        return self._arcs

    @property
    def lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def total_length(self) -> float:
        total = 0.0
        for length in self._lengths:
            total += float(length)
        return total

    def arc(self, arc_id: int) -> Arc:
        return self._arcs[arc_id - 1]

    def incidences(self, vertex: int) -> tuple[Incidence, ...]:
        return self._incidences[vertex - 1]

    def degree(self, vertex: int) -> int:
        return len(self._incidences[vertex - 1])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(i) for i in self._incidences], dtype=int)

    def vertex_of(self, inc: Incidence) -> int:
        arc = self._arcs[inc.arc - 1]
        return arc.head if inc.at_head else arc.tail

    def components(self) -> list[list[int]]:
        """Vertex sets of the connected components, each sorted."""
        parent = list(range(self._n + 1))

        def find(v: int) -> int:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for arc in self._arcs:
            a, b = find(arc.tail), find(arc.head)
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for v in range(1, self._n + 1):
            groups.setdefault(find(v), []).append(v)
        return sorted(groups.values())

    def scaled(self, factor: float) -> "MetricGraph":
        return MetricGraph(
            self._n, [Arc(a.id, a.tail, a.head, a.length * factor) for a in self._arcs]
        )

    def split_arc(self, arc_id: int, fraction: float = 0.5) -> "MetricGraph":
        """Insert a degree-2 vertex on ``arc_id`` at ``fraction`` of its length.

        The new vertex gets id ``n + 1``; the tail part keeps ``arc_id`` and
        the head part is appended as arc ``m + 1``.
        """
        if not 0.0 < fraction < 1.0:
            raise ValueError("fraction must lie in (0, 1)")
        new_v = self._n + 1
        arcs = list(self._arcs)
        old = arcs[arc_id - 1]
        arcs[arc_id - 1] = Arc(old.id, old.tail, new_v, old.length * fraction)
        arcs.append(Arc(len(arcs) + 1, new_v, old.head, old.length * (1.0 - fraction)))
        return MetricGraph(new_v, arcs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return self._n == other._n and self._arcs == other._arcs

    def __hash__(self) -> int:
        return hash((self._n, self._arcs))

    def __repr__(self) -> str:
        return f"MetricGraph(vertices={self._n}, arcs={len(self._arcs)}, L={self.total_length:.6g})"


def build_graph(
    n: int,
    edge_list: Sequence[tuple[int, int, float]],
    *,
    allow_disconnected: bool = False,
) -> MetricGraph:
    """Build a validated graph; arc ids follow the order of ``edge_list``."""
    arcs = [Arc(i, int(t), int(h), float(l)) for i, (t, h, l) in enumerate(edge_list, start=1)]
    return MetricGraph(n, arcs, allow_disconnected=allow_disconnected)


def pumpkin_graph(lengths: Sequence[float] = (math.sqrt(2.0), math.sqrt(3.0), math.sqrt(5.0))) -> MetricGraph:
    """Two vertices joined by parallel arcs, all oriented 1 -> 2."""
    return build_graph(2, [(1, 2, l) for l in lengths])


def g14_graph() -> MetricGraph:
    """The 14-vertex, 14-arc G14 benchmark, loaded from the bundled data file.

    The incidence structure is a reconstruction (the original is only
    available as a drawing); the lengths are the tabulated ones.
    """
    text = resources.files("metricgraph.data").joinpath("g14.graph").read_text(encoding="utf-8")
    return parse_graph(text)


def serialize_graph(g: MetricGraph) -> str:
    lines = [f"vertices {g.vertex_count}"]
    for arc in g.arcs:
        lines.append(f"arc {arc.id} {arc.tail} {arc.head} {arc.length:.17g}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str, *, allow_disconnected: bool = False) -> MetricGraph:
    n: int | None = None
    arcs: dict[int, Arc] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key == "vertices":
            if len(parts) != 2:
                raise GraphFormatError("expected 'vertices <n>'", lineno)
            if n is not None:
                raise GraphFormatError("duplicate 'vertices' header", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphFormatError(f"bad vertex count {parts[1]!r}", lineno) from None
        elif key == "arc":
            if n is None:
                raise GraphFormatError("'arc' before 'vertices' header", lineno)
            if len(parts) != 5:
                raise GraphFormatError("expected 'arc <id> <tail> <head> <length>'", lineno)
            try:
                aid, tail, head = (int(p) for p in parts[1:4])
                length = float(parts[4])
            except ValueError:
                raise GraphFormatError(f"bad number in {line!r}", lineno) from None
            if aid in arcs:
                raise GraphFormatError(f"duplicate arc id {aid}", lineno)
            if not math.isfinite(length) or length <= 0.0:
                raise GraphFormatError(f"arc {aid}: length must be finite and > 0", lineno)
            for v in (tail, head):
                if not 1 <= v <= n:
                    raise GraphFormatError(f"arc {aid}: vertex id {v} outside 1..{n}", lineno)
            arcs[aid] = Arc(aid, tail, head, length)
        else:
            raise GraphFormatError(f"unknown record {key!r}", lineno)
    if n is None:
        raise GraphFormatError("missing 'vertices' header")
    ids = sorted(arcs)
    if ids != list(range(1, len(ids) + 1)):
        raise GraphFormatError(f"arc ids must be 1..m without gaps, got {ids}")
    return MetricGraph(n, [arcs[i] for i in ids], allow_disconnected=allow_disconnected)


def read_graph(path, *, allow_disconnected: bool = False) -> MetricGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read(), allow_disconnected=allow_disconnected)


def write_graph(g: MetricGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_graph(g))
