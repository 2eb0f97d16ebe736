"""Symmetric interior-penalty discontinuous Galerkin on metric graphs.

Every arc is cut into intervals carrying a Legendre modal basis
``P_m(-1 + 2 (x - x_j) / dx_j)``. Interior interfaces and graph vertices are
handled by the same junction rule: for the incident interval ends ``c``
with outgoing derivatives ``du_c`` and junction average ``u^``,

    B_J(u, phi) = sum_c [du_c (phi_c - phi^) + dphi_c (u_c - u^)
                         + w_c (u_c - u^)(phi_c - phi^)].

The first sum is the Kirchhoff-balanced flux (the incident fluxes minus
their mean add up to zero exactly), the second restores symmetry and the
third penalizes departures from continuity. At a two-sided junction this is
the classical interior-penalty face term. The discrete operator is
``K = -(volume + junctions)``, a negative semidefinite approximation of the
second derivative whose kernel is the constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .fd import pinv_solve
from .graph import MetricGraph
from .quadrature import gauss_legendre

__all__ = [
    "DgMesh",
    "DgOperator",
    "DgSolution",
    "DgIncompatibleError",
    "dg_mesh",
    "dg_assemble",
    "dg_project",
    "dg_poisson",
    "dg_eigs",
    "dg_evaluate",
    "dg_cond",
    "dg_sample_grid",
    "penalty_constant",
    "legendre_stiffness",
]

MESH_RULES = ("round", "ceil")


class DgIncompatibleError(ValueError):
    def __init__(self, residual: float, rhs_norm: float):
        super().__init__(
            f"right-hand side is incompatible: residual {residual:.3e} vs ||b|| = {rhs_norm:.3e}"
        )
        self.residual = residual


def penalty_constant(p: int) -> float:
    return 200.0 * (p + 1) ** 2


@lru_cache(maxsize=None)
def legendre_stiffness(p: int) -> np.ndarray:
    """``int_{-1}^{1} P_m' P_l' dxi`` for ``m, l <= p``.

    Equals ``min(m, l) (min(m, l) + 1)`` when ``m + l`` is even, else 0.
    """
    m = np.arange(p + 1)
    lo = np.minimum.outer(m, m)
    S = np.where((m[:, None] + m[None, :]) % 2 == 0, lo * (lo + 1), 0).astype(float)
    S.flags.writeable = False
    return S


@dataclass(frozen=True, eq=False)
class DgMesh:
    """Intervals of all arcs in arc order; coefficients interval-major, degree-minor."""

    graph: MetricGraph
    arc_of: np.ndarray  # arc id of each interval
    left: np.ndarray  # left end in arc coordinates
    dx: np.ndarray
    degree: np.ndarray
    offset: np.ndarray  # first coefficient index of each interval
    first: np.ndarray  # first interval of each arc
    count: np.ndarray  # intervals per arc

    @property
    def interval_count(self) -> int:
        return len(self.dx)

    @property
    def size(self) -> int:
        return int(self.offset[-1] + self.degree[-1] + 1)

    def intervals_of(self, arc: int) -> range:
        j = arc - 1
        return range(int(self.first[j]), int(self.first[j] + self.count[j]))

    def locate(self, arc: int, x: np.ndarray) -> np.ndarray:
        """Interval index containing each ``x``; a shared endpoint belongs to the left interval."""
        ids = np.asarray(self.intervals_of(arc))
        edges = self.left[ids]
        k = np.searchsorted(edges, x, side="left") - 1
        return ids[np.clip(k, 0, len(ids) - 1)]


def dg_mesh(g: MetricGraph, h: float, p: int | Sequence[int] = 1, *, rule: str = "round") -> DgMesh:
    """Uniform intervals per arc.

    The interval count is ``round(l_i / h)`` (at least 1) or, with
    ``rule="ceil"``, ``ceil(l_i / h)``. ``p`` is one degree for all
    intervals or a sequence with one degree per interval.
    """
    if not h > 0.0:
        raise ValueError("h must be positive")
    if rule not in MESH_RULES:
        raise ValueError(f"rule must be one of {MESH_RULES}")
    lengths = g.lengths
    if rule == "round":
        counts = np.maximum(1, np.rint(lengths / h)).astype(int)
    else:
        counts = np.maximum(1, np.ceil(lengths / h * (1.0 - 1e-12))).astype(int)
    arc_of = np.repeat(np.arange(1, g.arc_count + 1), counts)
    dx = np.repeat(lengths / counts, counts)
    left = np.concatenate([np.arange(n) * (l / n) for n, l in zip(counts, lengths)])
    total = int(counts.sum())
    if np.ndim(p) == 0:
        degree = np.full(total, int(p))
    else:
        degree = np.asarray(p, dtype=int)
        if degree.shape != (total,):
            raise ValueError(f"need {total} per-interval degrees, got {degree.shape}")
    if np.any(degree < 1):
        raise ValueError("polynomial degree must be >= 1")
    offset = np.concatenate([[0], np.cumsum(degree + 1)[:-1]])
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return DgMesh(g, arc_of, left, dx, degree, offset, first, counts)


def _end_rows(mesh: DgMesh, i: int, right: bool):
    """Basis values and outgoing physical derivatives at one end of interval ``i``."""
    p = int(mesh.degree[i])
    m = np.arange(p + 1)
    d = m * (m + 1) / mesh.dx[i]
    if right:
        # leaving the junction at a right end means moving in -x
        return np.ones(p + 1), -d
    sgn = (-1.0) ** m
    # P_m'(-1) = (-1)^(m+1) m (m+1) / 2
    return sgn, -sgn * d


def _junctions(mesh: DgMesh):
    """Yield ``(ends, weights)``; ends are ``(interval, is_right_end)``."""
    g = mesh.graph
    for arc in g.arcs:
        ids = list(mesh.intervals_of(arc.id))
        for a, b in zip(ids[:-1], ids[1:]):
            gam = penalty_constant(max(int(mesh.degree[a]), int(mesh.degree[b])))
            w = 2.0 * gam / min(mesh.dx[a], mesh.dx[b])
            yield [(a, True), (b, False)], [w, w]
    for v in range(1, g.vertex_count + 1):
        ends = []
        for inc in g.incidences(v):
            ids = mesh.intervals_of(inc.arc)
            ends.append((ids[-1], True) if inc.at_head else (ids[0], False))
        weights = [2.0 * penalty_constant(int(mesh.degree[i])) / mesh.dx[i] for i, _ in ends]
        yield ends, weights


@dataclass(frozen=True, eq=False)
class DgOperator:
    mesh: DgMesh
    K: np.ndarray
    mass: np.ndarray  # diagonal of M
    info: dict = field(default_factory=dict)


def dg_assemble(mesh: DgMesh, *, vertex_penalty: bool = True) -> DgOperator:
    """Stiffness ``K`` and diagonal mass of the interior-penalty scheme.

    ``vertex_penalty=False`` keeps only the balanced flux at graph vertices
    (no symmetry or penalty term there); continuity is then not enforced
    across vertices. Interior interfaces are unaffected.
    """
    n = mesh.size
    B = np.zeros((n, n))
    mass = np.empty(n)
    for i in range(mesh.interval_count):
        p = int(mesh.degree[i])
        s = slice(int(mesh.offset[i]), int(mesh.offset[i]) + p + 1)
        B[s, s] += (2.0 / mesh.dx[i]) * legendre_stiffness(p)
        mass[s] = mesh.dx[i] / (2.0 * np.arange(p + 1) + 1.0)
    vertex_start = sum(len(mesh.intervals_of(a.id)) - 1 for a in mesh.graph.arcs)
    for jn, (ends, weights) in enumerate(_junctions(mesh)):
        d = len(ends)
        if d < 2:
            continue
        cols = []
        V = []
        G = []
        for i, right in ends:
            val, der = _end_rows(mesh, i, right)
            cols.append(np.arange(int(mesh.offset[i]), int(mesh.offset[i]) + len(val)))
            V.append(val)
            G.append(der)
        P = np.eye(d) - 1.0 / d
        W = np.diag(weights)
        at_vertex = jn >= vertex_start
        # coupling between end a and end b
        for a in range(d):
            for b in range(d):
                blk = P[a, b] * np.outer(V[a], G[b])
                if vertex_penalty or not at_vertex:
                    blk = blk + P[a, b] * np.outer(G[a], V[b]) + (P @ W @ P)[a, b] * np.outer(V[a], V[b])
                B[np.ix_(cols[a], cols[b])] += blk
    return DgOperator(mesh, -B, mass, info={"vertex_penalty": vertex_penalty})


def dg_sample_grid(mesh: DgMesh, arc: int, per_interval: int | None = None) -> np.ndarray:
    """``2 (p + 1)`` equispaced points per interval (endpoints included), concatenated."""
    pts = []
    for i in mesh.intervals_of(arc):
        k = 2 * (int(mesh.degree[i]) + 1) if per_interval is None else per_interval
        pts.append(mesh.left[i] + np.linspace(0.0, mesh.dx[i], k))
    return np.minimum(np.concatenate(pts), mesh.graph.lengths[arc - 1])


def dg_project(mesh: DgMesh, f, *, order: int | None = None) -> np.ndarray:
    """Load vector ``b_i = int f phi_i`` by Gauss-Legendre with ``p + 2`` points per interval."""
    b = np.zeros(mesh.size)
    for i in range(mesh.interval_count):
        p = int(mesh.degree[i])
        xi, w = gauss_legendre(p + 2 if order is None else order)
        x = mesh.left[i] + 0.5 * (xi + 1.0) * mesh.dx[i]
        fx = np.asarray(f(int(mesh.arc_of[i]), x), dtype=float)
        b[int(mesh.offset[i]):int(mesh.offset[i]) + p + 1] = 0.5 * mesh.dx[i] * (npleg.legvander(xi, p).T @ (w * fx))
    return b


@dataclass(frozen=True, eq=False)
class DgSolution:
    mesh: DgMesh
    coefficients: np.ndarray

    def __call__(self, arc: int, x):
        return dg_evaluate(self, arc, x)


def dg_poisson(op: DgOperator, f=None, *, load: np.ndarray | None = None, rcond: float = 1e-12):
    """Minimum-norm pseudo-inverse solution of ``K c = b``.

    ``b`` is :func:`dg_project` of ``f(arc, x)`` unless ``load`` is given.
    Returns ``(solution, residual_norm)``; raises :class:`DgIncompatibleError`
    when the residual exceeds ``1e-6 ||b||``.
    """
    b = dg_project(op.mesh, f) if load is None else np.asarray(load, dtype=float)
    c = pinv_solve(op.K, b, rcond)
    res = float(np.linalg.norm(op.K @ c - b))
    norm = float(np.linalg.norm(b))
    if res > 1e-6 * norm:
        raise DgIncompatibleError(res, norm)
    return DgSolution(op.mesh, c), res


def dg_eigs(op: DgOperator, count: int | None = None) -> np.ndarray:
    """Smallest eigenvalues of ``K c = -k^2 M c``, ascending (approximate ``k^2``)."""
    n = op.mesh.size
    count = n if count is None else count
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in 1..{n}")
    s = 1.0 / np.sqrt(op.mass)
    A = -(s[:, None] * op.K * s[None, :])
    lam = np.linalg.eigvalsh(0.5 * (A + A.T))
    return lam[:count]


def dg_cond(op: DgOperator) -> float:
    """``sigma_max / sigma_min`` of ``K`` over its nonzero singular values (kernel dropped)."""
    s = np.linalg.svd(op.K, compute_uv=False)
    keep = s > 1e-10 * s[0]
    return float(s[0] / s[keep][-1])


def dg_evaluate(sol: DgSolution, arc: int, x):
    """Pointwise value; at an interior interval boundary the left interval is used."""
    mesh = sol.mesh
    g = mesh.graph
    if not 1 <= arc <= g.arc_count:
        raise ValueError(f"arc {arc} outside 1..{g.arc_count}")
    l = g.lengths[arc - 1]
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    if np.any(flat < 0.0) or np.any(flat > l) or not np.all(np.isfinite(flat)):
        raise ValueError(f"x must lie in [0, {l}] on arc {arc}")
    ids = mesh.locate(arc, flat)
    out = np.empty(len(flat))
    for i in np.unique(ids):
        sel = ids == i
        p = int(mesh.degree[i])
        xi = -1.0 + 2.0 * (flat[sel] - mesh.left[i]) / mesh.dx[i]
        c = sol.coefficients[int(mesh.offset[i]):int(mesh.offset[i]) + p + 1]
        out[sel] = npleg.legval(xi, c)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)
