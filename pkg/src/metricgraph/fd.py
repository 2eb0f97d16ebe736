"""Second-order finite differences on a metric graph.

Each arc carries a uniform grid whose end nodes are the graph vertices. A
vertex owns one unknown shared by every incident arc, so continuity holds
by construction; the Kirchhoff condition enters the vertex row through a
ghost node eliminated with the PDE itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

from .graph import MetricGraph

__all__ = [
    "FdSystem",
    "FdIncompatibleError",
    "WaveTrace",
    "fd_discretize",
    "fd_laplacian",
    "fd_weights",
    "fd_sample",
    "fd_poisson",
    "pinv_solve",
    "fd_eigs",
    "fd_wave_start",
    "fd_wave_step",
    "fd_wave_run",
    "fd_energy",
]

log = logging.getLogger(__name__)

VERTEX_SCHEMES = ("ghost", "one-sided")


class FdIncompatibleError(ValueError):
    def __init__(self, residual: float, rhs_norm: float):
        super().__init__(
            f"right-hand side is incompatible: residual {residual:.3e} vs ||f|| = {rhs_norm:.3e}"
        )
        self.residual = residual


@dataclass(frozen=True, eq=False)
class FdSystem:
    """Grid layout: vertex unknowns first (``v - 1``), then interior nodes arc by arc."""

    graph: MetricGraph
    intervals: np.ndarray  # N_i per arc
    dx: np.ndarray  # l_i / N_i
    offsets: np.ndarray  # global index of interior node 1 on each arc

    @property
    def size(self) -> int:
        return int(self.graph.vertex_count + np.sum(self.intervals - 1))

    def nodes(self, arc: int) -> np.ndarray:
        """Global indices of nodes ``0..N`` along ``arc``."""
        a = self.graph.arc(arc)
        n = int(self.intervals[arc - 1])
        idx = np.empty(n + 1, dtype=int)
        idx[0] = a.tail - 1
        idx[-1] = a.head - 1
        idx[1:-1] = self.offsets[arc - 1] + np.arange(n - 1)
        return idx

    def positions(self, arc: int) -> np.ndarray:
        n = int(self.intervals[arc - 1])
        return np.arange(n + 1) * self.dx[arc - 1]

    def arc_values(self, u: np.ndarray, arc: int) -> np.ndarray:
        return np.asarray(u)[self.nodes(arc)]


def fd_discretize(g: MetricGraph, target_dx: float) -> FdSystem:
    """Per-arc uniform grids with ``N_i = ceil(l_i / target_dx)``."""
    if not target_dx > 0.0:
        raise ValueError("target_dx must be positive")
    lengths = g.lengths
    # guard against ceil(1.0000000000000002)
    N = np.maximum(1, np.ceil(lengths / target_dx * (1.0 - 1e-12))).astype(int)
    dx = lengths / N
    offsets = g.vertex_count + np.concatenate([[0], np.cumsum(N - 1)[:-1]])
    return FdSystem(g, N, dx, offsets.astype(int))


def fd_laplacian(sys: FdSystem, vertex: str = "ghost") -> sp.csr_matrix:
    """Discrete second derivative with the chosen vertex treatment.

    ``ghost``: each vertex row is ``2 [sum_c u_1c/dx_c - u_0 sum_c 1/dx_c] / sum_c dx_c``.
    ``one-sided``: each vertex row is the first-order flux balance
    ``sum_c (u_1c - u_0)/dx_c``; it is a constraint, not a Laplacian value,
    so Poisson solves put 0 on its right-hand side.
    """
    if vertex not in VERTEX_SCHEMES:
        raise ValueError(f"vertex scheme must be one of {VERTEX_SCHEMES}")
    g = sys.graph
    rows, cols, vals = [], [], []
    for arc in g.arcs:
        idx = sys.nodes(arc.id)
        h = sys.dx[arc.id - 1]
        inner = idx[1:-1]
        if len(inner):
            for shift, w in ((-1, 1.0), (0, -2.0), (1, 1.0)):
                rows.append(inner)
                cols.append(idx[1 + shift:len(idx) - 1 + shift])
                vals.append(np.full(len(inner), w / (h * h)))
    n = g.vertex_count
    sum_dx = np.zeros(n)
    for arc in g.arcs:
        h = sys.dx[arc.id - 1]
        sum_dx[arc.tail - 1] += h
        sum_dx[arc.head - 1] += h
    for arc in g.arcs:
        idx = sys.nodes(arc.id)
        h = sys.dx[arc.id - 1]
        for v, nb in ((idx[0], idx[1]), (idx[-1], idx[-2])):
            w = 2.0 / (h * sum_dx[v]) if vertex == "ghost" else 1.0 / h
            rows += [np.array([v]), np.array([v])]
            cols += [np.array([nb]), np.array([v])]
            vals += [np.array([w]), np.array([-w])]
    m = sys.size
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
    return A.tocsr()


def fd_weights(sys: FdSystem) -> np.ndarray:
    """Trapezoid weights per unknown: ``dx_i`` inside, ``sum_c dx_c / 2`` at vertices.

    The ghost-point Laplacian equals ``W^{-1} S`` with ``W = diag(weights)``
    and ``S`` symmetric.
    """
    w = np.zeros(sys.size)
    for arc in sys.graph.arcs:
        idx = sys.nodes(arc.id)
        h = sys.dx[arc.id - 1]
        w[idx[1:-1]] = h
        w[idx[0]] += 0.5 * h
        w[idx[-1]] += 0.5 * h
    return w


def fd_sample(sys: FdSystem, f) -> np.ndarray:
    """Samples of ``f(arc, x)`` at every unknown.

    A vertex takes the mean of the incident arcs' end values, which is the
    common value whenever ``f`` is continuous there.
    """
    u = np.zeros(sys.size)
    count = np.zeros(sys.graph.vertex_count)
    for arc in sys.graph.arcs:
        idx = sys.nodes(arc.id)
        vals = np.asarray(f(arc.id, sys.positions(arc.id)), dtype=float)
        u[idx[1:-1]] = vals[1:-1]
        u[idx[0]] += vals[0]
        u[idx[-1]] += vals[-1]
        count[arc.tail - 1] += 1
        count[arc.head - 1] += 1
    u[: len(count)] /= count
    return u


def pinv_solve(A: np.ndarray, b: np.ndarray, rcond: float = 1e-12, *, deflate: bool = False) -> np.ndarray:
    """Minimum-norm least-squares solution, dropping ``s < rcond * s_max``.

    With ``deflate`` the component of ``b`` along the dropped left singular
    vectors is removed first, so the returned ``u`` solves ``A u = b'``
    exactly (up to rounding) for the compatible part ``b'`` of ``b``.
    """
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * s[0]
    u = Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])
    if deflate:
        return u, U[:, keep] @ (U[:, keep].T @ b)
    return u


def fd_poisson(
    sys: FdSystem,
    f: np.ndarray,
    *,
    vertex: str = "ghost",
    rcond: float = 1e-12,
    remove_mean: bool = False,
):
    """Minimum-norm solution of ``L u = f`` by SVD pseudo-inverse.

    Returns ``(u, residual_norm)``. Raises :class:`FdIncompatibleError` when
    the residual exceeds ``1e-6 ||f||``, which means ``f`` has a component
    outside the range (a nonzero discrete mean). ``remove_mean`` drops that
    component instead; use it for samples of a mean-free function whose
    discrete mean is only zero up to the discretization error.
    """
    b = np.array(f, dtype=float)
    if b.shape != (sys.size,):
        raise ValueError(f"rhs must have {sys.size} entries")
    if vertex == "one-sided":
        b[: sys.graph.vertex_count] = 0.0
    A = fd_laplacian(sys, vertex).toarray()
    if remove_mean:
        u, b = pinv_solve(A, b, rcond, deflate=True)
    else:
        u = pinv_solve(A, b, rcond)
    res = float(np.linalg.norm(A @ u - b))
    norm = float(np.linalg.norm(b))
    if res > 1e-6 * norm:
        raise FdIncompatibleError(res, norm)
    return u, res


def fd_eigs(sys: FdSystem, count: int | None = None, *, method: str = "symmetric") -> np.ndarray:
    """Smallest eigenvalues of ``-L``, which approximate ``k_q^2``.

    ``symmetric`` diagonalizes ``W^{1/2}(-L)W^{-1/2}``, an exact similarity
    transform of the row-form operator. ``general`` runs a nonsymmetric
    eigensolver on the row form itself and is kept as a cross-check.
    """
    n = sys.size
    count = n if count is None else count
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in 1..{n}")
    L = fd_laplacian(sys).toarray()
    if method == "symmetric":
        w = np.sqrt(fd_weights(sys))
        S = -(w[:, None] * L / w[None, :])
        lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    elif method == "general":
        lam = np.sort(np.linalg.eigvals(-L).real)
    else:
        raise ValueError("method must be 'symmetric' or 'general'")
    return lam[:count]


def _check_cfl(sys: FdSystem, dt: float, enforce: bool) -> None:
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    limit = float(np.min(sys.dx))
    if enforce and dt > limit * (1.0 + 1e-12):
        raise ValueError(f"CFL violated: dt = {dt} > min dx = {limit}")


def fd_wave_start(sys: FdSystem, u0: np.ndarray, v0: np.ndarray | None, dt: float, *, L=None, enforce_cfl: bool = True):
    """Second time level from a Taylor step ``u0 + dt v0 + dt^2/2 L u0``."""
    _check_cfl(sys, dt, enforce_cfl)
    L = fd_laplacian(sys) if L is None else L
    u1 = u0 + 0.5 * dt * dt * (L @ u0)
    if v0 is not None:
        u1 = u1 + dt * v0
    return u1


def fd_wave_step(sys: FdSystem, u_prev, u_curr, dt: float, *, L=None, enforce_cfl: bool = True):
    """Leapfrog ``u^{r+1} = 2u^r - u^{r-1} + dt^2 L u^r``.

    Interior rows reduce to the usual three-point update and vertex rows to
    the ghost-eliminated vertex update.
    """
    _check_cfl(sys, dt, enforce_cfl)
    L = fd_laplacian(sys) if L is None else L
    return 2.0 * u_curr - u_prev + dt * dt * (L @ u_curr)


@dataclass(frozen=True)
class WaveTrace:
    times: np.ndarray  # energy sample times (half steps)
    energy: np.ndarray
    u_prev: np.ndarray
    u_curr: np.ndarray
    steps: int


def fd_wave_run(
    sys: FdSystem,
    u0: np.ndarray,
    v0: np.ndarray | None,
    dt: float,
    T: float,
    *,
    energy_every: int = 1,
    enforce_cfl: bool = True,
) -> WaveTrace:
    """Leapfrog from ``t = 0`` to the last step not beyond ``T``.

    The energy of levels ``(r, r+1)`` is recorded every ``energy_every``
    steps at time ``(r + 1/2) dt``.
    """
    _check_cfl(sys, dt, enforce_cfl)
    L = fd_laplacian(sys)
    steps = int(math.floor(T / dt + 1e-9))
    u_prev = np.asarray(u0, dtype=float)
    u_curr = fd_wave_start(sys, u_prev, v0, dt, L=L, enforce_cfl=enforce_cfl)
    times, energy = [], []
    for r in range(steps):
        if energy_every and r % energy_every == 0:
            times.append((r + 0.5) * dt)
            energy.append(fd_energy(sys, u_prev, u_curr, dt))
        if r + 1 < steps:
            u_prev, u_curr = u_curr, 2.0 * u_curr - u_prev + dt * dt * (L @ u_curr)
    return WaveTrace(np.array(times), np.array(energy), u_prev, u_curr, steps)


def fd_energy(sys: FdSystem, u_prev, u_curr, dt: float) -> float:
    """``sum_i int 1/2 (u_t^2 + u_x^2) dx`` between two consecutive levels.

    ``u_t`` is the difference quotient of the levels and ``u_x`` the
    derivative of their mean (centered inside, one-sided three-point at the
    vertices), so the value belongs to the half step between the levels.
    Trapezoid rule per arc.
    """
    total = 0.0
    u_prev = np.asarray(u_prev)
    u_curr = np.asarray(u_curr)
    for arc in sys.graph.arcs:
        idx = sys.nodes(arc.id)
        h = sys.dx[arc.id - 1]
        ut = (u_curr[idx] - u_prev[idx]) / dt
        mid = 0.5 * (u_curr[idx] + u_prev[idx])
        ux = np.gradient(mid, h, edge_order=2) if len(idx) > 2 else np.full(len(idx), (mid[1] - mid[0]) / h)
        total += 0.5 * trapezoid(ut * ut + ux * ux, dx=h)
    return float(total)
