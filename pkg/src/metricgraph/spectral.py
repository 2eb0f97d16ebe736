"""Resonant frequencies and eigenmodes of the graph Laplacian.

For each ``k > 0`` the vertex conditions applied to the arc solutions
``A_j sin(kx) + B_j cos(kx)`` give a square system ``M(k) X = 0`` with
``X = (A_1, B_1, ..., A_m, B_m)``. Resonances are the zeros of the inverse
condition number of ``M(k)``: they are bracketed on a grid, polished by a
derivative-free line minimization, and the modes are read off the SVD null
space.
"""

from __future__ import annotations

import functools
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .graph import MetricGraph, parse_graph, serialize_graph
from .modes import HarmonicMode, constant_mode, mode_pair_inner, mode_residuals

__all__ = [
    "RowTag",
    "FrequencyMatrix",
    "ScanWarning",
    "NullSpaceError",
    "RootResult",
    "ModeBasis",
    "assemble_M",
    "assemble_batch",
    "rcond_estimate",
    "rcond_curve",
    "scan_brackets",
    "refine_root",
    "extract_modes",
    "compute_basis",
    "default_dk",
    "save_basis",
    "load_basis",
]

log = logging.getLogger(__name__)

ROOT_THRESHOLD = 1e-10
SUSPICIOUS_THRESHOLD = 1e-6
NULL_TOL = 1e-8


class RowTag(NamedTuple):
    kind: str  # "continuity" or "kirchhoff"
    vertex: int
    arcs: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    k: float
    entries: np.ndarray
    row_tags: tuple[RowTag, ...]


class ScanWarning(UserWarning):
    """Bracket refinement hit its depth cap; roots may have been missed."""

    def __init__(self, message: str, interval: tuple[float, float]):
        super().__init__(message)
        self.interval = interval


class NullSpaceError(RuntimeError):
    def __init__(self, k: float, singular_values: np.ndarray):
        super().__init__(
            f"no null space at k={k!r}: sigma_min/sigma_max = "
            f"{singular_values[-1] / singular_values[0]:.3e}"
        )
        self.k = k
        self.singular_values = singular_values


class _Pattern(NamedTuple):
    size: int
    row: np.ndarray
    col: np.ndarray  # column of the sine amplitude; cosine is col + 1
    x: np.ndarray  # evaluation coordinate on the arc
    weight: np.ndarray
    flux: np.ndarray  # bool: derivative row entry
    tags: tuple[RowTag, ...]


@functools.lru_cache(maxsize=32)
def _pattern(g: MetricGraph) -> _Pattern:
    row, col, x, weight, flux = [], [], [], [], []
    tags = []
    r = 0
    for v in range(1, g.vertex_count + 1):
        incs = g.incidences(v)
        first = incs[0]

        def put(inc, w, is_flux):
            row.append(r)
            col.append(2 * (inc.arc - 1))
            x.append(g.lengths[inc.arc - 1] if inc.at_head else 0.0)
            weight.append(w)
            flux.append(is_flux)

        for other in incs[1:]:
            put(first, 1.0, False)
            put(other, -1.0, False)
            tags.append(RowTag("continuity", v, (first.arc, other.arc)))
            r += 1
        # outgoing derivatives; row sign fixed so the first incidence enters with +1
        for inc in incs:
            put(inc, float(inc.sign * first.sign), True)
        tags.append(RowTag("kirchhoff", v, tuple(i.arc for i in incs)))
        r += 1
    assert r == 2 * g.arc_count
    return _Pattern(
        r, np.array(row), np.array(col), np.array(x), np.array(weight), np.array(flux, dtype=bool), tuple(tags)
    )


def assemble_batch(g: MetricGraph, ks) -> np.ndarray:
    """``M(k)`` for every ``k`` in ``ks``, shape ``(len(ks), 2m, 2m)``."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    p = _pattern(g)
    kx = ks[:, None] * p.x[None, :]
    s, c = np.sin(kx), np.cos(kx)
    # value rows: (sin, cos); derivative rows without the common factor k: (cos, -sin)
    first = np.where(p.flux, c, s) * p.weight
    second = np.where(p.flux, -s, c) * p.weight
    out = np.zeros((len(ks), p.size, p.size))
    idx = np.arange(len(ks))[:, None]
    np.add.at(out, (idx, p.row[None, :], p.col[None, :]), first)
    np.add.at(out, (idx, p.row[None, :], p.col[None, :] + 1), second)
    return out


def assemble_M(g: MetricGraph, k: float) -> FrequencyMatrix:
    if not k > 0.0:
        raise ValueError("assemble_M needs k > 0; the k = 0 mode is the constant")
    return FrequencyMatrix(float(k), assemble_batch(g, [k])[0], _pattern(g).tags)


def rcond_estimate(M, method: str = "svd") -> float:
    """Inverse condition number of a square matrix.

    ``method="svd"`` gives ``sigma_min / sigma_max``; ``method="1norm"``
    gives ``1 / (||M||_1 ||M^-1||_1)``. Both vanish exactly on singular
    matrices.
    """
    M = M.entries if isinstance(M, FrequencyMatrix) else np.asarray(M, dtype=float)
    if method == "svd":
        sv = np.linalg.svd(M, compute_uv=False)
        return 0.0 if sv[0] == 0.0 else float(sv[-1] / sv[0])
    if method == "1norm":
        norm = np.linalg.norm(M, 1)
        if norm == 0.0:
            return 0.0
        try:
            inv = np.linalg.inv(M)
        except np.linalg.LinAlgError:
            return 0.0
        return float(1.0 / (norm * np.linalg.norm(inv, 1)))
    raise ValueError(f"unknown rcond method {method!r}")


def rcond_curve(g: MetricGraph, ks, method: str = "svd") -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    size = 2 * g.arc_count
    chunk = max(1, int(4e6 // (size * size)))
    out = np.empty(len(ks))
    for i in range(0, len(ks), chunk):
        Ms = assemble_batch(g, ks[i:i + chunk])
        if method == "svd":
            sv = np.linalg.svd(Ms, compute_uv=False)
            with np.errstate(invalid="ignore", divide="ignore"):
                out[i:i + chunk] = np.where(sv[:, 0] > 0, sv[:, -1] / sv[:, 0], 0.0)
        else:
            out[i:i + chunk] = [rcond_estimate(M, method) for M in Ms]
    return out


def _local_minima(r: np.ndarray) -> np.ndarray:
    return np.flatnonzero((r[1:-1] < r[:-2]) & (r[1:-1] <= r[2:])) + 1


def _brackets_on_grid(g, ks, r, level, max_levels, method):
    h = ks[1] - ks[0]
    mins = _local_minima(r)
    out = []
    i = 0
    while i < len(mins):
        j = i
        # minima separated by a single sample may hide further roots between them
        while j + 1 < len(mins) and ks[mins[j + 1]] - ks[mins[j]] <= 2.0 * h * (1.0 + 1e-9):
            j += 1
        group = mins[i:j + 1]
        if len(group) > 1:
            lo, hi = ks[group[0] - 1], ks[group[-1] + 1]
            if level < max_levels:
                fine = np.linspace(lo, hi, 2 * (group[-1] - group[0] + 2) + 1)
                out.extend(_brackets_on_grid(g, fine, rcond_curve(g, fine, method), level + 1, max_levels, method))
            else:
                warnings.warn(
                    ScanWarning(f"bracket refinement depth cap reached on [{lo!r}, {hi!r}]", (lo, hi)),
                    stacklevel=3,
                )
                out.extend((ks[m - 1], ks[m + 1]) for m in group)
        else:
            m = group[0]
            out.append((ks[m - 1], ks[m + 1]))
        i = j + 1
    return out


def scan_brackets(
    g: MetricGraph,
    k_lo: float,
    k_hi: float,
    dk: float,
    *,
    max_levels: int = 6,
    method: str = "svd",
) -> list[tuple[float, float]]:
    """Brackets around the interior local minima of ``r(k)`` on ``[k_lo, k_hi]``.

    The grid spacing is at most ``dk``. Where consecutive minima sit only
    two samples apart the neighbourhood is resampled at half the spacing,
    recursively up to ``max_levels`` times; hitting the cap emits a
    :class:`ScanWarning`. Brackets are returned sorted and are not yet
    classified: whether a minimum is a true resonance is decided by
    :func:`refine_root`.
    """
    if not 0.0 < k_lo < k_hi:
        raise ValueError("need 0 < k_lo < k_hi")
    if dk <= 0.0:
        raise ValueError("dk must be positive")
    n = max(2, int(math.ceil((k_hi - k_lo) / dk)))
    ks = np.linspace(k_lo, k_hi, n + 1)
    r = rcond_curve(g, ks, method)
    return sorted(_brackets_on_grid(g, ks, r, 0, max_levels, method))


@dataclass(frozen=True)
class RootResult:
    k: float
    rcond: float
    converged: bool
    iterations: int

    @property
    def is_root(self) -> bool:
        return self.rcond < ROOT_THRESHOLD


_CGOLD = 0.5 * (3.0 - math.sqrt(5.0))


def _brent_minimize(f, a, b, rtol, maxiter):
    """Derivative-free minimization on [a, b]: golden section with parabolic steps."""
    x = w = v = a + _CGOLD * (b - a)
    fx = fw = fv = f(x)
    d = e = 0.0
    for it in range(1, maxiter + 1):
        xm = 0.5 * (a + b)
        tol1 = rtol * max(1.0, abs(x)) / 2.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, fx, True, it
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) < abs(0.5 * q * etemp) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if xm >= x else -tol1
                use_golden = False
        if use_golden:
            e = (a - x) if x >= xm else (b - x)
            d = _CGOLD * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d >= 0 else -tol1)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx, False, maxiter


def refine_root(
    g: MetricGraph,
    bracket: tuple[float, float],
    *,
    rtol: float = 1e-14,
    maxiter: int = 200,
    method: str = "svd",
) -> RootResult:
    """Minimize ``r(k)`` inside ``bracket`` to ``|dk| <= rtol * max(1, k)``.

    Returns the best iterate; ``converged`` is False if ``maxiter`` ran out.
    """
    a, b = float(bracket[0]), float(bracket[1])

    def r(k):
        return rcond_estimate(assemble_batch(g, [k])[0], method)

    k, rk, ok, it = _brent_minimize(r, a, b, rtol, maxiter)
    if not ok:
        log.warning("line minimization did not converge on [%r, %r] after %d iterations", a, b, it)
    if ROOT_THRESHOLD <= rk < SUSPICIOUS_THRESHOLD:
        log.warning("suspicious near-resonance at k=%r: r(k)=%.3e", k, rk)
    return RootResult(float(k), float(rk), ok, it)


def _normalize_and_sign(g: MetricGraph, k: float, vectors: np.ndarray) -> list[HarmonicMode]:
    lengths = np.array(g.lengths)
    modes = []
    for X in vectors:
        m = HarmonicMode(k, X[0::2].copy(), X[1::2].copy(), lengths)
        # modified Gram-Schmidt in the broken L2 inner product
        for prev in modes:
            c = mode_pair_inner(prev, m)
            m = HarmonicMode(k, m.A - c * prev.A, m.B - c * prev.B, lengths)
        m = m.scaled(1.0 / m.norm)
        amp = m.amplitudes
        big = np.flatnonzero(np.abs(amp) > 1e-12 * np.abs(amp).max())
        if amp[big[0]] < 0:
            m = m.scaled(-1.0)
        modes.append(m)
    return modes


def extract_modes(g: MetricGraph, k: float, *, null_tol: float = NULL_TOL) -> list[HarmonicMode]:
    """Orthonormal eigenmodes spanning the null space of ``M(k)``.

    Every right singular vector with ``sigma < null_tol * sigma_max`` gives
    one mode, so degenerate resonances return several. Modes are normalized
    in the broken L2 norm and signed so that the first nonzero amplitude
    is positive.
    """
    M = assemble_batch(g, [k])[0]
    _, sv, vt = np.linalg.svd(M)
    null = sv < null_tol * sv[0]
    if not null.any():
        raise NullSpaceError(float(k), sv)
    return _normalize_and_sign(g, float(k), vt[null])


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Eigenmodes sorted by ``k``, the constant mode first."""

    graph: MetricGraph
    modes: tuple[HarmonicMode, ...]
    k_max: float
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.modes)

    def __getitem__(self, q):
        return self.modes[q]

    def __iter__(self):
        return iter(self.modes)

    @property
    def ks(self) -> np.ndarray:
        return np.array([m.k for m in self.modes])

    @property
    def A(self) -> np.ndarray:
        return np.array([m.A for m in self.modes])

    @property
    def B(self) -> np.ndarray:
        return np.array([m.B for m in self.modes])

    def truncated(self, count: int) -> "ModeBasis":
        """The first ``count`` modes (constant included)."""
        modes = self.modes[:count]
        return ModeBasis(self.graph, modes, modes[-1].k if len(modes) < len(self.modes) else self.k_max)

    def up_to(self, k: float) -> "ModeBasis":
        modes = tuple(m for m in self.modes if m.k <= k)
        return ModeBasis(self.graph, modes, min(k, self.k_max))

    def without(self, q: int) -> "ModeBasis":
        return ModeBasis(self.graph, self.modes[:q] + self.modes[q + 1:], self.k_max)

    def max_residual(self) -> float:
        """Largest vertex residual over all modes, scaled by ``1 + k``."""
        worst = 0.0
        for m in self.modes:
            jump, flux = mode_residuals(self.graph, m)
            worst = max(worst, jump / (1.0 + m.k), flux / (1.0 + m.k))
        return worst


def default_dk(g: MetricGraph) -> float:
    """Scan spacing: 1/40 of the mean resonance spacing ``pi / L``."""
    return math.pi / (40.0 * g.total_length)


def _dedup_tol(k: float) -> float:
    return 1e-9 * max(1.0, k)


def _partner_gap(g: MetricGraph, k: float) -> float:
    """Estimated distance from the root ``k`` to its nearest neighbouring root.

    Near a simple root the second singular value is roughly the slope of
    ``r`` times the distance to the next root, so their ratio gauges how
    close a neighbour may sit. Returns 0 for a multiple root (handled by the
    null space) and inf if no estimate is possible.
    """
    sv = np.linalg.svd(assemble_batch(g, [k])[0], compute_uv=False)
    if sv[0] == 0.0 or sv[-2] < NULL_TOL * sv[0]:
        return 0.0
    h = 1e-7 * max(1.0, k)
    slope = rcond_curve(g, np.array([k + h]))[0] / h
    if slope <= 0.0:
        return math.inf
    return (sv[-2] / sv[0]) / slope


def _partner_search(g, roots, dk, k_max, method, max_points=20000):
    """Rescan finely around roots that may have a neighbour inside one grid cell.

    Two roots closer than the scan spacing merge into a single grid minimum,
    so the coarse scan reports only one of them.
    """
    found = sorted(roots)
    queue = list(found)
    added = 0
    while queue:
        k = queue.pop()
        gap = _partner_gap(g, k)
        if gap == 0.0 or gap >= 8.0 * dk:
            continue
        # the estimate is only good to a small factor either way
        half = 2.0 * (dk + gap)
        lo, hi = max(k - half, 0.5 * k), k + half
        step = max(min(dk, gap) / 16.0, (hi - lo) / max_points)
        for br in scan_brackets(g, lo, hi, step, method=method):
            res = refine_root(g, br, method=method)
            if not res.is_root or res.k > k_max:
                continue
            if min(abs(res.k - x) for x in found) <= _dedup_tol(res.k):
                continue
            found.append(res.k)
            found.sort()
            queue.append(res.k)
            added += 1
    return found, added


def compute_basis(
    g: MetricGraph,
    k_max: float,
    *,
    dk: float | None = None,
    k_min: float | None = None,
    method: str = "svd",
) -> ModeBasis:
    """All modes with ``k <= k_max``, multiplicities included.

    The constant mode is built analytically. The scan starts at ``k_min``
    (default ``dk / 2``) and runs slightly past ``k_max`` so resonances just
    below the cap are still interior minima.
    """
    if dk is None:
        dk = default_dk(g)
    k_lo = dk / 2.0 if k_min is None else k_min
    brackets = scan_brackets(g, k_lo, k_max + 2.0 * dk, dk, method=method)
    roots: list[float] = []
    rejected = 0
    for br in brackets:
        res = refine_root(g, br, method=method)
        if not res.is_root:
            rejected += 1
            continue
        if res.k > k_max:
            continue
        if roots and abs(res.k - roots[-1]) <= _dedup_tol(res.k):
            continue
        roots.append(res.k)
    roots, partners = _partner_search(g, roots, dk, k_max, method)
    modes = [constant_mode(g.lengths)]
    for k in roots:
        modes.extend(extract_modes(g, k))
    return ModeBasis(
        g, tuple(modes), float(k_max),
        info={"dk": dk, "brackets": len(brackets), "rejected_minima": rejected, "partner_roots": partners},
    )


def save_basis(basis: ModeBasis, path) -> None:
    data = {
        "graph": serialize_graph(basis.graph),
        "k_max": basis.k_max,
        "modes": [{"k": m.k, "amplitudes": m.amplitudes.tolist()} for m in basis.modes],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)


def load_basis(path) -> ModeBasis:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    g = parse_graph(data["graph"])
    modes = []
    for rec in data["modes"]:
        X = np.asarray(rec["amplitudes"], dtype=float)
        modes.append(HarmonicMode(float(rec["k"]), X[0::2].copy(), X[1::2].copy(), np.array(g.lengths)))
    return ModeBasis(g, tuple(modes), float(data["k_max"]))
