"""Eigenfunction expansions: projection, spectral Poisson, closed-form time evolution."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .graph import MetricGraph
from .quadrature import adaptive_gauss
from .spectral import ModeBasis

__all__ = [
    "SpectralExpansion",
    "CompatibilityError",
    "project",
    "poisson_spectral",
    "evolve_mode",
    "evolve_expansion",
    "evaluate_expansion",
    "mode_values",
    "WeylReport",
    "weyl_check",
]

log = logging.getLogger(__name__)


class CompatibilityError(ValueError):
    """Poisson right-hand side with nonzero mean; ``beta0`` is its constant-mode coefficient."""

    def __init__(self, beta0: float, norm: float):
        super().__init__(
            f"right-hand side is not mean-free: beta_0 = {beta0:.3e} (||beta|| = {norm:.3e})"
        )
        self.beta0 = beta0


@dataclass(frozen=True, eq=False)
class SpectralExpansion:
    """Coefficients of a function in a :class:`ModeBasis`.

    ``converged`` holds per-arc quadrature flags when the expansion came from
    :func:`project`, otherwise None.
    """

    basis: ModeBasis
    coefficients: np.ndarray
    converged: tuple[bool, ...] | None = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    def __len__(self) -> int:
        return len(self.coefficients)

    def truncated(self, count: int) -> "SpectralExpansion":
        return SpectralExpansion(self.basis.truncated(count), self.coefficients[:count])

    def __call__(self, arc: int, x):
        return evaluate_expansion(self, arc, x)


def mode_values(basis: ModeBasis, arc: int, x) -> np.ndarray:
    """All basis modes on ``arc`` at points ``x``: shape ``(len(basis), len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ks = basis.ks[:, None]
    j = arc - 1
    A = basis.A[:, j, None]
    B = basis.B[:, j, None]
    return A * np.sin(ks * x) + B * np.cos(ks * x)


def _arc_functions(f, g: MetricGraph) -> list[Callable]:
    """Normalize the accepted input forms to one vectorized callable per arc."""
    if callable(f):
        return [lambda x, j=j: np.broadcast_to(np.asarray(f(j, x), dtype=float), np.shape(x)) for j in range(1, g.arc_count + 1)]
    items = list(f)
    if len(items) != g.arc_count:
        raise ValueError(f"need one entry per arc ({g.arc_count}), got {len(items)}")
    out = []
    for j, item in enumerate(items, start=1):
        if callable(item):
            out.append(lambda x, fn=item: np.broadcast_to(np.asarray(fn(x), dtype=float), np.shape(x)))
        else:
            xs, ys = (np.asarray(a, dtype=float) for a in item)
            l = g.lengths[j - 1]
            if xs[0] > 0.0 or xs[-1] < l:
                raise ValueError(f"samples on arc {j} do not cover [0, {l}]")
            out.append(CubicSpline(xs, ys))
    return out


def project(
    f: Callable | Sequence,
    basis: ModeBasis,
    *,
    tol: float = 1e-12,
) -> SpectralExpansion:
    """Coefficients ``beta_q = sum_j int f_j V^q_j dx``.

    ``f`` is either a callable ``f(arc, x)``, or a sequence with one entry per
    arc holding a callable ``f_j(x)`` or a pair of sample arrays ``(x, y)``
    (interpolated by a cubic spline). Integrals use adaptive Gauss-Legendre
    quadrature per arc; non-converged arcs are logged and flagged in
    ``converged``.
    """
    g = basis.graph
    funcs = _arc_functions(f, g)
    beta = np.zeros(len(basis))
    flags = []
    for j, fj in enumerate(funcs, start=1):
        val, ok = adaptive_gauss(
            lambda x, fj=fj, j=j: mode_values(basis, j, x) * fj(x), 0.0, float(g.lengths[j - 1]), tol=tol
        )
        if not ok:
            log.warning("projection quadrature did not converge on arc %d", j)
        beta += val
        flags.append(ok)
    return SpectralExpansion(basis, beta, tuple(flags))


def poisson_spectral(F: SpectralExpansion, *, compat_tol: float = 1e-8) -> SpectralExpansion:
    """Zero-mean solution of ``U'' = F`` with Kirchhoff vertices.

    Raises :class:`CompatibilityError` when the constant-mode coefficient of
    ``F`` exceeds ``compat_tol * ||beta||``.
    """
    beta = F.coefficients
    ks = F.basis.ks
    norm = float(np.linalg.norm(beta))
    zero = ks == 0.0
    if np.any(np.abs(beta[zero]) > compat_tol * norm):
        raise CompatibilityError(float(beta[zero][0]), norm)
    alpha = np.zeros_like(beta)
    alpha[~zero] = -beta[~zero] / ks[~zero] ** 2
    return SpectralExpansion(F.basis, alpha)


def evolve_mode(a0, rate0, k, alpha: float, beta: float, gamma: float, t):
    """Solve ``alpha a'' + beta a' + (k^2 + gamma) a = 0`` in closed form.

    With ``alpha = 0`` the equation is first order and ``rate0`` is ignored.
    Otherwise, with ``sigma = -beta / (2 alpha)`` and
    ``D = sigma^2 - (k^2 + gamma) / alpha``, the solution is written as

        a(t) = exp(sigma t) [a0 C(t) + (rate0 - sigma a0) S(t)]

    where ``C, S`` are ``cos, sin/omega`` (``D < 0``), ``1, t`` (``D = 0``)
    or ``cosh, sinh/mu`` (``D > 0``). This form has no branch-point
    cancellation as the roots coalesce. Strongly overdamped modes use the
    two real exponentials directly so neither factor overflows.

    Parameters broadcast; returns ``(a(t), a'(t))``.
    """
    if alpha == 0.0 and beta == 0.0:
        raise ValueError("alpha and beta cannot both vanish")
    a0, rate0, k, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a0, rate0, k, t)))
    c = k * k + gamma
    if alpha == 0.0:
        e = np.exp(-c / beta * t)
        a = a0 * e
        return _out(a, -c / beta * a)

    sigma = -beta / (2.0 * alpha)
    D = sigma * sigma - c / alpha
    b0 = rate0 - sigma * a0
    with np.errstate(invalid="ignore", over="ignore"):
        w = np.sqrt(np.abs(D))
        wt = w * t
        osc = D < 0.0
        # S = sin(wt)/w or sinh(wt)/w, written as t * f(wt) to stay exact as w -> 0
        S = np.where(osc, t * np.sinc(wt / np.pi), t * np.where(wt > 0.0, np.sinh(wt) / np.where(wt > 0.0, wt, 1.0), 1.0))
        C = np.where(osc, np.cos(wt), np.cosh(wt))
        e = np.exp(sigma * t)
        a = e * (a0 * C + b0 * S)
        da = e * (sigma * (a0 * C + b0 * S) + a0 * D * S + b0 * C)

        # overdamped with a large exponent: use the two real roots
        big = (D > 0.0) & (wt > 20.0)
        if np.any(big):
            r2 = sigma - w if sigma <= 0.0 else sigma + w
            r1 = (c / alpha) / r2
            r_hi = np.maximum(r1, r2)
            r_lo = np.minimum(r1, r2)
            # a = p e^{r_hi t} + q e^{r_lo t}
            den = r_hi - r_lo
            p = (rate0 - r_lo * a0) / den
            q = (r_hi * a0 - rate0) / den
            eh, el = np.exp(r_hi * t), np.exp(r_lo * t)
            a = np.where(big, p * eh + q * el, a)
            da = np.where(big, p * r_hi * eh + q * r_lo * el, da)
    return _out(a, da)


def _out(a, da):
    if np.ndim(a) == 0:
        return float(a), float(da)
    return a, da


def evolve_expansion(
    U0: SpectralExpansion,
    V0: SpectralExpansion | None,
    alpha: float,
    beta: float,
    gamma: float,
    t: float,
) -> tuple[SpectralExpansion, SpectralExpansion]:
    """Evolve ``alpha u_tt + beta u_t = u_xx - gamma u`` mode by mode.

    ``V0`` is the initial velocity (zero if None). Returns the solution and
    its time derivative at ``t``.
    """
    rate = np.zeros(len(U0)) if V0 is None else V0.coefficients
    if V0 is not None and V0.basis is not U0.basis and len(V0) != len(U0):
        raise ValueError("initial data must share a basis")
    a, da = evolve_mode(U0.coefficients, rate, U0.basis.ks, alpha, beta, gamma, t)
    return SpectralExpansion(U0.basis, np.atleast_1d(a)), SpectralExpansion(U0.basis, np.atleast_1d(da))


def evaluate_expansion(e: SpectralExpansion, arc: int, x):
    """Synthesize ``sum_q alpha_q V^q`` on ``arc`` at ``x`` (scalar or array)."""
    g = e.basis.graph
    if not 1 <= arc <= g.arc_count:
        raise ValueError(f"arc {arc} outside 1..{g.arc_count}")
    l = g.lengths[arc - 1]
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > l) or not np.all(np.isfinite(xa)):
        raise ValueError(f"x must lie in [0, {l}] on arc {arc}")
    vals = e.coefficients @ mode_values(e.basis, arc, xa.ravel())
    if xa.ndim == 0:
        return float(vals[0])
    return vals.reshape(xa.shape)


class WeylViolation(NamedTuple):
    q: float
    count: int
    lower: float
    upper: float


@dataclass(frozen=True)
class WeylReport:
    total_length: float
    arc_count: int
    vertex_count: int
    checked: int
    violations: tuple[WeylViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def weyl_check(basis: ModeBasis, g: MetricGraph | None = None, *, grid: int = 2000) -> WeylReport:
    """Check ``qL/pi - |E| <= N(q) <= qL/pi + |V|`` for ``q`` in ``(0, k_max]``.

    ``N(q)`` counts modes with ``k <= q``, the constant mode included. The
    count is tested on a uniform grid, at every mode's ``k`` and just below
    it, which is where each bound is tightest.
    """
    g = basis.graph if g is None else g
    ks = np.sort(basis.ks)
    L = g.total_length
    k_max = basis.k_max
    pos = ks[ks > 0.0]
    below = pos * (1.0 - 1e-12)
    qs = np.concatenate([np.linspace(0.0, k_max, grid + 1)[1:], pos, below])
    qs = np.unique(qs[(qs > 0.0) & (qs <= k_max)])
    counts = np.searchsorted(ks, qs, side="right")
    lower = qs * L / math.pi - g.arc_count
    upper = qs * L / math.pi + g.vertex_count
    bad = (counts < lower) | (counts > upper)
    violations = tuple(
        WeylViolation(float(q), int(n), float(lo), float(hi))
        for q, n, lo, hi in zip(qs[bad], counts[bad], lower[bad], upper[bad])
    )
    return WeylReport(L, g.arc_count, g.vertex_count, len(qs), violations)
