"""Adaptive Gauss-Legendre quadrature for vector-valued integrands."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["gauss_legendre", "adaptive_gauss"]


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point rule on [-1, 1] (read-only)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _rule(f, a, b, n):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    vals = np.asarray(f(0.5 * (a + b) + half * x), dtype=float)
    return half * (vals @ w)


def adaptive_gauss(f, a: float, b: float, *, tol: float = 1e-12, order: int = 20, max_depth: int = 40):
    """Integrate ``f`` over ``[a, b]``.

    ``f`` maps a 1-D array of abscissae (shape ``(n,)``) to values of shape
    ``(..., n)``; the result has the leading shape. Each panel compares an
    ``order``-point rule with the sum of the same rule on its two halves and
    is bisected until they agree to ``tol * max(1, |I|)`` in the max norm,
    where ``|I|`` is a running estimate of the integral's size.

    Returns
    -------
    value : ndarray or float
    converged : bool
        False if some panel hit ``max_depth`` before meeting the tolerance.
    """
    if b < a:
        val, ok = adaptive_gauss(f, b, a, tol=tol, order=order, max_depth=max_depth)
        return -val, ok
    if b == a:
        probe = np.asarray(f(np.array([a])), dtype=float)
        return np.zeros(probe.shape[:-1]) if probe.ndim > 1 else 0.0, True

    whole = _rule(f, a, b, order)
    scale = max(1.0, float(np.max(np.abs(whole))))
    total = np.zeros_like(whole)
    converged = True
    # explicit stack: (a, b, coarse estimate, depth)
    stack = [(a, b, whole, 0)]
    while stack:
        lo, hi, coarse, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _rule(f, lo, mid, order)
        right = _rule(f, mid, hi, order)
        fine = left + right
        if np.max(np.abs(fine - coarse)) <= tol * scale:
            total = total + fine
            continue
        if depth >= max_depth:
            converged = False
            total = total + fine
            continue
        scale = max(scale, float(np.max(np.abs(fine))))
        stack.append((mid, hi, right, depth + 1))
        stack.append((lo, mid, left, depth + 1))
    if np.ndim(total) == 0:
        return float(total), converged
    return total, converged
