"""Harmonic modes ``A_j sin(kx) + B_j cos(kx)`` and their L2 inner products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HarmonicMode",
    "constant_mode",
    "arc_inner",
    "mode_pair_inner",
    "gram_matrix",
    "mode_residuals",
]


def _int_cos(w, l):
    # integral of cos(w x) over [0, l]; exact at w = 0
    return l * np.sinc(w * l / np.pi)


def _int_sin(w, l):
    # integral of sin(w x) over [0, l] = 2 sin^2(w l / 2) / w, written without cancellation
    return 0.5 * w * l * l * np.sinc(w * l / (2.0 * np.pi)) ** 2


def arc_inner(a1, b1, k1, a2, b2, k2, l):
    """Closed-form ``int_0^l (a1 sin k1x + b1 cos k1x)(a2 sin k2x + b2 cos k2x) dx``.

    Broadcasts over all arguments. Product-to-sum reduction; the sinc forms
    stay accurate as ``k1 - k2 -> 0`` so no separate equal-frequency branch
    is needed.
    """
    d = k1 - k2
    s = k1 + k2
    cd, cs = _int_cos(d, l), _int_cos(s, l)
    sd, ss = _int_sin(d, l), _int_sin(s, l)
    sin_sin = 0.5 * (cd - cs)
    cos_cos = 0.5 * (cd + cs)
    sin_cos = 0.5 * (ss + sd)
    cos_sin = 0.5 * (ss - sd)
    return a1 * a2 * sin_sin + b1 * b2 * cos_cos + a1 * b2 * sin_cos + b1 * a2 * cos_sin


@dataclass(frozen=True, eq=False)
class HarmonicMode:
    """One eigenfunction of the graph Laplacian, eigenvalue ``-k**2``.

    ``A`` and ``B`` hold the per-arc sine and cosine amplitudes; ``lengths``
    are the arc lengths of the graph the mode lives on.
    """

    k: float
    A: np.ndarray
    B: np.ndarray
    lengths: np.ndarray

    @property
    def eigenvalue(self) -> float:
        return -self.k * self.k

    @property
    def amplitudes(self) -> np.ndarray:
        """Interleaved vector ``(A_1, B_1, ..., A_m, B_m)``."""
        x = np.empty(2 * len(self.A))
        x[0::2] = self.A
        x[1::2] = self.B
        return x

    @property
    def norm(self) -> float:
        return math.sqrt(mode_pair_inner(self, self))

    def scaled(self, factor: float) -> "HarmonicMode":
        return HarmonicMode(self.k, self.A * factor, self.B * factor, self.lengths)

    def value(self, arc: int, x):
        x = np.asarray(x, dtype=float)
        j = arc - 1
        return self.A[j] * np.sin(self.k * x) + self.B[j] * np.cos(self.k * x)

    def derivative(self, arc: int, x):
        x = np.asarray(x, dtype=float)
        j = arc - 1
        return self.k * (self.A[j] * np.cos(self.k * x) - self.B[j] * np.sin(self.k * x))


def constant_mode(lengths) -> HarmonicMode:
    """The normalized k = 0 mode ``1/sqrt(L)``."""
    lengths = np.asarray(lengths, dtype=float)
    total = float(np.sum(lengths))
    return HarmonicMode(0.0, np.zeros(len(lengths)), np.full(len(lengths), 1.0 / math.sqrt(total)), lengths)


def mode_pair_inner(m1: HarmonicMode, m2: HarmonicMode) -> float:
    """Broken-L2 inner product summed over arcs."""
    return float(np.sum(arc_inner(m1.A, m1.B, m1.k, m2.A, m2.B, m2.k, m1.lengths)))


def gram_matrix(modes) -> np.ndarray:
    modes = list(modes)
    if not modes:
        return np.zeros((0, 0))
    k = np.array([m.k for m in modes])
    A = np.array([m.A for m in modes])
    B = np.array([m.B for m in modes])
    l = modes[0].lengths
    G = arc_inner(
        A[:, None, :], B[:, None, :], k[:, None, None],
        A[None, :, :], B[None, :, :], k[None, :, None], l[None, None, :],
    )
    return G.sum(axis=2)


def mode_residuals(g, mode: HarmonicMode) -> tuple[float, float]:
    """Largest continuity jump and largest Kirchhoff flux sum over all vertices."""
    jump = 0.0
    flux = 0.0
    for v in range(1, g.vertex_count + 1):
        incs = g.incidences(v)
        vals = []
        total = 0.0
        for inc in incs:
            x = mode.lengths[inc.arc - 1] if inc.at_head else 0.0
            vals.append(float(mode.value(inc.arc, x)))
            total += inc.sign * float(mode.derivative(inc.arc, x))
        jump = max(jump, max(abs(val - vals[0]) for val in vals))
        flux = max(flux, abs(total))
    return jump, flux
