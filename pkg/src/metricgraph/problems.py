"""Analytic right-hand sides, the exact pumpkin Poisson solution and fitting helpers."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .graph import MetricGraph

__all__ = [
    "RhsSpec",
    "parse_rhs",
    "PUMPKIN_X0",
    "PUMPKIN_S",
    "pumpkin_rhs",
    "pumpkin_exact",
    "constant_fit",
    "fitted_error",
    "loglog_slope",
]

PUMPKIN_X0 = 0.865
PUMPKIN_S = 0.15

# exact solution of U'' = dgaussian(0.865, 0.15) on arc 2 of the (sqrt2, sqrt3, sqrt5) pumpkin
_C_OUTER = -0.04431134627263788525
_C_MID = 0.08862269254527577050
_SLOPE = (0.06267946415920350157, -0.10232143801160161859, 0.03964197385239476854)


@dataclass(frozen=True)
class RhsSpec:
    """A named analytic family placed on the graph.

    ``gaussian`` and ``dgaussian`` live on one arc and vanish elsewhere;
    ``mode`` is basis mode ``q`` (needs a basis); ``constant`` is ``c`` on
    every arc.
    """

    family: str
    x0: float = 0.0
    s: float = 1.0
    arc: int = 1
    q: int = 0
    c: float = 1.0

    def __str__(self) -> str:
        if self.family in ("gaussian", "dgaussian"):
            return f"{self.family}({self.x0!r},{self.s!r},{self.arc})"
        if self.family == "mode":
            return f"mode({self.q})"
        return f"constant({self.c!r})"

    def validate(self, g: MetricGraph) -> None:
        if self.family in ("gaussian", "dgaussian"):
            if not 1 <= self.arc <= g.arc_count:
                raise ValueError(f"{self}: arc outside 1..{g.arc_count}")
            l = g.lengths[self.arc - 1]
            if not 0.0 <= self.x0 <= l:
                raise ValueError(f"{self}: x0 outside [0, {l}]")
            if self.s <= 0.0:
                raise ValueError(f"{self}: s must be positive")

    def function(self, g: MetricGraph, basis=None):
        """Vectorized callable ``f(arc, x)``."""
        self.validate(g)
        if self.family == "gaussian":
            def f(arc, x):
                x = np.asarray(x, dtype=float)
                if arc != self.arc:
                    return np.zeros_like(x)
                return np.exp(-((x - self.x0) / self.s) ** 2)
        elif self.family == "dgaussian":
            def f(arc, x):
                x = np.asarray(x, dtype=float)
                if arc != self.arc:
                    return np.zeros_like(x)
                z = (x - self.x0) / self.s
                return -2.0 * z / self.s * np.exp(-z * z)
        elif self.family == "mode":
            if basis is None:
                raise ValueError("mode(q) needs a mode basis")
            mode = basis[self.q]

            def f(arc, x):
                return mode.value(arc, x)
        elif self.family == "constant":
            def f(arc, x):
                return np.full(np.shape(x), self.c)
        else:
            raise ValueError(f"unknown family {self.family!r}")
        return f


_RHS_RE = re.compile(r"^\s*([a-z]+)\s*(?:\((.*)\))?\s*$")


def parse_rhs(text: str) -> RhsSpec:
    """Parse ``gaussian(x0,s,arc)``, ``dgaussian(x0,s,arc)``, ``mode(q)``, ``constant`` or ``constant(c)``."""
    m = _RHS_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse right-hand side {text!r}")
    name, args = m.group(1), m.group(2)
    vals = [a.strip() for a in args.split(",")] if args and args.strip() else []
    try:
        if name in ("gaussian", "dgaussian"):
            if len(vals) != 3:
                raise ValueError
            return RhsSpec(name, x0=float(vals[0]), s=float(vals[1]), arc=int(vals[2]))
        if name == "mode":
            if len(vals) != 1:
                raise ValueError
            return RhsSpec("mode", q=int(vals[0]))
        if name == "constant":
            if len(vals) > 1:
                raise ValueError
            return RhsSpec("constant", c=float(vals[0]) if vals else 1.0)
    except ValueError:
        raise ValueError(f"bad arguments in {text!r}") from None
    raise ValueError(f"unknown family {name!r} in {text!r}")


def pumpkin_rhs() -> RhsSpec:
    return RhsSpec("dgaussian", x0=PUMPKIN_X0, s=PUMPKIN_S, arc=2)


def pumpkin_exact(arc: int, x):
    """Exact Poisson solution for :func:`pumpkin_rhs`, up to an additive constant."""
    x = np.asarray(x, dtype=float)
    if arc == 2:
        return _C_MID + _SLOPE[1] * x + 3.0 * math.sqrt(math.pi) / 40.0 * erf((200.0 * x - 173.0) / 30.0)
    if arc in (1, 3):
        return _C_OUTER + _SLOPE[arc - 1] * x
    raise ValueError(f"pumpkin has arcs 1..3, got {arc}")


def constant_fit(numeric, exact) -> float:
    """Constant ``c`` minimizing ``sum (numeric - exact - c)^2``."""
    d = np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float)
    return float(np.mean(d))


def fitted_error(numeric, exact) -> float:
    """Max-norm difference after removing the least-squares constant."""
    d = np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float)
    return float(np.max(np.abs(d - np.mean(d))))


def loglog_slope(x, y) -> tuple[float, float]:
    """Ordinary least squares of ``log10 y`` on ``log10 x``: ``(slope, intercept)``."""
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)
