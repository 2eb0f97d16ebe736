"""Experiment runner: configs, dispatch to the solvers, reports and diagnostics."""

from __future__ import annotations

import csv
import json
import math
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .buffon import buffon_generate
from .dg import dg_assemble, dg_cond, dg_eigs, dg_mesh, dg_poisson, dg_sample_grid
from .expansion import evaluate_expansion, evolve_expansion, poisson_spectral, project, weyl_check
from .fd import fd_discretize, fd_eigs, fd_poisson, fd_sample, fd_wave_run
from .graph import MetricGraph, build_graph, g14_graph, pumpkin_graph, read_graph
from .problems import RhsSpec, fitted_error, loglog_slope, parse_rhs, pumpkin_exact, pumpkin_rhs
from .spectral import ModeBasis, compute_basis, load_basis

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "RunReport",
    "load_graph",
    "basis_with_modes",
    "run",
    "load_config",
    "fourier_cutoff",
    "compare_methods",
    "eigen_error_slope",
    "exact_solution",
]

METHODS = ("spectral", "fd", "dg")
PROBLEMS = ("eigs", "poisson", "wave", "heat", "telegrapher")
_REQUIRED = {"spectral": (), "fd": ("dx",), "dg": ("h", "p")}
_SUPPORTED = {
    "spectral": PROBLEMS,
    "fd": ("eigs", "poisson", "wave"),
    "dg": ("eigs", "poisson"),
}
_CALL_RE = re.compile(r"^\s*([a-z0-9]+)\s*\((.*)\)\s*$")


def load_graph(source: str) -> MetricGraph:
    """Graph from a builtin name or a file path.

    Builtins: ``pumpkin``, ``g14``, ``edge`` or ``edge(l)`` (single arc,
    default length pi), ``buffon(needles,diagonal,diameter,seed)``.
    """
    name = source.strip()
    if name == "pumpkin":
        return pumpkin_graph()
    if name == "g14":
        return g14_graph()
    if name == "edge":
        return build_graph(2, [(1, 2, math.pi)])
    m = _CALL_RE.match(name)
    if m and m.group(1) in ("edge", "buffon"):
        args = [a.strip() for a in m.group(2).split(",") if a.strip()]
        if m.group(1) == "edge" and len(args) == 1:
            return build_graph(2, [(1, 2, float(args[0]))])
        if m.group(1) == "buffon" and len(args) == 4:
            return buffon_generate(int(args[0]), float(args[1]), float(args[2]), int(args[3]))
        raise ValueError(f"bad builtin graph {source!r}")
    if not os.path.exists(name):
        raise ValueError(f"unknown graph {source!r} (not a builtin and no such file)")
    return read_graph(name)


def basis_with_modes(g: MetricGraph, count: int, *, dk: float | None = None) -> ModeBasis:
    """A basis holding at least ``count`` modes (constant included)."""
    k_max = max(1.0, 1.25 * (count + g.vertex_count + 2) * math.pi / g.total_length)
    while True:
        basis = compute_basis(g, k_max, dk=dk)
        if len(basis) >= count:
            return basis
        k_max *= 1.5


@dataclass
class ExperimentConfig:
    """One experiment. ``params`` holds method parameters and problem knobs.

    Method parameters: ``dx`` (fd), ``h`` and ``p`` (dg), ``kmax`` or
    ``modes`` (spectral). Problem knobs: ``count`` (eigs), ``dt``, ``T``,
    ``energy_every`` (wave), ``alpha``, ``beta``, ``gamma``, ``t``
    (evolution), ``vertex`` (fd vertex scheme). ``checks`` maps a metric
    name to ``{"min": a, "max": b}`` bounds.
    """

    graph: str
    method: str
    problem: str
    params: dict = field(default_factory=dict)
    rhs: str | None = None
    initial: str | None = None
    output_dir: str | None = None
    checks: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.problem not in _SUPPORTED[self.method]:
            raise ValueError(f"{self.method} does not support problem {self.problem!r}")
        missing = [k for k in _REQUIRED[self.method] if k not in self.params]
        if missing:
            raise ValueError(f"{self.method} needs parameters {missing}")
        if self.method == "spectral" and not ({"kmax", "modes"} & set(self.params)):
            raise ValueError("spectral needs 'kmax' or 'modes'")
        if self.problem == "poisson" and self.rhs is None:
            raise ValueError("poisson needs 'rhs'")
        if self.problem in ("wave", "heat", "telegrapher") and self.initial is None:
            raise ValueError(f"{self.problem} needs 'initial'")
        for text in (self.rhs, self.initial):
            if text is not None:
                parse_rhs(text)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    known = {"graph", "method", "problem", "params", "rhs", "initial", "output_dir", "checks"}
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown config keys {sorted(extra)}")
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ValueError(f"bad config: {exc}") from None
    cfg.validate()
    return cfg


@dataclass
class RunReport:
    config: dict
    metrics: dict
    artifacts: list
    wall_time: float
    failed_checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failed_checks

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def exact_solution(g: MetricGraph, spec: RhsSpec, basis: ModeBasis | None = None):
    """Exact Poisson solution ``u(arc, x)`` when one is known, else None.

    Known cases: the pumpkin benchmark right-hand side, and ``mode(q)``
    for ``q >= 1`` whose solution is ``-V^q / k_q^2``.
    """
    if g == pumpkin_graph() and spec == pumpkin_rhs():
        return pumpkin_exact
    if spec.family == "mode" and basis is not None and spec.q > 0:
        mode = basis[spec.q]
        return lambda arc, x: -mode.value(arc, x) / mode.k ** 2
    return None


def _plot_grid(g: MetricGraph, step: float):
    for arc in g.arcs:
        n = max(2, int(math.ceil(arc.length / step)))
        yield arc.id, np.linspace(0.0, arc.length, n + 1)


def _check(metrics: dict, checks: dict) -> list:
    failed = []
    for name, bounds in checks.items():
        if name not in metrics:
            failed.append(f"{name}: metric not produced")
            continue
        val = metrics[name]
        if "min" in bounds and not val >= bounds["min"]:
            failed.append(f"{name} = {val!r} < {bounds['min']!r}")
        if "max" in bounds and not val <= bounds["max"]:
            failed.append(f"{name} = {val!r} > {bounds['max']!r}")
    return failed


def _evolution_coeffs(problem: str, params: dict):
    if problem == "wave":
        return 1.0, 0.0, 0.0
    if problem == "heat":
        return 0.0, 1.0, float(params.get("gamma", 0.0))
    return float(params.get("alpha", 1.0)), float(params.get("beta", 1.0)), float(params.get("gamma", 0.0))


def run(config: ExperimentConfig) -> RunReport:
    """Dispatch one experiment, write its outputs and collect metrics."""
    config.validate()
    t0 = time.perf_counter()
    g = load_graph(config.graph)
    P = config.params
    out = Path(config.output_dir) if config.output_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    metrics: dict = {}
    artifacts: list = []
    rhs = parse_rhs(config.rhs) if config.rhs else None
    init = parse_rhs(config.initial) if config.initial else None
    needs_basis = config.method == "spectral" or any(s is not None and s.family == "mode" for s in (rhs, init))

    basis = None
    if needs_basis:
        if "basis" in P:
            basis = load_basis(P["basis"])
        elif "kmax" in P:
            basis = compute_basis(g, float(P["kmax"]), dk=P.get("dk"))
        else:
            want = int(P.get("modes", 0))
            for s in (rhs, init):
                if s is not None and s.family == "mode":
                    want = max(want, s.q + 1)
            basis = basis_with_modes(g, want, dk=P.get("dk"))
        if "modes" in P and config.method == "spectral":
            basis = basis.truncated(int(P["modes"]))
        metrics["mode_count"] = len(basis)

    try:
        if config.problem == "eigs":
            _run_eigs(config, g, basis, metrics, artifacts, out)
        elif config.problem == "poisson":
            _run_poisson(config, g, rhs, basis, metrics, artifacts, out)
        else:
            _run_evolution(config, g, init, basis, metrics, artifacts, out)
    except Exception as exc:
        raise RuntimeError(f"{config.method} {config.problem} on {config.graph}: {exc}") from exc

    report = RunReport(
        config=asdict(config),
        metrics=metrics,
        artifacts=artifacts,
        wall_time=time.perf_counter() - t0,
        failed_checks=_check(metrics, config.checks),
    )
    if out is not None:
        path = out / "report.json"
        report.artifacts.append(str(path))
        path.write_text(report.to_json(), encoding="utf-8")
    return report


def _run_eigs(config, g, basis, metrics, artifacts, out):
    P = config.params
    if config.method == "spectral":
        ks = basis.ks
        rep = weyl_check(basis)
        metrics.update(
            count=len(ks),
            weyl_violations=len(rep.violations),
            max_residual=basis.max_residual(),
            k_first_nonzero=float(ks[1]) if len(ks) > 1 else 0.0,
        )
    else:
        count = int(P.get("count", 30))
        if config.method == "fd":
            lam = fd_eigs(fd_discretize(g, float(P["dx"])), count)
        else:
            lam = dg_eigs(dg_assemble(dg_mesh(g, float(P["h"]), int(P["p"]))), count)
        ks = np.sqrt(np.maximum(lam, 0.0))
        metrics.update(count=len(ks), smallest_eigenvalue=float(lam[0]))
    if out is not None:
        path = out / "eigs.csv"
        _write_csv(path, ["q", "k"], enumerate(ks))
        artifacts.append(str(path))


def _run_poisson(config, g, rhs, basis, metrics, artifacts, out):
    P = config.params
    f = rhs.function(g, basis)
    exact = exact_solution(g, rhs, basis)
    samples = []  # (arc, x, value)
    if config.method == "spectral":
        U = poisson_spectral(project(f, basis))
        for arc, xs in _plot_grid(g, float(P.get("plot_dx", 0.01))):
            samples.append((arc, xs, evaluate_expansion(U, arc, xs)))
    elif config.method == "fd":
        sys_ = fd_discretize(g, float(P["dx"]))
        u, res = fd_poisson(sys_, fd_sample(sys_, f), vertex=P.get("vertex", "ghost"),
                            remove_mean=bool(P.get("remove_mean", False)))
        metrics["residual"] = res
        for arc in g.arcs:
            samples.append((arc.id, sys_.positions(arc.id), sys_.arc_values(u, arc.id)))
    else:
        op = dg_assemble(dg_mesh(g, float(P["h"]), int(P["p"])))
        sol, res = dg_poisson(op, f)
        metrics["residual"] = res
        if P.get("cond", False):
            metrics["cond"] = dg_cond(op)
        for arc in g.arcs:
            xs = dg_sample_grid(op.mesh, arc.id)
            samples.append((arc.id, xs, sol(arc.id, xs)))
    if exact is not None:
        num = np.concatenate([v for _, _, v in samples])
        ref = np.concatenate([exact(a, x) for a, x, _ in samples])
        metrics["error_linf"] = fitted_error(num, ref)
    if out is not None:
        path = out / "solution.csv"
        _write_csv(path, ["arc", "x", "value"], ((a, x, v) for a, xs, vs in samples for x, v in zip(xs, vs)))
        artifacts.append(str(path))


def _run_evolution(config, g, init, basis, metrics, artifacts, out):
    P = config.params
    f0 = init.function(g, basis)
    if config.method == "spectral":
        alpha, beta, gamma = _evolution_coeffs(config.problem, P)
        t = float(P.get("t", P.get("T", 1.0)))
        U, dU = evolve_expansion(project(f0, basis), None, alpha, beta, gamma, t)
        metrics["coefficient_norm"] = float(np.linalg.norm(U.coefficients))
        if config.problem == "wave":
            ks = basis.ks
            metrics["energy"] = float(0.5 * np.sum(dU.coefficients ** 2 + (ks * U.coefficients) ** 2))
        if out is not None:
            path = out / "solution.csv"
            rows = ((a, x, v) for a, xs in _plot_grid(g, float(P.get("plot_dx", 0.01)))
                    for x, v in zip(xs, evaluate_expansion(U, a, xs)))
            _write_csv(path, ["arc", "x", "value"], rows)
            artifacts.append(str(path))
        return
    sys_ = fd_discretize(g, float(P["dx"]))
    u0 = fd_sample(sys_, f0)
    trace = fd_wave_run(sys_, u0, None, float(P["dt"]), float(P["T"]), energy_every=int(P.get("energy_every", 1)))
    E = trace.energy
    metrics.update(
        steps=trace.steps,
        energy_mean=float(np.mean(E)),
        energy_peak_to_peak=float(np.ptp(E)),
    )
    if out is not None:
        path = out / "energy.csv"
        _write_csv(path, ["t", "E"], zip(trace.times, E))
        artifacts.append(str(path))


def fourier_cutoff(
    g: MetricGraph,
    spec: RhsSpec,
    accuracy: float = 1e-6,
    *,
    samples: int = 4096,
) -> float:
    """Wavenumber beyond which the arc function's spectrum stays below ``accuracy * max``.

    The function is sampled uniformly on its arc and transformed with a real
    DFT; bin ``n`` corresponds to ``k = 2 pi n / l``. The cutoff is located
    between the last bin above the threshold and the next one by linear
    interpolation of ``log |F|``.
    """
    if spec.family not in ("gaussian", "dgaussian"):
        raise ValueError("Fourier cutoff needs an initial condition supported on one arc")
    spec.validate(g)
    l = float(g.lengths[spec.arc - 1])
    x = np.arange(samples) * (l / samples)
    F = np.abs(np.fft.rfft(spec.function(g)(spec.arc, x)))
    k = 2.0 * math.pi * np.arange(len(F)) / l
    thr = accuracy * F.max()
    above = np.flatnonzero(F >= thr)
    last = int(above[-1])
    if last + 1 >= len(F):
        return float(k[-1])
    a, b = math.log(F[last]), math.log(F[last + 1])
    lt = math.log(thr)
    frac = (a - lt) / (a - b) if a != b else 0.0
    return float(k[last] + frac * (k[last + 1] - k[last]))


def eigen_error_slope(errors, q_lo: int = 3, q_hi: int = 30) -> tuple[float, float]:
    """Log-log slope of eigenvalue errors over ``q = q_lo..q_hi``.

    ``errors[i]`` belongs to basis mode ``i`` (constant first); the fit uses
    ``q = i + 1`` so the constant mode is ``q = 1`` and the first two modes
    are left out of the default range.
    """
    errors = np.asarray(errors, dtype=float)
    q = np.arange(q_lo, q_hi + 1)
    return loglog_slope(q, errors[q - 1])


def compare_methods(graph: str | MetricGraph, problem: str, params: dict | None = None) -> RunReport:
    """Spectral reference against FD and DG on one problem.

    ``eigs``: absolute eigenvalue errors of the first ``count`` modes and
    their fitted log-log slopes. ``poisson``: max-norm errors of all three
    methods against the exact solution when known (else against the
    spectral solution).
    """
    P = {"count": 31, "dx": 0.005, "h": 0.02, "p": 1, "modes": 200} | dict(params or {})
    t0 = time.perf_counter()
    g = load_graph(graph) if isinstance(graph, str) else graph
    metrics: dict = {}
    if problem == "eigs":
        count = int(P["count"])
        ref = basis_with_modes(g, count).ks[:count] ** 2
        lam_fd = fd_eigs(fd_discretize(g, float(P["dx"])), count)
        lam_dg = dg_eigs(dg_assemble(dg_mesh(g, float(P["h"]), int(P["p"]))), count)
        for name, lam in (("fd", lam_fd), ("dg", lam_dg)):
            err = np.abs(lam - ref)
            metrics[f"{name}_max_error"] = float(err.max())
            if count >= 30:
                slope, icpt = eigen_error_slope(err, 3, min(30, count))
                metrics[f"{name}_slope"] = slope
                metrics[f"{name}_intercept"] = icpt
    elif problem == "poisson":
        spec = parse_rhs(P["rhs"]) if "rhs" in P else pumpkin_rhs()
        basis = basis_with_modes(g, int(P["modes"]))
        f = spec.function(g, basis)
        U = poisson_spectral(project(f, basis))
        exact = exact_solution(g, spec, basis)
        if exact is None:
            exact = lambda arc, x: evaluate_expansion(U, arc, x)
        else:
            grid = list(_plot_grid(g, 0.01))
            metrics["spectral_error"] = fitted_error(
                np.concatenate([evaluate_expansion(U, a, x) for a, x in grid]),
                np.concatenate([exact(a, x) for a, x in grid]),
            )
        sys_ = fd_discretize(g, float(P["dx"]))
        u, _ = fd_poisson(sys_, fd_sample(sys_, f), remove_mean=True)
        metrics["fd_error"] = fitted_error(u, fd_sample(sys_, exact))
        op = dg_assemble(dg_mesh(g, float(P["h"]), int(P["p"])))
        sol, _ = dg_poisson(op, f)
        xs = [(a.id, dg_sample_grid(op.mesh, a.id)) for a in g.arcs]
        metrics["dg_error"] = fitted_error(
            np.concatenate([sol(a, x) for a, x in xs]), np.concatenate([exact(a, x) for a, x in xs])
        )
    else:
        raise ValueError("compare supports 'eigs' and 'poisson'")
    cfg = {"graph": graph if isinstance(graph, str) else repr(graph), "problem": problem, "params": P}
    return RunReport(cfg, metrics, [], time.perf_counter() - t0)
