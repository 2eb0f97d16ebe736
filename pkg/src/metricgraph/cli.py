"""Command-line interface: ``metricgraph <group> <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import __version__
from .buffon import buffon_generate
from .dg import dg_assemble, dg_cond, dg_eigs, dg_mesh, dg_poisson, dg_sample_grid
from .expansion import evaluate_expansion, evolve_expansion, poisson_spectral, project, weyl_check
from .fd import fd_discretize, fd_eigs, fd_poisson, fd_sample, fd_wave_run
from .graph import GraphError, serialize_graph, write_graph
from .harness import (
    basis_with_modes,
    compare_methods,
    exact_solution,
    fourier_cutoff,
    load_config,
    load_graph,
    run,
)
from .problems import fitted_error, parse_rhs
from .spectral import compute_basis, load_basis, save_basis


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _emit_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if close:
            fh.close()


def _basis_for(args, g):
    if getattr(args, "basis", None):
        basis = load_basis(args.basis)
        if basis.graph != g:
            raise SystemExit("error: basis was computed for a different graph")
        return basis
    if getattr(args, "kmax", None) is None:
        raise SystemExit("error: give --basis or --kmax")
    return compute_basis(g, args.kmax, dk=getattr(args, "dk", None))


def _rhs_and_basis(g, text):
    """Parsed family plus a basis when the family refers to a mode."""
    spec = parse_rhs(text)
    basis = basis_with_modes(g, spec.q + 1) if spec.family == "mode" else None
    return spec, basis


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


# graph ------------------------------------------------------------------

def cmd_graph_validate(args) -> int:
    try:
        g = load_graph(args.graph)
    except (GraphError, ValueError, OSError) as exc:
        return _err(str(exc))
    print(f"ok: {g.vertex_count} vertices, {g.arc_count} arcs, total length {g.total_length:.17g}")
    if args.show:
        sys.stdout.write(serialize_graph(g))
    return 0


def cmd_graph_buffon(args) -> int:
    g = buffon_generate(args.needles, args.diagonal, args.diameter, args.seed, prune=args.prune)
    if args.output:
        write_graph(g, args.output)
    else:
        sys.stdout.write(serialize_graph(g))
    degs = np.bincount(g.degrees)
    print(
        f"{g.vertex_count} vertices, {g.arc_count} arcs, L = {g.total_length:.6g}, "
        f"degree counts {dict((int(d), int(c)) for d, c in enumerate(degs) if c)}",
        file=sys.stderr,
    )
    return 0


# spectral ---------------------------------------------------------------

def cmd_spectral_eigs(args) -> int:
    g = load_graph(args.graph)
    basis = compute_basis(g, args.kmax, dk=args.dk)
    if args.output:
        save_basis(basis, args.output)
    rep = weyl_check(basis)
    _emit_rows(args.csv, ["q", "k", "lambda"], ((q, m.k, -m.k * m.k) for q, m in enumerate(basis)))
    print(
        f"{len(basis)} modes up to k = {args.kmax}; Weyl violations: {len(rep.violations)}; "
        f"max vertex residual {basis.max_residual():.2e}",
        file=sys.stderr,
    )
    return 0 if rep.ok else 1


def cmd_spectral_poisson(args) -> int:
    g = load_graph(args.graph)
    basis = _basis_for(args, g)
    if args.modes:
        basis = basis.truncated(args.modes)
    spec = parse_rhs(args.rhs)
    U = poisson_spectral(project(spec.function(g, basis), basis))
    rows = []
    for arc in g.arcs:
        xs = np.linspace(0.0, arc.length, args.points)
        rows += [(arc.id, x, v) for x, v in zip(xs, evaluate_expansion(U, arc.id, xs))]
    _emit_rows(args.output, ["arc", "x", "value"], rows)
    exact = exact_solution(g, spec, basis)
    if exact is not None:
        err = fitted_error([r[2] for r in rows], [float(exact(a, x)) for a, x, _ in rows])
        print(f"L-infinity error after constant fit: {err:.3e}", file=sys.stderr)
    return 0


def cmd_spectral_evolve(args) -> int:
    g = load_graph(args.graph)
    basis = _basis_for(args, g)
    U0 = project(parse_rhs(args.init).function(g, basis), basis)
    U, _ = evolve_expansion(U0, None, args.alpha, args.beta, args.gamma, args.t)
    rows = []
    for arc in g.arcs:
        xs = np.linspace(0.0, arc.length, args.points)
        rows += [(arc.id, x, v) for x, v in zip(xs, evaluate_expansion(U, arc.id, xs))]
    _emit_rows(args.output, ["arc", "x", "value"], rows)
    return 0


# fd ---------------------------------------------------------------------

def cmd_fd_poisson(args) -> int:
    g = load_graph(args.graph)
    spec, basis = _rhs_and_basis(g, args.rhs)
    sys_ = fd_discretize(g, args.dx)
    u, res = fd_poisson(sys_, fd_sample(sys_, spec.function(g, basis)), vertex=args.vertex,
                        remove_mean=args.remove_mean)
    rows = [(a.id, x, v) for a in g.arcs for x, v in zip(sys_.positions(a.id), sys_.arc_values(u, a.id))]
    _emit_rows(args.output, ["arc", "x", "value"], rows)
    exact = exact_solution(g, spec, basis)
    if exact is not None:
        err = fitted_error(u, fd_sample(sys_, exact))
        print(f"L-infinity error after constant fit: {err:.3e} (residual {res:.1e})", file=sys.stderr)
    return 0


def cmd_fd_eigs(args) -> int:
    g = load_graph(args.graph)
    lam = fd_eigs(fd_discretize(g, args.dx), args.count)
    _emit_rows(args.output, ["q", "lambda", "k"], ((q, l, np.sqrt(max(l, 0.0))) for q, l in enumerate(lam)))
    return 0


def cmd_fd_wave(args) -> int:
    g = load_graph(args.graph)
    spec, basis = _rhs_and_basis(g, args.init)
    sys_ = fd_discretize(g, args.dx)
    u0 = fd_sample(sys_, spec.function(g, basis))
    trace = fd_wave_run(sys_, u0, None, args.dt, args.T, energy_every=args.energy_every)
    _emit_rows(args.output, ["t", "E"], zip(trace.times, trace.energy))
    print(
        f"{trace.steps} steps; mean energy {np.mean(trace.energy):.15g}, "
        f"peak-to-peak {np.ptp(trace.energy):.3e}",
        file=sys.stderr,
    )
    return 0


# dg ---------------------------------------------------------------------

def cmd_dg_poisson(args) -> int:
    g = load_graph(args.graph)
    spec, basis = _rhs_and_basis(g, args.rhs)
    op = dg_assemble(dg_mesh(g, args.h, args.p))
    sol, res = dg_poisson(op, spec.function(g, basis))
    rows = []
    for a in g.arcs:
        xs = dg_sample_grid(op.mesh, a.id)
        rows += [(a.id, x, v) for x, v in zip(xs, sol(a.id, xs))]
    _emit_rows(args.output, ["arc", "x", "value"], rows)
    exact = exact_solution(g, spec, basis)
    if exact is not None:
        err = fitted_error([r[2] for r in rows], [float(exact(a, x)) for a, x, _ in rows])
        print(f"L-infinity error after constant fit: {err:.3e} (residual {res:.1e})", file=sys.stderr)
    return 0


def cmd_dg_eigs(args) -> int:
    g = load_graph(args.graph)
    lam = dg_eigs(dg_assemble(dg_mesh(g, args.h, args.p)), args.count)
    _emit_rows(args.output, ["q", "lambda", "k"], ((q, l, np.sqrt(max(l, 0.0))) for q, l in enumerate(lam)))
    return 0


def cmd_dg_convergence(args) -> int:
    g = load_graph(args.graph)
    spec, basis = _rhs_and_basis(g, args.rhs)
    exact = exact_solution(g, spec, basis)
    if exact is None:
        return _err("no exact solution known for this graph and right-hand side")
    f = spec.function(g, basis)
    rows = []
    for p in args.p:
        for h in args.h:
            op = dg_assemble(dg_mesh(g, h, p))
            sol, _ = dg_poisson(op, f)
            num, ref = [], []
            for a in g.arcs:
                xs = dg_sample_grid(op.mesh, a.id)
                num.append(sol(a.id, xs))
                ref.append(exact(a.id, xs))
            err = fitted_error(np.concatenate(num), np.concatenate(ref))
            rows.append((p, h, op.mesh.size, err, dg_cond(op)))
    _emit_rows(args.output, ["p", "h", "n", "error_linf", "cond"], rows)
    return 0


# harness ----------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    report = run(cfg)
    text = report.to_json()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text)
    for msg in report.failed_checks:
        print(f"check failed: {msg}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_compare(args) -> int:
    params = {k: v for k, v in (("count", args.count), ("dx", args.dx), ("h", args.h), ("p", args.p),
                                ("modes", args.modes), ("rhs", args.rhs)) if v is not None}
    report = compare_methods(args.graph, args.problem, params)
    print(report.to_json())
    return 0


def cmd_fourier(args) -> int:
    g = load_graph(args.graph)
    k = fourier_cutoff(g, parse_rhs(args.ic), args.accuracy, samples=args.samples)
    print(json.dumps({"graph": args.graph, "ic": args.ic, "accuracy": args.accuracy, "k_cutoff": k}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metricgraph", description="PDE solvers on metric graphs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver diagnostics")
    groups = ap.add_subparsers(dest="group", required=True)

    graph_help = "builtin (pumpkin, g14, edge, edge(l), buffon(n,diag,D,seed)) or graph file"

    gp = groups.add_parser("graph", help="graph utilities").add_subparsers(dest="command", required=True)
    p = gp.add_parser("validate", help="parse and validate a graph")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--show", action="store_true", help="print the graph in file format")
    p.set_defaults(func=cmd_graph_validate)
    p = gp.add_parser("buffon", help="generate a Buffon's-needle graph")
    p.add_argument("--needles", type=int, required=True)
    p.add_argument("--diagonal", type=float, required=True)
    p.add_argument("--diameter", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prune", action="store_true", help="drop dangling needle tips")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_graph_buffon)

    sp = groups.add_parser("spectral", help="spectral method").add_subparsers(dest="command", required=True)
    p = sp.add_parser("eigs", help="resonant frequencies and modes up to kmax")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--kmax", type=float, required=True)
    p.add_argument("--dk", type=float)
    p.add_argument("-o", "--output", help="basis JSON file")
    p.add_argument("--csv", default="-", help="q,k,lambda table (default stdout)")
    p.set_defaults(func=cmd_spectral_eigs)
    p = sp.add_parser("poisson", help="spectral Poisson solve")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--basis")
    p.add_argument("--kmax", type=float)
    p.add_argument("--dk", type=float)
    p.add_argument("--modes", type=int, help="truncate to the first N modes")
    p.add_argument("--rhs", required=True)
    p.add_argument("--points", type=int, default=201, help="output samples per arc")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_spectral_poisson)
    p = sp.add_parser("evolve", help="closed-form telegrapher/wave/heat evolution")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--basis")
    p.add_argument("--kmax", type=float)
    p.add_argument("--dk", type=float)
    p.add_argument("--init", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_spectral_evolve)

    fp = groups.add_parser("fd", help="finite differences").add_subparsers(dest="command", required=True)
    p = fp.add_parser("poisson")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--dx", type=float, required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--vertex", choices=("ghost", "one-sided"), default="ghost")
    p.add_argument("--remove-mean", action="store_true", help="drop the discrete-mean part of the rhs")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fd_poisson)
    p = fp.add_parser("eigs")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--dx", type=float, required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fd_eigs)
    p = fp.add_parser("wave")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--dx", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--energy-every", type=int, default=1)
    p.add_argument("-o", "--output", help="t,E energy trace")
    p.set_defaults(func=cmd_fd_wave)

    dp = groups.add_parser("dg", help="discontinuous Galerkin").add_subparsers(dest="command", required=True)
    p = dp.add_parser("poisson")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dg_poisson)
    p = dp.add_parser("eigs")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dg_eigs)
    p = dp.add_parser("convergence", help="(p, h, error, cond) table")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--rhs", required=True)
    p.add_argument("--p", type=int, nargs="+", default=[1, 2, 3, 4])
    p.add_argument("--h", type=float, nargs="+", default=[0.1, 0.01])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dg_convergence)

    p = groups.add_parser("run", help="run a TOML experiment config")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_run)

    p = groups.add_parser("compare", help="spectral vs FD vs DG")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--problem", choices=("eigs", "poisson"), required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--dx", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--modes", type=int)
    p.add_argument("--rhs")
    p.set_defaults(func=cmd_compare)

    p = groups.add_parser("fourier", help="mode-count estimate from a 1D Fourier transform")
    p.add_argument("graph", help=graph_help)
    p.add_argument("--ic", required=True, help="gaussian(x0,s,arc) or dgaussian(x0,s,arc)")
    p.add_argument("--accuracy", type=float, default=1e-6)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_fourier)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GraphError, ValueError, OSError, RuntimeError) as exc:
        return _err(str(exc))


if __name__ == "__main__":
    sys.exit(main())
