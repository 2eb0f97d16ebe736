"""Linear PDEs on metric graphs with continuity and Kirchhoff vertex conditions."""

from .buffon import DegenerateGraphError, buffon_generate, needle_graph
from .dg import dg_assemble, dg_cond, dg_eigs, dg_evaluate, dg_mesh, dg_poisson
from .expansion import (
    CompatibilityError,
    SpectralExpansion,
    evaluate_expansion,
    evolve_expansion,
    evolve_mode,
    poisson_spectral,
    project,
    weyl_check,
)
from .fd import fd_discretize, fd_eigs, fd_energy, fd_laplacian, fd_poisson, fd_sample, fd_wave_run, fd_wave_step
from .graph import (
    Arc,
    GraphError,
    GraphFormatError,
    MetricGraph,
    build_graph,
    g14_graph,
    parse_graph,
    pumpkin_graph,
    read_graph,
    serialize_graph,
    write_graph,
)
from .harness import ExperimentConfig, RunReport, compare_methods, fourier_cutoff, load_graph, run
from .modes import HarmonicMode, constant_mode, gram_matrix, mode_pair_inner
from .problems import RhsSpec, parse_rhs, pumpkin_exact, pumpkin_rhs
from .spectral import (
    ModeBasis,
    assemble_M,
    compute_basis,
    extract_modes,
    load_basis,
    rcond_estimate,
    refine_root,
    save_basis,
    scan_brackets,
)

__version__ = "0.1.0"

__all__ = [
    "Arc", "GraphError", "GraphFormatError", "MetricGraph", "build_graph", "g14_graph",
    "parse_graph", "pumpkin_graph", "read_graph", "serialize_graph", "write_graph",
    "DegenerateGraphError", "buffon_generate", "needle_graph",
    "HarmonicMode", "constant_mode", "gram_matrix", "mode_pair_inner",
    "ModeBasis", "assemble_M", "compute_basis", "extract_modes", "load_basis", "rcond_estimate",
    "refine_root", "save_basis", "scan_brackets",
    "CompatibilityError", "SpectralExpansion", "evaluate_expansion", "evolve_expansion", "evolve_mode",
    "poisson_spectral", "project", "weyl_check",
    "fd_discretize", "fd_eigs", "fd_energy", "fd_laplacian", "fd_poisson", "fd_sample", "fd_wave_run",
    "fd_wave_step",
    "dg_assemble", "dg_cond", "dg_eigs", "dg_evaluate", "dg_mesh", "dg_poisson",
    "ExperimentConfig", "RunReport", "compare_methods", "fourier_cutoff", "load_graph", "run",
    "RhsSpec", "parse_rhs", "pumpkin_exact", "pumpkin_rhs",
]
