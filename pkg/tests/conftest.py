import numpy as np
import pytest

from metricgraph import compute_basis, pumpkin_graph


@pytest.fixture(scope="session")
def pumpkin():
    return pumpkin_graph()


@pytest.fixture(scope="session")
def pumpkin_basis(pumpkin):
    # 86 modes, k <= 50
    return compute_basis(pumpkin, 50.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA = {
    1: "pumpkin spectrum",
    2: "high-order resonances",
    3: "Weyl bounds",
    4: "spectral Poisson",
    5: "FD order",
    6: "eigenvalue-error slopes",
    7: "DG convergence table",
    8: "wave energy",
    9: "property suite",
    10: "telegrapher evolution",
}
_results: dict = {}


@pytest.fixture
def record():
    """``record(n, ok, detail)`` stores one acceptance verdict."""

    def _record(n, ok, detail):
        prev = _results.get(n)
        ok = bool(ok) and (prev is None or prev[0])
        detail = detail if prev is None else f"{prev[1]}; {detail}"
        _results[n] = (ok, detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n in _results:
            ok, detail = _results[n]
            terminalreporter.write_line(f"criterion {n:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        else:
            terminalreporter.write_line(f"criterion {n:2d} {name}: NOT RUN")
