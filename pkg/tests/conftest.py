import numpy as np
import pytest

from ruqlp import _backend
from ruqlp.matcore import svd
from ruqlp.matgen import named_matrix

ACCEPTANCE_RESULTS = {}


@pytest.fixture(params=["compiled", "python"])
def kernels(request, monkeypatch):
    """Run a test once per kernel backend."""
    if request.param == "compiled":
        if _backend.compiled_kernels is None:
            pytest.skip("compiled extension not built")
        monkeypatch.setattr(_backend, "kernels", _backend.compiled_kernels)
    else:
        monkeypatch.setattr(_backend, "kernels", _backend.python_kernels)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def medium_gap():
    a = named_matrix("LowRankMediumGap", n=800, k=16, seed=0)
    return a, svd(a)


@pytest.fixture(scope="session")
def large_gap():
    a = named_matrix("LowRankLargeGap", n=800, k=16, seed=0)
    return a, svd(a)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, title, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
