from functools import lru_cache

import numpy as np
import pytest

from memwalk.classical import CrwConfig, run_memory_crw
from memwalk.oscillator import OscillatorParams, run_oscillator_walk


@lru_cache(maxsize=None)
def oscillator_run(coupling: float):
    return run_oscillator_walk(OscillatorParams(coupling=coupling))


@lru_cache(maxsize=None)
def crw_run(u: float, reps: int = 10_000, T: int = 60, seed: int = 0):
    return run_memory_crw(CrwConfig(u=u, T=T, reps=reps, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n, scale=1.0):
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (b + b.conj().T) / 2


def random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


# -- acceptance report -------------------------------------------------------

_criteria: dict[str, tuple[str, str]] = {}
_pending: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, text): acceptance criterion identifier")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    item_info = _pending.get(report.nodeid)
    if item_info is None:
        return
    _criteria[report.nodeid] = (item_info, "PASS" if report.passed else "FAIL")



def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            label, text = m.args
            suffix = f" [{item.callspec.id}]" if hasattr(item, "callspec") else ""
            _pending[item.nodeid] = f"{label}{suffix}: {text}"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for line, status in sorted(_criteria.values(), key=lambda v: _sort_key(v[0])):
        terminalreporter.write_line(f"{status}  {line}")


def _sort_key(line):
    head = line.split(":", 1)[0].split()[0]
    digits = "".join(ch for ch in head if ch.isdigit())
    return (int(digits) if digits else 0, line)
