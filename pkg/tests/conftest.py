from __future__ import annotations

import gc

import pytest

from lattice_voa.fock_voa import voa_model
from lattice_voa.lattice_core import build_named_lattice

# criterion number -> (description, passed)
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


@pytest.fixture(autouse=True, scope="module")
def _release_voa_models():
    """Drop memoised VOA models (and their mode caches) after each module."""
    yield
    voa_model.cache_clear()
    gc.collect()


@pytest.fixture(scope="session")
def e8():
    return build_named_lattice("E8")


@pytest.fixture(scope="session")
def e8e8():
    return build_named_lattice("E8xE8")


@pytest.fixture(scope="session")
def d16plus():
    return build_named_lattice("D16plus")


@pytest.fixture(scope="session")
def d4():
    return build_named_lattice("D4")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        text, ok = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}: {text}")
