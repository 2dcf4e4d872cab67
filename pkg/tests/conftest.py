"""Shared fixtures and the acceptance summary hook.

Session-scoped fixtures cache reliability profiles and small reference
codes so individual test modules do not pay for repeated density
evolution runs.
"""

import numpy as np
import pytest

from nestedpsc import (
    KIND_STATIC,
    build_randomized_psc,
    density_evolution_minsum,
    stack_nested,
)

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    _ACCEPTANCE_RESULTS[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for name in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{name}: {labels.get(outcome, outcome.upper())}")


@pytest.fixture(scope="session")
def prof7_02():
    return density_evolution_minsum(0.2, 7)


@pytest.fixture(scope="session")
def prof8_02():
    return density_evolution_minsum(0.2, 8)


@pytest.fixture(scope="session")
def code128(prof7_02):
    # n=128, k=16 leaves 48 statically frozen rows, enough for nesting tests.
    return build_randomized_psc(128, 16, prof7_02, seed=3)


@pytest.fixture(scope="session")
def pair128(code128):
    static = sorted(r.pivot for r in code128.matrix.rows if r.kind == KIND_STATIC)
    return stack_nested(static[:40], code128)


@pytest.fixture(scope="session")
def code256(prof8_02):
    return build_randomized_psc(256, 64, prof8_02, seed=5)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=[1234, 0]))
