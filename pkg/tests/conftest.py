"""Shared fixtures and the acceptance-criteria reporting hook."""

import numpy as np
import pytest

import aggrsim as ag

# collected by tests/test_acceptance.py; printed after the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(label: str, passed: bool, detail: str):
    ACCEPTANCE_RESULTS.append((label, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}: {detail}")


@pytest.fixture
def small_geometry():
    return ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (32, 32))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def zero_kernel():
    """Interaction switched off via the separable (fast) custom path."""
    return ag.InteractionKernel(
        "custom",
        g_radial=lambda r: np.zeros_like(r),
        g_density=lambda u, m: np.zeros_like(u),
        decay_bound=0.0,
    )
