"""Shared fixtures for the conjlocus test suite.

The heavy acceptance checks all share a single session-scoped Verifier so
that the expensive artifacts (direction sweep, umbilic refinement, ridge
network, coordinate lines) are computed at most once per test run.
"""

import numpy as np
import pytest

import conjlocus as cl


# Semi-axes and base point for the quadraxial case study used throughout.
AXES = cl.PAPER_SEMI_AXES
BASE = cl.PAPER_BASE_POINT


@pytest.fixture(scope="session")
def chart():
    return cl.EllipsoidChart(AXES)


@pytest.fixture(scope="session")
def frame(chart):
    return cl.TangentSphereFrame.build(chart, BASE)


@pytest.fixture(scope="session")
def t_max():
    return cl.RunConfig().resolved_t_max()


@pytest.fixture(scope="session")
def verifier():
    # A 32x64 sweep resolves all four umbilic directions while keeping the
    # total acceptance runtime reasonable.
    return cl.Verifier(cl.RunConfig(n_theta=32, n_phi=64))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260826)
