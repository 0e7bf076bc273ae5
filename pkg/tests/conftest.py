"""Shared fixtures and tiny-graph profiles for the unit tests."""

from __future__ import annotations

import pytest

from trisum.graph import Graph
from trisum.profiles import ProfileConstants


@pytest.fixture
def k2() -> Graph:
    return Graph.build(2, [(0, 1)])


@pytest.fixture
def p3() -> Graph:
    return Graph.build(3, [(0, 1), (1, 2)])


@pytest.fixture
def k3() -> Graph:
    return Graph.build(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def c4() -> Graph:
    return Graph.build(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


def loose_profile(**overrides) -> ProfileConstants:
    """A profile whose tolerances are wide enough for toy graphs."""
    params = dict(
        p_u=0.5, eps_u=0.4, p_fw=0.5, eps_fw=0.4,
        m_levels=2, eps_fu=0.45, frac_nu=1.0,
        eps_loc=0.4, eps_len=0.5, frac_i=0.95,
        modulus_m=10, min_delta_ratio=0.0,
    )
    params.update(overrides)
    return ProfileConstants(**params)


def small_run_profile(**overrides) -> ProfileConstants:
    """Calibrated for random graphs with degrees around 60-120."""
    params = dict(
        p_u=0.3, eps_u=0.15, p_fw=0.5, eps_fw=0.3,
        m_levels=4, eps_fu=0.45, frac_nu=1.0,
        eps_loc=0.26, eps_len=0.5, frac_i=0.95,
        modulus_m=10, min_delta_ratio=0.0,
    )
    params.update(overrides)
    return ProfileConstants(**params)
