"""Shared fixtures: deterministic RNG and the small grids most tests reuse."""

import numpy as np
import pytest

from maflow import DomainSpec, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture(scope="session")
def disc65():
    return build_grid(DomainSpec.radial(1, 1.0, 65))


@pytest.fixture(scope="session")
def disc33():
    return build_grid(DomainSpec.radial(1, 1.0, 33))


@pytest.fixture(scope="session")
def ball65():
    return build_grid(DomainSpec.radial(2, 1.0, 65))


@pytest.fixture(scope="session")
def square17():
    return build_grid(DomainSpec.box(1, [(-1.0, 1.0), (-1.0, 1.0)], 0.125))


@pytest.fixture(scope="session")
def cube9():
    return build_grid(DomainSpec.box(2, [(-1.0, 1.0)] * 4, 0.25))
