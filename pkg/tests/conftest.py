import numpy as np
import pytest

from polyspec import geometry, spectral


@pytest.fixture(scope="session")
def square():
    return geometry.make_polytope("box", [1.0, 1.0])


@pytest.fixture(scope="session")
def cube():
    return geometry.make_polytope("box", [1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def tri_iso():
    return geometry.make_polytope("triangle-right-isosceles", [1.0])


@pytest.fixture(scope="session")
def torus2():
    return geometry.Lattice.cubic([1.0, 1.0])


@pytest.fixture(scope="session")
def square_dir_41(square):
    return spectral.enumerate_modes(square, "dirichlet", 41.0)


@pytest.fixture(scope="session")
def square_neu_41(square):
    return spectral.enumerate_modes(square, "neumann", 41.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
