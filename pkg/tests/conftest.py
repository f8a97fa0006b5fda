import pytest

from pfl.spectral import RadialGrid


@pytest.fixture(scope="session")
def small_grid():
    """Coarse log grid for fast structural tests."""
    return RadialGrid(400, 1e-4, 60.0)


@pytest.fixture(scope="session")
def default_grid():
    return RadialGrid()
