import pytest

from bprsim import build_grid, compute_next_hops


@pytest.fixture(scope="session")
def grid5():
    return build_grid(5, 5, 2e9, 1e8, 1.0)


@pytest.fixture(scope="session")
def grid3():
    return build_grid(3, 3, 2e9, 1e8, 1.0)


@pytest.fixture(scope="session")
def grid5_table(grid5):
    return compute_next_hops(grid5)


@pytest.fixture(scope="session")
def grid3_table(grid3):
    return compute_next_hops(grid3)
