import numpy as np
import pytest

from ionlab.radial import make_log_grid


@pytest.fixture(scope="session")
def default_grid():
    return make_log_grid(1e-4, 1e2, 2000)


@pytest.fixture(scope="session")
def coarse_grid():
    return make_log_grid(1e-4, 1e2, 500)


@pytest.fixture(scope="session")
def tf_neutral_z1():
    from ionlab.tf import TFParams, solve_tf

    return solve_tf(TFParams(z=1.0, n_electrons=1.0))


@pytest.fixture(scope="session")
def tf_tail_z1():
    from ionlab.tf import neutral_tail_solution

    return neutral_tail_solution(1.0)


@pytest.fixture(scope="session")
def hartree_tc():
    from ionlab.hartree import compute_tc

    return compute_tc(tol=0.01)


@pytest.fixture(scope="session")
def tfw_sweep_rows():
    from ionlab.tfw import excess_charge_sweep

    return excess_charge_sweep([1.0, 4.0, 16.0, 64.0])


@pytest.fixture(scope="session")
def tfw_z1():
    from ionlab.tfw import TFWParams, solve_tfw

    return solve_tfw(TFWParams(z=1.0))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
