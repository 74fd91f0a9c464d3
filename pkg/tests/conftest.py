import pytest

from qmcpress import DataSet, sobol_net, verified_net


@pytest.fixture(scope="session")
def verified_nets():
    """Small t-verified Sobol nets, cached once per test session."""
    cache = {}

    def get(s, m):
        if (s, m) not in cache:
            cache[(s, m)] = verified_net(sobol_net(s, m))
        return cache[(s, m)]

    return get


def random_dataset(rng, n, s, y_scale=1.0):
    return DataSet(X=rng.random((n, s)), Y=y_scale * rng.standard_normal(n))
