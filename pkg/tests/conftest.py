import numpy as np
import pytest

from pnflow.grid import Grid
from pnflow.layer import compute_layer
from pnflow.potential import cosine_potential


@pytest.fixture(scope="session")
def cosine():
    return cosine_potential()


@pytest.fixture(scope="session")
def layer_cache(cosine):
    """Layers keyed by (s, L, n); computed once per session."""
    cache = {}

    def get(s, L=200.0, n=2**13, method="newton", tol=1e-10):
        key = (s, L, n, method)
        if key not in cache:
            cache[key] = compute_layer(s, cosine, Grid(L, n), method=method,
                                       tol=tol)
        return cache[key]

    return get


def explicit_layer(x):
    """The closed-form increasing layer for s = 1/2 and the cosine well."""
    return 0.5 + np.arctan(4.0 * np.pi * np.asarray(x)) / np.pi
