import numpy as np
import pytest

from nbmle import Dataset, Params, link_mean
from nbmle.mixture import sample_counts


def make_instance(rng, n_max=50, p_max=4, theta_range=(0.1, 5.0)):
    """One random regression instance: counts drawn from the model itself."""
    n = int(rng.integers(8, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))])
    beta = rng.uniform(-1.0, 1.0, size=p)
    theta = float(rng.uniform(*theta_range))
    lam = link_mean(X, beta).lam
    y = sample_counts(lam, theta, rng)
    if not np.any(y > 0):
        y[int(rng.integers(0, n))] = 1
    return Dataset(y=y, X=X), Params(beta, theta)


def simulate_dataset(seed, n, beta, theta):
    """Design with standard-normal regressors and NB2 responses."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, len(beta) - 1))])
    lam = link_mean(X, beta).lam
    y = sample_counts(lam, theta, rng)
    return Dataset(y=y, X=X)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
