import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def ks_critical(alpha: float, n: int) -> float:
    """Asymptotic Kolmogorov-Smirnov critical value at significance alpha."""
    return float(np.sqrt(-np.log(alpha / 2.0) / 2.0) / np.sqrt(n))
