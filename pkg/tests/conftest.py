import numpy as np
import pytest

from paqif.bandcore import BandedMatrix


def random_banded(n, beta, rng, dominant=True, m_matrix=False):
    """Random banded test matrix, diagonally dominant by construction."""
    a = BandedMatrix(n, beta)
    for o in range(-beta, beta + 1):
        if o == 0:
            continue
        vals = rng.uniform(0.2, 1.0, n)
        if not m_matrix:
            vals *= rng.choice([-1.0, 1.0], n)
        else:
            vals = -vals
        a.bands[beta + o] = vals
    a._zero_out_of_range()
    if dominant:
        off = np.zeros(n)
        for o in range(-beta, beta + 1):
            if o != 0:
                off += np.abs(a.bands[beta + o])
        a.bands[beta] = off + rng.uniform(0.5, 2.0, n)
    else:
        a.bands[beta] = rng.uniform(-1.0, 1.0, n)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
