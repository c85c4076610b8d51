import math

import numpy as np
import pytest
from hypothesis import settings

from greedycoh import Dictionary, new_dictionary

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def three_atoms() -> Dictionary:
    """{e1, e2, (e1+e2)/sqrt2} in R^2."""
    return new_dictionary(np.array([[1.0, 0.0, 1 / SQRT2], [0.0, 1.0, 1 / SQRT2]]), "three")


@pytest.fixture
def two_atoms() -> Dictionary:
    """{e1, (e1+e2)/sqrt2} in R^2."""
    return new_dictionary(np.array([[1.0, 1 / SQRT2], [0.0, 1 / SQRT2]]), "two")


def brute_mu1(atoms):
    """Cumulative coherence by explicit double loop over columns."""
    k = atoms.shape[1]
    best = 0.0
    for i in range(k):
        s = 0.0
        for j in range(k):
            if j != i:
                s += abs(sum(float(a) * float(b) for a, b in zip(atoms[:, i], atoms[:, j])))
        best = max(best, s)
    return best
