import numpy as np
import pytest

from crosscap.germs import MODEL_S1_MINUS, MODEL_S1_PLUS, MapGerm


@pytest.fixture
def s1_plus():
    return MapGerm.parse(MODEL_S1_PLUS)


@pytest.fixture
def s1_minus():
    return MapGerm.parse(MODEL_S1_MINUS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_jet(rng, nvars, order, scale=1.0, density=0.5):
    """Random jet with a degree mask applied."""
    from crosscap.jets import Jet

    shape = (order + 1,) * nvars
    c = rng.uniform(-scale, scale, size=shape)
    c *= rng.random(size=shape) < density
    return Jet(nvars, order, c)


def compose_poly_1var(table, alphas, order):
    """Independent oracle for branch solves: coefficients of
    F(u(t), t) with u(t) = sum alphas[i] t^(i+1), via numpy polynom
    arithmetic only."""
    from numpy.polynomial import polynomial as P

    u = np.zeros(order + 1)
    u[1 : 1 + len(alphas)] = alphas
    total = np.zeros(2 * order + 2)
    upow = np.array([1.0])
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            if table[i, j] == 0.0:
                continue
            term = P.polymul(upow, np.eye(2 * order + 2)[j])[: 2 * order + 2]
            total[: len(term)] += table[i, j] * term
        upow = P.polymul(upow, u)
    return total
