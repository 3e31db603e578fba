import numpy as np
import pytest

import pqobstacle as pq


def zero(pts):
    return np.zeros(len(pts))


def parabolic_cap_2d(pts):
    return 0.25 - (pts[:, 0] - 0.5) ** 2 - (pts[:, 1] - 0.5) ** 2


def parabolic_cap_1d(pts):
    return 0.5 - 2.0 * pts[:, 0] ** 2


def membrane_problem(m=17, integrand=None):
    """2D Laplace-type obstacle problem on the unit square."""
    g = pq.Grid([(0, 1), (0, 1)], (m, m))
    F = integrand if integrand is not None else pq.p_power(2)
    psi = pq.sample(g, parabolic_cap_2d)
    gb = pq.sample(g, zero)
    return pq.ObstacleProblem(g, F, psi, gb)


def rod_problem(m=257):
    """1D classical obstacle problem on (-1, 1)."""
    g = pq.Grid([(-1, 1)], (m,))
    psi = pq.sample(g, parabolic_cap_1d)
    gb = pq.sample(g, zero)
    return pq.ObstacleProblem(g, pq.p_power(2), psi, gb)


@pytest.fixture
def membrane17():
    return membrane_problem(17)


@pytest.fixture
def rod257():
    return rod_problem(257)
