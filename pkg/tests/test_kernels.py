"""Backend equivalence: the compiled kernels, the numpy fallback, and the
generic per-triangle path must agree on energies and gradients."""

import numpy as np
import pytest

import pqobstacle as pq
from pqobstacle import _kernels_py
from pqobstacle import kernels


def _random_setup_2d(seed, N=2, m1=8, m2=7):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((m1, m2, N))
    c1 = 0.5 + rng.random((2, m1 - 1, m2 - 1))
    c2 = rng.random((2, m1 - 1, m2 - 1))
    return u, c1, c2


def _random_setup_1d(seed, N=2, m=13):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((m, N))
    c1 = 0.5 + rng.random(m - 1)
    c2 = rng.random(m - 1)
    return u, c1, c2


try:
    from pqobstacle import _kernels as _compiled
except ImportError:
    _compiled = None

needs_compiled = pytest.mark.skipif(_compiled is None,
                                    reason="compiled kernels unavailable")


@needs_compiled
@pytest.mark.parametrize("mu,p,q,eps", [
    (0.0, 2.0, 2.0, 0.0),
    (1.0, 2.0, 4.0, 0.0),
    (0.0, 3.0, 3.5, 1e-2),
    (0.5, 2.0, 2.5, 1e-1),
])
def test_backends_agree_2d(mu, p, q, eps):
    u, c1, c2 = _random_setup_2d(1)
    h1, h2 = 0.13, 0.21
    e_py = _kernels_py.energy_2d(u, h1, h2, c1, c2, mu, p, q, eps)
    e_cy = _compiled.energy_2d(u, h1, h2, c1, c2, mu, p, q, eps)
    assert np.isclose(e_py, e_cy, rtol=1e-12)
    g_py = np.zeros_like(u)
    g_cy = np.zeros_like(u)
    e2_py = _kernels_py.energy_grad_2d(u, h1, h2, c1, c2, mu, p, q, eps, g_py)
    e2_cy = _compiled.energy_grad_2d(u, h1, h2, c1, c2, mu, p, q, eps, g_cy)
    assert np.isclose(e2_py, e2_cy, rtol=1e-12)
    assert np.allclose(g_py, g_cy, rtol=1e-11, atol=1e-13)


@needs_compiled
def test_backends_agree_1d():
    u, c1, c2 = _random_setup_1d(2)
    h = 0.05
    for c2_arg in (c2, None):
        e_py = _kernels_py.energy_1d(u, h, c1, c2_arg, 0.3, 2.0, 3.0, 1e-2)
        e_cy = _compiled.energy_1d(u, h, c1, c2_arg, 0.3, 2.0, 3.0, 1e-2)
        assert np.isclose(e_py, e_cy, rtol=1e-12)
        g_py = np.zeros_like(u)
        g_cy = np.zeros_like(u)
        _kernels_py.energy_grad_1d(u, h, c1, c2_arg, 0.3, 2.0, 3.0, 1e-2, g_py)
        _compiled.energy_grad_1d(u, h, c1, c2_arg, 0.3, 2.0, 3.0, 1e-2, g_cy)
        assert np.allclose(g_py, g_cy, rtol=1e-11, atol=1e-13)


def test_generic_path_matches_power_path():
    # a user density that duplicates the double-phase built-in must produce
    # the same assembled energies and gradients
    params = pq.GrowthParams(p=2, q=3, mu=0.5, alpha=1.0)

    def dens(x, z):
        s = params.mu**2 + float(np.sum(z * z))
        return s ** (params.p / 2) + (0.5 + x[0]) * s ** (params.q / 2)

    def dgrad(x, z):
        s = params.mu**2 + float(np.sum(z * z))
        fac = params.p * s ** (params.p / 2 - 1)
        fac += params.q * (0.5 + x[0]) * s ** (params.q / 2 - 1)
        return fac * z

    user = pq.user_density(dens, dgrad, params)
    builtin = pq.double_phase(2, 3, lambda x: 0.5 + x[..., 0], mu=0.5, alpha=1.0)

    g = pq.Grid([(0, 1), (0, 1)], (6, 6))
    rng = np.random.default_rng(4)
    psi = pq.Field(g, np.full((g.num_nodes, 1), -10.0))
    gb = pq.Field(g, rng.standard_normal((g.num_nodes, 1)))
    u = rng.standard_normal((g.num_nodes, 1))

    asm_user = kernels.EnergyAssembler(g, user, psi.values, gb.values)
    asm_builtin = kernels.EnergyAssembler(g, builtin, psi.values, gb.values)
    for eps, kappa in ((0.0, 0.0), (1e-2, 2.0)):
        e_u, g_u = asm_user.energy_grad(u, eps, kappa, 0.1)
        e_b, g_b = asm_builtin.energy_grad(u, eps, kappa, 0.1)
        assert np.isclose(e_u, e_b, rtol=1e-12)
        assert np.allclose(g_u, g_b, rtol=1e-10, atol=1e-13)
        assert np.isclose(asm_user.energy(u, eps, kappa, 0.1), e_u, rtol=1e-12)


def test_assembler_clamps_and_zeroes_boundary():
    g = pq.Grid([(0, 1), (0, 1)], (5, 5))
    psi = np.full((g.num_nodes, 1), -1.0)
    gb = np.zeros((g.num_nodes, 1))
    asm = kernels.EnergyAssembler(g, pq.p_power(2), psi, gb)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((g.num_nodes, 1))
    _, grad = asm.energy_grad(u, 0.0, 1.0, 0.1)
    assert np.all(grad[g.boundary_mask()] == 0.0)
    # boundary rows of u are ignored
    u2 = u.copy()
    u2[g.boundary_mask()] += 5.0
    assert asm.energy(u2, 0.0, 1.0, 0.1) == asm.energy(u, 0.0, 1.0, 0.1)


def test_backend_name():
    assert kernels.backend_name() in ("compiled", "numpy")
