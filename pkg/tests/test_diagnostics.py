import numpy as np
import pytest

import pqobstacle as pq
from pqobstacle import diagnostics as dg
from pqobstacle.solver import SolveConfig

from conftest import membrane_problem, zero


# -- V-function ----------------------------------------------------------------

def test_v_function_identity_at_t2():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.standard_normal((2, 3))
        assert np.array_equal(dg.v_function(z, rng.random(), 2.0), z)


def test_v_function_examples():
    z = np.array([[1.2, -1.6]])  # |z| = 2
    assert np.allclose(dg.v_function(z, 0.0, 4.0), 2.0 * z, rtol=1e-14)
    assert np.array_equal(dg.v_function(np.zeros((1, 2)), 1.0, 4.0),
                          np.zeros((1, 2)))
    assert np.array_equal(dg.v_function(np.zeros((1, 2)), 0.0, 4.0),
                          np.zeros((1, 2)))
    with pytest.raises(ValueError):
        dg.v_function(z, 0.0, 1.0)


def test_v_equivalence_exact_cases():
    # t = 2 makes V the identity: R = 1 exactly
    rep = dg.v_equivalence_check(0.7, 2.0, 2000, rng_seed=1)
    assert abs(rep.ratio_min - 1.0) <= 1e-12
    assert abs(rep.ratio_max - 1.0) <= 1e-12
    # z2 = 0, mu = 0, t = 4: R = 1 by direct evaluation
    z1 = np.array([[0.0, 3.0]])
    v1 = dg.v_function(z1, 0.0, 4.0)
    R = np.sum(v1 * v1) / ((np.sum(z1 * z1)) ** 1.0 * np.sum(z1 * z1))
    assert np.isclose(R, 1.0, rtol=1e-14)


def test_v_equivalence_spread_bounded():
    for t in (3.0, 4.0, 6.0):
        rep = dg.v_equivalence_check(0.5, t, 10000, rng_seed=42)
        assert rep.spread <= 10.0


# -- Nikolskii seminorm --------------------------------------------------------

def test_seminorm_constant_is_zero():
    g = pq.Grid([(0, 1), (0, 1)], (17, 17))
    f = pq.sample(g, lambda x: np.full(len(x), 2.5))
    assert dg.nikolskii_seminorm(f, 0.5, 2.0) == 0.0


def test_seminorm_linear_field_calibration():
    g = pq.Grid([(0, 1)], (257,))
    f = pq.sample(g, lambda x: x[:, 0])
    val = dg.nikolskii_seminorm(f, 1.0, 2.0)
    assert 0.9 <= val <= 1.0


def test_seminorm_translation_invariance_and_homogeneity():
    g = pq.Grid([(0, 1), (0, 1)], (17, 17))
    rng = np.random.default_rng(9)
    f = pq.Field(g, rng.standard_normal(g.num_nodes))
    base = dg.nikolskii_seminorm(f, 0.5, 2.0)
    shifted = pq.Field(g, f.values + 3.21)
    assert np.isclose(dg.nikolskii_seminorm(shifted, 0.5, 2.0), base, rtol=1e-12)
    scaled = pq.Field(g, 2.5 * f.values)
    assert np.isclose(dg.nikolskii_seminorm(scaled, 0.5, 2.0), 2.5 * base,
                      rtol=1e-12)


def test_seminorm_quarter_root_slope():
    g = pq.Grid([(0, 1)], (2049,))
    f = pq.sample(g, lambda x: np.maximum(x[:, 0] - 0.5, 0.0) ** 0.25)
    table = dg.nikolskii_offset_table(f, 0.75, 2.0)
    hs = np.log([r[1] for r in table])
    ls = np.log([r[2] for r in table])
    slope = np.polyfit(hs, ls, 1)[0]
    assert 0.65 <= slope <= 0.85


def test_seminorm_gradient_data():
    g = pq.Grid([(0, 1), (0, 1)], (33, 33))
    f = pq.sample(g, lambda x: np.sin(np.pi * x[:, 0]) * x[:, 1])
    tg = pq.gradient(f)
    val = dg.nikolskii_seminorm(tg, 0.45, 2.0)
    assert np.isfinite(val) and val > 0
    # piecewise-constant shifts of a constant gradient vanish
    aff = pq.gradient(pq.sample(g, lambda x: x[:, 0] - 2 * x[:, 1]))
    assert dg.nikolskii_seminorm(aff, 0.45, 2.0) == 0.0


def test_seminorm_domain_errors():
    g = pq.Grid([(0, 1)], (9,))
    f = pq.sample(g, lambda x: x[:, 0])
    with pytest.raises(ValueError):
        dg.nikolskii_seminorm(f, 0.0, 2.0)
    with pytest.raises(ValueError):
        dg.nikolskii_seminorm(f, 0.5, 2.0, offsets=[(20,)])  # all skipped


# -- cutoff functional ----------------------------------------------------------

def test_cutoff_constant_profile_closed_form():
    B, rho, sigma = 3.0, 1.0, 1.5
    for t in (2.0, 3.0):
        rep = dg.cutoff_functional(np.full(50, B), rho, sigma, t, 0.5)
        exact = B * (1.0 + (sigma - rho) ** (1.0 - t))
        assert np.isclose(rep.J_optimal, exact, rtol=1e-12)
        assert rep.J_optimal <= rep.J_bound


def test_cutoff_profile_shape():
    rng = np.random.default_rng(3)
    b = 1.0 + rng.random(40)
    rep = dg.cutoff_functional(b, 1.0, 1.5, 2.0, 0.3)
    assert np.isclose(rep.profile[0], 1.0, atol=1e-14)
    assert np.isclose(rep.profile[-1], 0.0, atol=1e-14)
    assert np.all(np.diff(rep.profile) <= 1e-15)


def test_cutoff_bound_and_brute_force():
    rng = np.random.default_rng(17)
    for trial in range(5):
        b = 0.5 + 2.0 * rng.random(32)
        for t in (2.0, 3.0):
            for delta in (0.3, 0.7):
                rep = dg.cutoff_functional(b, 1.0, 1.5, t, delta)
                scale = max(abs(rep.J_bound), 1.0)
                assert rep.J_optimal <= rep.J_bound + 1e-6 * scale
        bf = dg.brute_force_cutoff_min(b, 1.0, 1.5, 2.0, trials=200,
                                       rng_seed=trial)
        rep = dg.cutoff_functional(b, 1.0, 1.5, 2.0, 0.3)
        assert rep.J_optimal <= bf + 1e-8


def test_cutoff_validation():
    b = np.ones(16)
    with pytest.raises(ValueError):
        dg.cutoff_functional(-b, 1.0, 1.5, 2.0, 0.5)
    with pytest.raises(ValueError):
        dg.cutoff_functional(b, 1.5, 1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        dg.cutoff_functional(b, 1.0, 2.5, 2.0, 0.5)  # sigma - rho >= 1
    with pytest.raises(ValueError):
        dg.cutoff_functional(b, 1.0, 1.5, 1.0, 0.5)  # t <= 1
    with pytest.raises(ValueError):
        dg.cutoff_functional(b, 1.0, 1.5, 2.0, 1.0)  # delta not in (0,1)


# -- mollification probe ---------------------------------------------------------

def test_mollifier_unit_mass_and_symmetry():
    g = pq.Grid([(0, 1), (0, 1)], (33, 33))
    one = pq.sample(g, lambda x: np.ones(len(x)))
    sm = dg.mollify_field(one, 4 * g.h[0])
    assert np.allclose(sm.values, 1.0, atol=1e-13)  # unit mass, everywhere
    # symmetric kernel: mollifying an odd field about the center stays odd
    f = pq.sample(g, lambda x: x[:, 0] - 0.5)
    sm2 = dg.mollify_field(f, 3 * g.h[0]).grid_view()[:, :, 0]
    assert np.allclose(sm2, -sm2[::-1, :], atol=1e-13)


def test_lavrentiev_smooth_field_gap_vanishes():
    # triangular kernel of radius r damps the sine's energy by O(r^2), so the
    # final (smallest-radius) gap sits well below 1% on this grid
    g = pq.Grid([(0, 1), (0, 1)], (65, 65))
    gb = pq.sample(g, lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]))
    psi = pq.sample(g, lambda x: np.full(len(x), -10.0))
    prob = pq.ObstacleProblem(g, pq.p_power(2), psi, gb)
    h = g.h[0]
    rep = dg.lavrentiev_probe(prob, gb, eta_width=0.25,
                              mollifier_radii=[6 * h, 4 * h, 2 * h])
    assert rep.feasible
    assert abs(rep.gap_estimate) <= 0.01 * rep.base_energy
    # energies approach the base from one mollification level to the next
    gaps = [abs(e - rep.base_energy) for e in rep.energies]
    assert gaps[-1] <= gaps[0]


def test_lavrentiev_eta_one_variant():
    g = pq.Grid([(0, 1)], (257,))
    gb = pq.sample(g, lambda x: np.sin(np.pi * x[:, 0]))
    psi = pq.sample(g, lambda x: np.full(len(x), -100.0))
    prob = pq.ObstacleProblem(g, pq.p_power(2), psi, gb)
    h = g.h[0]
    rep = dg.lavrentiev_probe(prob, gb, eta_width=None,
                              mollifier_radii=[8 * h, 4 * h, 2 * h])
    gaps = [abs(e - rep.base_energy) for e in rep.energies]
    assert gaps[-1] <= gaps[0]
    assert gaps[-1] <= 0.01 * rep.base_energy


def test_lavrentiev_rejects_infeasible():
    prob = membrane_problem(17)
    u = prob.g.copy()  # zero field sits below the positive cap
    with pytest.raises(ValueError):
        dg.lavrentiev_probe(prob, u, eta_width=0.25, mollifier_radii=[0.1])


def test_lavrentiev_feasibility_transfers():
    prob = membrane_problem(33)
    res = pq.solve_ladder(prob, SolveConfig(grad_tol=1e-9))
    h = prob.grid.h[0]
    rep = dg.lavrentiev_probe(prob, res.u, eta_width=0.2,
                              mollifier_radii=[4 * h, 2 * h])
    assert rep.feasible


# -- gap check -------------------------------------------------------------------

def test_gap_check_values():
    rec = dg.gap_check(pq.GrowthParams(p=2, q=2.5), n=2, autonomous=True)
    assert rec.q_max_autonomous == 3.0  # min(4, 3)
    assert rec.satisfied
    rec = dg.gap_check(pq.GrowthParams(p=2, q=2.5, alpha=0.5), n=2,
                       autonomous=False)
    assert rec.q_max_nonautonomous == 2.5
    assert not rec.satisfied  # strict inequality required
    rec = dg.gap_check(pq.GrowthParams(p=2, q=2.4, alpha=0.5), n=2,
                       autonomous=False)
    assert rec.satisfied


def test_gap_check_q_equals_p_always_passes():
    for n in (1, 2):
        for p in (2.0, 3.0, 4.5):
            for alpha in (0.1, 0.5, 1.0):
                rec = dg.gap_check(pq.GrowthParams(p=p, q=p, alpha=alpha),
                                   n=n, autonomous=False)
                assert rec.satisfied
                rec = dg.gap_check(pq.GrowthParams(p=p, q=p), n=n,
                                   autonomous=True)
                assert rec.satisfied


def test_gap_check_deterministic():
    a = dg.gap_check(pq.GrowthParams(p=2.3, q=2.9, alpha=0.7), 2, False)
    b = dg.gap_check(pq.GrowthParams(p=2.3, q=2.9, alpha=0.7), 2, False)
    assert a == b


# -- aggregate report -------------------------------------------------------------

def test_compute_report(membrane17=None):
    prob = membrane_problem(17)
    res = pq.solve_ladder(prob, SolveConfig(grad_tol=1e-8))
    rep = dg.compute_report(prob, res.u, seminorm_pairs=((0.45, 2.0),))
    assert rep.w1q_norm > 0
    assert rep.v_l2 > 0
    assert (0.45, 2.0) in rep.nikolskii
    assert rep.violation < 1e-3
    assert rep.gap_condition.satisfied
    # w1q matches the ladder trace value (same code path)
    assert np.isclose(rep.w1q_norm, res.ladder_trace[-1].w1q_norm, rtol=1e-12)


def test_lavrentiev_gap_small_for_gap_satisfying_solve():
    # q = 2.5 < min(4, 3): mollified competitors approach the solution's
    # energy, final gap below 1% of it
    g = pq.Grid([(0, 1), (0, 1)], (33, 33))
    F = pq.double_phase(2.0, 2.5, 1.0)
    psi = pq.sample(g, lambda x: 0.25 - (x[:, 0] - 0.5) ** 2
                    - (x[:, 1] - 0.5) ** 2)
    gb = pq.sample(g, lambda x: np.zeros(len(x)))
    prob = pq.ObstacleProblem(g, F, psi, gb)
    res = pq.solve_ladder(prob, SolveConfig(grad_tol=1e-8))
    h = g.h[0]
    rep = dg.lavrentiev_probe(prob, res.u, eta_width=0.2,
                              mollifier_radii=[6 * h, 4 * h, 2 * h])
    assert rep.feasible
    assert abs(rep.gap_estimate) <= 0.01 * rep.base_energy
