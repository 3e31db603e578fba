import numpy as np
import pytest

import pqobstacle as pq
from pqobstacle import grid as gr
from pqobstacle.solver import SolveConfig
from pqobstacle.penalty import PenaltyParams, h_delta

from conftest import membrane_problem, zero


def test_grid_basics():
    g = pq.Grid([(0, 1), (0, 2)], (5, 9))
    assert g.n == 2
    assert g.h == (0.25, 0.25)
    assert g.num_nodes == 45
    assert g.num_triangles == 2 * 4 * 8
    assert np.isclose(g.volume, 2.0)
    w = g.node_weights()
    assert np.isclose(w.sum(), g.volume)
    mask = g.boundary_mask()
    # faces of the box, nothing else
    pts = g.nodes()
    on_face = (np.isclose(pts[:, 0], 0) | np.isclose(pts[:, 0], 1)
               | np.isclose(pts[:, 1], 0) | np.isclose(pts[:, 1], 2))
    assert np.array_equal(mask, on_face)


def test_grid_validation():
    with pytest.raises(ValueError):
        pq.Grid([(0, 1)], (1,))
    with pytest.raises(ValueError):
        pq.Grid([(1, 0)], (5,))
    with pytest.raises(ValueError):
        pq.Grid([(0, 1), (0, 1), (0, 1)], (3, 3, 3))


def test_field_validation():
    g = pq.Grid([(0, 1)], (5,))
    with pytest.raises(ValueError):
        pq.Field(g, np.zeros(4))
    with pytest.raises(ValueError):
        pq.Field(g, np.full(5, np.nan))


@pytest.mark.parametrize("expr,expected", [
    (lambda x: x[:, 0], (1.0, 0.0)),
    (lambda x: np.full(len(x), 4.2), (0.0, 0.0)),
    (lambda x: x[:, 0] + 2 * x[:, 1], (1.0, 2.0)),
])
def test_gradient_linear_exactness_2d(expr, expected):
    g = pq.Grid([(0, 1), (0, 1)], (7, 5))
    tg = pq.gradient(pq.sample(g, expr))
    assert tg.values.shape == (2, 6, 4, 1, 2)
    assert np.allclose(tg.values[..., 0, 0], expected[0], atol=1e-14)
    assert np.allclose(tg.values[..., 0, 1], expected[1], atol=1e-14)


def test_gradient_1d():
    g = pq.Grid([(-1, 1)], (9,))
    tg = pq.gradient(pq.sample(g, lambda x: 3 * x[:, 0] - 1))
    assert tg.values.shape == (8, 1, 1)
    assert np.allclose(tg.values, 3.0, atol=1e-14)


def test_integrate_energy_zero_field_penalty_only():
    prob = membrane_problem(9)
    psi = pq.sample(prob.grid, lambda x: np.full(len(x), -1.0))
    prob = pq.ObstacleProblem(prob.grid, prob.integrand, psi, prob.g)
    u = prob.g.copy()
    kappa, delta = 3.0, 0.25
    cfg = SolveConfig(penalty=PenaltyParams(kappa=kappa, delta=delta))
    val = pq.integrate_energy(prob, u, cfg)
    expected = prob.grid.volume * kappa * h_delta(h_delta(-1.0, delta), delta)
    assert np.isclose(val, expected, rtol=1e-13)


def test_integrate_energy_linear_dirichlet():
    # u(x,y) = x has |grad u|^2 = 1 exactly
    g = pq.Grid([(0, 1), (0, 1)], (9, 9))
    gb = pq.sample(g, lambda x: x[:, 0])
    psi = pq.sample(g, lambda x: np.full(len(x), -10.0))
    prob = pq.ObstacleProblem(g, pq.p_power(2), psi, gb)
    cfg = SolveConfig(penalty=PenaltyParams(kappa=0.0))
    assert np.isclose(pq.integrate_energy(prob, gb, cfg), 1.0, rtol=1e-13)


def test_integrate_energy_quartic():
    # |grad(x+y)|^2 = 2, so |z|^4 contributes 4 on every triangle; the
    # independent check sums centroid quadrature by hand.
    g = pq.Grid([(0, 1), (0, 1)], (6, 6))
    gb = pq.sample(g, lambda x: x[:, 0] + x[:, 1])
    psi = pq.sample(g, lambda x: np.full(len(x), -10.0))
    prob = pq.ObstacleProblem(g, pq.p_power(4), psi, gb)
    cfg = SolveConfig(penalty=PenaltyParams(kappa=0.0))
    val = pq.integrate_energy(prob, gb, cfg)
    tg = pq.gradient(gb).values
    byhand = g.triangle_area * np.sum(np.sum(tg * tg, axis=(-2, -1)) ** 2)
    assert np.isclose(val, 4.0, rtol=1e-13)
    assert np.isclose(val, byhand, rtol=1e-13)


def test_integrate_energy_enforces_dirichlet_rows():
    prob = membrane_problem(9)
    cfg = SolveConfig(penalty=PenaltyParams(kappa=0.0))
    u = prob.g.copy()
    base = pq.integrate_energy(prob, u, cfg)
    u.values[prob.grid.boundary_mask()] += 7.0  # must be ignored
    assert pq.integrate_energy(prob, u, cfg) == base


def test_quadrature_convergence_rate():
    # smooth field, Dirichlet energy: O(h^2) toward the analytic value
    exact = np.pi**2 / 2  # integral of |grad sin(pi x) sin(pi y)|^2 over unit square
    errs = []
    for m in (9, 17, 33):
        g = pq.Grid([(0, 1), (0, 1)], (m, m))
        gb = pq.sample(g, lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]))
        psi = pq.sample(g, lambda x: np.full(len(x), -10.0))
        prob = pq.ObstacleProblem(g, pq.p_power(2), psi, gb)
        cfg = SolveConfig(penalty=PenaltyParams(kappa=0.0))
        errs.append(abs(pq.integrate_energy(prob, gb, cfg) - exact))
    rates = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(rates) >= 1.8


def test_lp_norm_examples():
    g = pq.Grid([(0, 1), (0, 1)], (9, 9))
    one = pq.sample(g, lambda x: np.ones(len(x)))
    for t in (1.0, 2.0, 3.5):
        assert np.isclose(pq.lp_norm(one, t), 1.0, rtol=1e-13)
    tg = pq.gradient(pq.sample(g, lambda x: x[:, 0]))
    assert np.isclose(pq.lp_norm(tg, 2.0), 1.0, rtol=1e-13)
    with pytest.raises(ValueError):
        pq.lp_norm(one, 0.5)


def test_prolong_restrict_roundtrip():
    coarse = pq.Grid([(0, 1), (0, 1)], (5, 5))
    fine = pq.Grid([(0, 1), (0, 1)], (9, 9))
    rng = np.random.default_rng(0)
    f = pq.Field(coarse, rng.random(coarse.num_nodes))
    back = pq.restrict(pq.prolong(f, fine), coarse)
    assert np.allclose(back.values, f.values, atol=1e-14)


def test_resample_affine_exact():
    src = pq.Grid([(0, 1), (0, 1)], (6, 7))
    dst = pq.Grid([(0, 1), (0, 1)], (11, 9))
    f = pq.sample(src, lambda x: 2 * x[:, 0] - 3 * x[:, 1] + 1)
    out = gr.resample(f, dst)
    expect = pq.sample(dst, lambda x: 2 * x[:, 0] - 3 * x[:, 1] + 1)
    assert np.allclose(out.values, expect.values, atol=1e-13)


def test_field_io_roundtrip(tmp_path):
    g = pq.Grid([(0, 2), (1, 3)], (5, 6))
    rng = np.random.default_rng(3)
    f = pq.Field(g, rng.standard_normal((g.num_nodes, 2)))
    path = tmp_path / "field.pq"
    pq.write_field(f, path)
    back = pq.read_field(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)  # bitwise via repr round-trip


def test_field_csv_export(tmp_path):
    g = pq.Grid([(0, 1)], (4,))
    f = pq.sample(g, lambda x: x[:, 0])
    path = tmp_path / "field.csv"
    gr.write_field_csv(f, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,v1"
    assert len(lines) == 5


def test_nodal_gradient_average_quadratic_interior():
    g = pq.Grid([(0, 1), (0, 1)], (9, 9))
    f = pq.sample(g, lambda x: x[:, 0] ** 2)
    ng = gr.nodal_gradient(f).reshape(9, 9, 1, 2)
    xs = g.axis_coords[0]
    # interior nodes recover the exact derivative of a quadratic
    assert np.allclose(ng[1:-1, 1:-1, 0, 0], 2 * xs[1:-1, None], atol=1e-12)
