"""Backend selection for the hot assembly kernels, plus the energy assembler
shared by the quadrature routines and the solver.

The compiled extension is preferred when present; `PQOBSTACLE_PURE=1` in the
environment forces the numpy fallback. Both backends implement the same
contract and differ only in summation rounding. User-supplied densities
always take the generic (Python-loop) path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from . import penalty as _penalty

if os.environ.get("PQOBSTACLE_PURE"):
    _impl = _kernels_py
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


class EnergyAssembler:
    """Precomputed discrete energy for one (grid, integrand, psi, g).

    energy(u) enforces the Dirichlet rows from g before evaluating, and
    energy_grad(u) zeroes the boundary rows of the gradient, so both are
    functions of the free nodal values only.
    """

    def __init__(self, grid, integrand, psi_values, g_values):
        self.grid = grid
        self.integrand = integrand
        self.N = psi_values.shape[1]
        self.psi_values = np.asarray(psi_values, dtype=float)
        self.g_values = np.asarray(g_values, dtype=float)
        self.weights = grid.node_weights()
        self.bmask = grid.boundary_mask()
        self.xc = grid.centroids()
        coeffs = integrand.centroid_coeffs(self.xc)
        if coeffs is None:
            self.c1 = self.c2 = None
        else:
            self.c1, c2 = coeffs
            self.c2 = None if not np.any(c2) else c2
        pr = integrand.params
        self.p, self.q, self.mu = pr.p, pr.q, pr.mu

    @classmethod
    def for_problem(cls, problem) -> "EnergyAssembler":
        cached = getattr(problem, "_assembler", None)
        if cached is None:
            cached = cls(problem.grid, problem.integrand,
                         problem.psi.values, problem.g.values)
            problem._assembler = cached
        return cached

    def clamp(self, u_values) -> np.ndarray:
        out = np.ascontiguousarray(u_values, dtype=float).copy()
        out[self.bmask] = self.g_values[self.bmask]
        return out

    def _bulk_args(self, u):
        uv = u.reshape(self.grid.shape + (self.N,))
        if self.grid.n == 1:
            return (uv, self.grid.h[0])
        return (uv, self.grid.h[0], self.grid.h[1])

    def energy(self, u_values, eps=0.0, kappa=0.0, delta=1e-4) -> float:
        u = self.clamp(u_values)
        args = self._bulk_args(u)
        if self.c1 is not None:
            fn = _impl.energy_1d if self.grid.n == 1 else _impl.energy_2d
            val = fn(*args, self.c1, self.c2, self.mu, self.p, self.q, eps)
        else:
            fn = (_kernels_py.generic_energy_1d if self.grid.n == 1
                  else _kernels_py.generic_energy_2d)
            val = fn(*args, self.xc, self.integrand, eps)
        if kappa:
            pen, _ = _penalty.penalty_value_and_gradient(
                u, self.psi_values, self.weights, delta)
            val += kappa * pen
        return float(val)

    def energy_grad(self, u_values, eps=0.0, kappa=0.0, delta=1e-4):
        """Returns (energy, gradient); gradient shape (num_nodes, N) with
        zeroed boundary rows."""
        u = self.clamp(u_values)
        grad = np.zeros(self.grid.shape + (self.N,))
        args = self._bulk_args(u)
        if self.c1 is not None:
            fn = _impl.energy_grad_1d if self.grid.n == 1 else _impl.energy_grad_2d
            val = fn(*args, self.c1, self.c2, self.mu, self.p, self.q, eps, grad)
        else:
            fn = (_kernels_py.generic_energy_grad_1d if self.grid.n == 1
                  else _kernels_py.generic_energy_grad_2d)
            val = fn(*args, self.xc, self.integrand, eps, grad)
        grad = grad.reshape(self.grid.num_nodes, self.N)
        if kappa:
            pen, pgrad = _penalty.penalty_value_and_gradient(
                u, self.psi_values, self.weights, delta)
            val += kappa * pen
            grad += kappa * pgrad
        grad[self.bmask] = 0.0
        return float(val), grad
