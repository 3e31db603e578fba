"""Exact L1 penalty, its softplus smoothing, and the computable exactness
threshold kappa0.

The smoothing family is H_delta(x) = delta * ln(1 + exp(x/delta)): smooth,
convex, non-decreasing, with derivative the logistic function (so bounded by
1) and the uniform error bound |H_delta(x) - max(0, x)| <= delta * ln 2. The
penalty applied to a vector field is the componentwise sum

    sum_i H_delta(H_delta(psi_i - u_i)),

integrated with mass-lumped nodal weights.

kappa0 is the discrete sup-norm of the row-wise divergence of
dF/dz(x, D psi) (plus the eps-regularization part when requested): above it,
the L1-penalized minimizer satisfies the obstacle constraint. One-sided
differences at the boundary underestimate the continuum value on coarse
grids, hence the user-visible safety multiplier applied when kappa is chosen
automatically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PenaltyParams",
    "h_delta",
    "h_delta_prime",
    "smoothed_penalty",
    "smoothed_penalty_gradient",
    "penalty_value_and_gradient",
    "exact_penalty",
    "violation",
    "compute_kappa0",
]


@dataclass
class PenaltyParams:
    """Penalty weight kappa (None means auto: safety * kappa0), smoothing
    delta in (0, 1], threshold cache, and the auto-selection multiplier."""

    kappa: float | None = None
    delta: float = 1e-4
    safety: float = 2.0
    kappa0: float | None = None

    def __post_init__(self):
        if self.kappa is not None and self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.safety < 1:
            raise ValueError("safety must be >= 1")


def h_delta(x, delta):
    """Softplus smoothing of max(0, x); overflow-safe for any x/delta."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    return delta * np.logaddexp(0.0, np.asarray(x, dtype=float) / delta)


def h_delta_prime(x, delta):
    """Derivative of h_delta: the logistic function of x/delta, in (0, 1)."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    t = np.asarray(x, dtype=float) / delta
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _composite(x, delta):
    return h_delta(h_delta(x, delta), delta)


def _composite_prime(x, delta):
    return h_delta_prime(h_delta(x, delta), delta) * h_delta_prime(x, delta)


def smoothed_penalty(u, psi, delta) -> float:
    """sum_nodes w * sum_i H_delta(H_delta(psi_i - u_i)). The kappa weight is
    applied by the caller."""
    _check_pair(u, psi)
    w = u.grid.node_weights()
    vals = _composite(psi.values - u.values, delta)
    return float(np.sum(w * np.sum(vals, axis=1)))


def smoothed_penalty_gradient(u, psi, delta) -> np.ndarray:
    """Gradient of smoothed_penalty with respect to the nodal values of u,
    shape (num_nodes, N)."""
    _check_pair(u, psi)
    w = u.grid.node_weights()
    return -w[:, None] * _composite_prime(psi.values - u.values, delta)


def penalty_value_and_gradient(u_values, psi_values, weights, delta):
    """Array-level variant used by the energy assembler."""
    d = psi_values - u_values
    val = float(np.sum(weights * np.sum(_composite(d, delta), axis=1)))
    grad = -weights[:, None] * _composite_prime(d, delta)
    return val, grad


def exact_penalty(u, psi) -> float:
    """Unsmoothed reference: integral of sum_i (psi_i - u_i)_+."""
    _check_pair(u, psi)
    w = u.grid.node_weights()
    pos = np.maximum(psi.values - u.values, 0.0)
    return float(np.sum(w * np.sum(pos, axis=1)))


def violation(u, psi) -> float:
    """Max nodal constraint violation max(psi - u)_+ over all components."""
    _check_pair(u, psi)
    return float(max(np.max(psi.values - u.values), 0.0))


def _check_pair(u, psi):
    if u.grid != psi.grid or u.values.shape != psi.values.shape:
        raise ValueError("u and psi must live on the same grid with same N")


def compute_kappa0(problem, epsilon: float = 0.0) -> float:
    """Discrete exactness threshold: max over nodes and rows of
    |div dF/dz(x, D psi)|, with the eps-regularization term eps*q*|z|^(q-2)*z
    added when epsilon > 0.

    D psi is averaged from the per-triangle gradients to the nodes; the
    divergence uses central differences inside and one-sided differences at
    the boundary. Requires at least 3 nodes per axis.
    """
    from . import grid as _grid

    g = problem.grid
    if any(m < 3 for m in g.shape):
        raise ValueError("kappa0 needs at least 3 nodes per axis")
    dpsi = _grid.nodal_gradient(problem.psi)  # (num_nodes, N, n)
    xs = g.nodes()
    G = problem.integrand.grad_batch(xs, dpsi)
    if epsilon > 0:
        q = problem.integrand.params.q
        s = np.sum(dpsi * dpsi, axis=(1, 2))
        G = G + epsilon * q * s[:, None, None] ** (0.5 * q - 1.0) * dpsi
    N = G.shape[1]
    G = G.reshape(g.shape + (N, g.n))
    div = np.zeros(g.shape + (N,))
    for axis in range(g.n):
        div += _diff_axis(G[..., axis], axis, g.h[axis])
    return float(np.max(np.abs(div)))


def _diff_axis(F, axis, h):
    """Central differences along an axis, one-sided at the two ends."""
    F = np.moveaxis(F, axis, 0)
    out = np.empty_like(F)
    out[1:-1] = (F[2:] - F[:-2]) / (2 * h)
    out[0] = (F[1] - F[0]) / h
    out[-1] = (F[-1] - F[-2]) / h
    return np.moveaxis(out, 0, axis)
