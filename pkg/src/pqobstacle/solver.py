"""Minimization of the penalized, regularized discrete energy

    E(u) = sum_T area * [F(x_c, Du) + eps*|Du|^q]
         + kappa * sum_nodes w * sum_i H_delta(H_delta(psi_i - u_i))

over nodal values with pinned Dirichlet rows, the (eps, delta) continuation
ladder, and an independent projected-gradient oracle for the constrained
problem itself.

The discrete energy is convex and C^1, so first-order descent with Armijo
backtracking converges to the unique minimizer; an optional limited-memory
quasi-Newton direction accelerates it. The ladder warm-starts each rung from
the previous solution while (eps_k, delta_k) decrease to their targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as _diag
from . import grid as _grid
from . import penalty as _penalty
from .integrand import Integrand
from .kernels import EnergyAssembler

__all__ = [
    "ObstacleProblem",
    "SolveConfig",
    "SolveResult",
    "RungRecord",
    "StagnationError",
    "DEFAULT_LADDER",
    "assemble_gradient",
    "minimize",
    "solve_ladder",
    "projected_gradient_oracle",
    "resolve_kappa",
]

DEFAULT_LADDER = ((1e-1, 1e-1), (1e-2, 1e-2), (1e-3, 1e-3), (1e-4, 1e-4))


class StagnationError(RuntimeError):
    """Line search failed to make progress; carries the best iterate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class ObstacleProblem:
    """Domain, integrand, obstacle psi, boundary datum g, component count N.

    The boundary datum doubles as the default initial iterate. g >= psi is
    required at every boundary node; interior infeasibility of g is allowed
    (the penalty handles it).
    """

    def __init__(self, grid: _grid.Grid, integrand: Integrand,
                 psi: _grid.Field, g: _grid.Field):
        if psi.grid != grid or g.grid != grid:
            raise ValueError("psi and g must live on the problem grid")
        if psi.N != g.N:
            raise ValueError("psi and g component counts differ")
        bmask = grid.boundary_mask()
        if np.any(g.values[bmask] < psi.values[bmask] - 1e-12):
            raise ValueError("boundary datum lies below the obstacle")
        self.grid = grid
        self.integrand = integrand
        self.psi = psi
        self.g = g
        self.N = psi.N

    def __repr__(self):
        return (f"ObstacleProblem(grid={self.grid!r}, "
                f"integrand={self.integrand!r}, N={self.N})")


@dataclass
class SolveConfig:
    epsilon: float = 0.0
    penalty: _penalty.PenaltyParams = field(default_factory=_penalty.PenaltyParams)
    ladder: tuple = DEFAULT_LADDER
    grad_tol: float = 1e-8
    energy_tol: float = 0.0
    max_iters: int = 20000
    ls_shrink: float = 0.5
    ls_slope: float = 1e-4
    method: str = "lbfgs"
    lbfgs_memory: int = 10
    deterministic: bool = True
    record_rung_fields: bool = False

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be > 0")
        if self.energy_tol < 0:
            raise ValueError("energy_tol must be >= 0")
        if not 0 < self.ls_shrink < 1:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not 0 < self.ls_slope < 1:
            raise ValueError("ls_slope must lie in (0, 1)")
        if self.method not in ("gd", "lbfgs"):
            raise ValueError("method must be 'gd' or 'lbfgs'")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        ladder = tuple((float(e), float(d)) for e, d in self.ladder)
        if not ladder:
            raise ValueError("ladder must be nonempty")
        for e, d in ladder:
            if e < 0 or not 0 < d <= 1:
                raise ValueError("ladder needs eps >= 0 and delta in (0, 1]")
        for (e0, d0), (e1, d1) in zip(ladder, ladder[1:]):
            if e1 > e0 or d1 > d0:
                raise ValueError("ladder must be non-increasing")
        self.ladder = ladder


@dataclass
class RungRecord:
    epsilon: float
    delta: float
    kappa: float
    energy: float
    violation: float
    w1q_norm: float


@dataclass
class SolveResult:
    u: _grid.Field
    history: list  # (energy, gradient norm, step size) per accepted step
    ladder_trace: list
    converged: bool
    iterations: int
    rung_fields: list = field(default_factory=list)


def resolve_kappa(problem: ObstacleProblem, config: SolveConfig,
                  epsilon: float | None = None) -> float:
    """kappa from config, or safety * kappa0 when set to auto (None). The
    threshold is computed for the regularized integrand at the given eps
    (default: the largest ladder eps), and cached on config.penalty."""
    if config.penalty.kappa is not None:
        return float(config.penalty.kappa)
    if epsilon is None:
        epsilon = max(e for e, _ in config.ladder)
    kappa0 = _penalty.compute_kappa0(problem, epsilon=epsilon)
    config.penalty.kappa0 = kappa0
    return config.penalty.safety * kappa0


def assemble_gradient(problem: ObstacleProblem, u: _grid.Field,
                      config: SolveConfig) -> _grid.Field:
    """Exact gradient of the discrete energy with respect to the free nodal
    values, zeroed at boundary nodes. kappa=None (auto) is treated as 0 here;
    a zero return certifies discrete Euler-Lagrange stationarity."""
    if u.grid != problem.grid:
        raise ValueError("field grid does not match problem grid")
    asm = EnergyAssembler.for_problem(problem)
    kappa = config.penalty.kappa or 0.0
    _, grad = asm.energy_grad(u.values, config.epsilon, kappa,
                              config.penalty.delta)
    return _grid.Field(problem.grid, grad)


def _result(problem, u_values, history, converged, iters):
    return SolveResult(
        u=_grid.Field(problem.grid, u_values.copy()),
        history=history,
        ladder_trace=[],
        converged=converged,
        iterations=iters,
    )


def minimize(problem: ObstacleProblem, config: SolveConfig,
             initial: _grid.Field | None = None, *,
             epsilon: float | None = None, delta: float | None = None,
             kappa: float | None = None) -> SolveResult:
    """Descent with Armijo backtracking (method 'gd' or 'lbfgs') on the
    penalized energy at fixed (eps, delta, kappa), until the free-node
    gradient norm drops below grad_tol, the relative energy change drops
    below energy_tol, or max_iters is hit. Accepted steps strictly decrease
    the energy; 60 failed shrinks raise StagnationError with the best iterate.
    """
    eps = config.epsilon if epsilon is None else epsilon
    dlt = config.penalty.delta if delta is None else delta
    kap = resolve_kappa(problem, config, epsilon=eps) if kappa is None else kappa

    asm = EnergyAssembler.for_problem(problem)
    u = asm.clamp((problem.g if initial is None else initial).values)
    E, g = asm.energy_grad(u, eps, kap, dlt)
    gnorm = float(np.linalg.norm(g))
    history = [(E, gnorm, 0.0)]

    mem_s, mem_y, mem_rho = [], [], []
    t_accept = 1.0
    n_iters = 0
    for n_iters in range(1, config.max_iters + 1):
        if gnorm <= config.grad_tol:
            return _result(problem, u, history, True, n_iters - 1)
        if config.method == "lbfgs" and mem_s:
            d = _two_loop(g, mem_s, mem_y, mem_rho)
            t0 = 1.0
        else:
            d = -g
            t0 = min(t_accept * 2.0, 1.0 / max(gnorm, 1.0)) if config.method == "gd" \
                else 1.0 / max(gnorm, 1.0)
        slope = float(np.sum(g * d))
        if slope >= 0:
            d = -g
            slope = -gnorm**2
            t0 = 1.0 / max(gnorm, 1.0)
        t = t0
        accepted = False
        g_next = None
        flat_tol = 1e-14 * (1.0 + abs(E))
        for _ in range(60):
            u_new = u + t * d
            E_new = asm.energy(u_new, eps, kap, dlt)
            if E_new < E and E_new <= E + config.ls_slope * t * slope:
                g_next = None
                accepted = True
                break
            # Near the roundoff floor of the energy the decrease is no longer
            # resolvable; accept on flat energy plus a curvature test on the
            # (still accurate) gradient instead.
            if E_new <= E + flat_tol:
                E_new, g_next = asm.energy_grad(u_new, eps, kap, dlt)
                if abs(float(np.sum(g_next * d))) <= 0.9 * abs(slope):
                    accepted = True
                    break
            t *= config.ls_shrink
        if not accepted:
            best = _result(problem, u, history, False, n_iters - 1)
            raise StagnationError(
                f"line search failed after 60 shrinks at iteration {n_iters}",
                best)
        t_accept = t
        E_old, g_old = E, g
        u = asm.clamp(u_new)
        if g_next is None:
            E, g = asm.energy_grad(u, eps, kap, dlt)
        else:
            E, g = E_new, g_next
        gnorm = float(np.linalg.norm(g))
        history.append((E, gnorm, t))
        if config.method == "lbfgs":
            s = t * d
            y = g - g_old
            sy = float(np.sum(s * y))
            if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                mem_s.append(s)
                mem_y.append(y)
                mem_rho.append(1.0 / sy)
                if len(mem_s) > config.lbfgs_memory:
                    mem_s.pop(0)
                    mem_y.pop(0)
                    mem_rho.pop(0)
        if config.energy_tol > 0 and abs(E_old - E) <= config.energy_tol * max(1.0, abs(E)):
            return _result(problem, u, history, True, n_iters)
    converged = gnorm <= config.grad_tol
    return _result(problem, u, history, converged, n_iters)


def _two_loop(g, mem_s, mem_y, mem_rho):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(mem_s), reversed(mem_y), reversed(mem_rho)):
        a = rho * float(np.sum(s * q))
        alphas.append(a)
        q -= a * y
    y_last, s_last = mem_y[-1], mem_s[-1]
    gamma = float(np.sum(s_last * y_last)) / max(float(np.sum(y_last * y_last)), 1e-300)
    q *= gamma
    for (s, y, rho), a in zip(zip(mem_s, mem_y, mem_rho), reversed(alphas)):
        b = rho * float(np.sum(y * q))
        q += (a - b) * s
    return -q


def solve_ladder(problem: ObstacleProblem, config: SolveConfig,
                 initial: _grid.Field | None = None) -> SolveResult:
    """Warm-started sequence of minimize calls along the (eps_k, delta_k)
    ladder with kappa held fixed (auto: safety * kappa0 at the largest eps).
    Records per-rung energy, violation, and W^{1,q} norm."""
    gap = _diag.gap_check(problem.integrand.params, problem.grid.n,
                          problem.integrand.autonomous)
    if not gap.satisfied:
        warnings.warn(
            f"gap condition violated: q={problem.integrand.params.q} "
            f">= bound {gap.bound}", stacklevel=2)
    kappa = resolve_kappa(problem, config)
    u = problem.g if initial is None else initial
    trace = []
    history = []
    rung_fields = []
    iters = 0
    converged = True
    for k, (eps_k, delta_k) in enumerate(config.ladder):
        try:
            res = minimize(problem, config, initial=u,
                           epsilon=eps_k, delta=delta_k, kappa=kappa)
        except StagnationError as err:
            err.best.ladder_trace = trace
            raise StagnationError(f"rung {k} (eps={eps_k}, delta={delta_k}): "
                                  f"{err}", err.best) from err
        u = res.u
        history.extend(res.history)
        iters += res.iterations
        converged = converged and res.converged
        trace.append(RungRecord(
            epsilon=eps_k,
            delta=delta_k,
            kappa=kappa,
            energy=res.history[-1][0],
            violation=_penalty.violation(u, problem.psi),
            w1q_norm=_diag.w1q_norm(u, problem.integrand.params.q),
        ))
        if config.record_rung_fields:
            rung_fields.append(u.copy())
    return SolveResult(u=u, history=history, ladder_trace=trace,
                       converged=converged, iterations=iters,
                       rung_fields=rung_fields)


def projected_gradient_oracle(problem: ObstacleProblem, config: SolveConfig,
                              initial: _grid.Field | None = None) -> SolveResult:
    """Independent oracle for the constrained problem: bound-constrained
    descent on the kappa=0 energy with iterates clamped nodally to u >= psi
    (boundary rows pinned by equal bounds).

    The heavy lifting is done by scipy's L-BFGS-B (gradient projection with
    limited-memory curvature), whose line search stops at the energy's
    rounding floor; a projected quasi-Newton polish with the same
    flat-energy/curvature acceptance as minimize then drives the reduced
    gradient (full gradient off the contact set, its negative part on it)
    down to grad_tol. The returned iterate satisfies min(u - psi) >= 0
    exactly at the nodes.
    """
    import scipy.optimize as _sopt

    asm = EnergyAssembler.for_problem(problem)
    psi = problem.psi.values
    eps = config.epsilon
    dlt = config.penalty.delta
    shape = psi.shape
    lb = psi.ravel().copy()
    ub = np.full_like(lb, np.inf)
    pin = np.repeat(asm.bmask, problem.N)
    gvals = problem.g.values.ravel()
    lb[pin] = gvals[pin]
    ub[pin] = gvals[pin]
    u0 = np.maximum(asm.clamp((problem.g if initial is None else initial).values),
                    psi).ravel()

    history = []

    def fun(x):
        E, gr = asm.energy_grad(x.reshape(shape), eps, 0.0, dlt)
        return E, gr.ravel()

    def cb(xk):
        E, gr = asm.energy_grad(xk.reshape(shape), eps, 0.0, dlt)
        history.append((E, _reduced_norm(xk.reshape(shape), gr, psi), float("nan")))

    E0, g0 = asm.energy_grad(u0.reshape(shape), eps, 0.0, dlt)
    history.append((E0, _reduced_norm(u0.reshape(shape), g0, psi), 0.0))
    res = _sopt.minimize(
        fun, u0, jac=True, method="L-BFGS-B",
        bounds=np.stack([lb, ub], axis=1), callback=cb,
        options=dict(maxiter=config.max_iters, maxfun=4 * config.max_iters,
                     ftol=0.0, gtol=0.1 * config.grad_tol / np.sqrt(lb.size),
                     maxcor=max(10, config.lbfgs_memory)),
    )
    u = np.maximum(res.x.reshape(shape), psi)
    iters = int(res.nit)
    u, extra, converged = _projected_polish(asm, u, psi, lb.reshape(shape),
                                            eps, dlt, config, history)
    iters += extra
    return _oracle_result(problem, u, history, converged, iters)


def _projected_polish(asm, u, psi, lb, eps, dlt, config, history):
    """Projected L-BFGS refinement below the energy rounding floor: accepts
    steps on strict decrease or on flat energy with shrinking directional
    derivative, measured on the reduced gradient."""
    E, g = asm.energy_grad(u, eps, 0.0, dlt)
    r = _reduced_gradient(u, g, lb)
    rnorm = float(np.linalg.norm(r))
    mem_s, mem_y, mem_rho = [], [], []
    for it in range(1, config.max_iters + 1):
        if rnorm <= config.grad_tol:
            return u, it - 1, True
        d = _two_loop(r, mem_s, mem_y, mem_rho) if mem_s else -r
        slope = float(np.sum(r * d))
        if slope >= 0:
            d, slope = -r, -rnorm**2
        t = 1.0 if mem_s else 1.0 / max(rnorm, 1.0)
        accepted = False
        g_next = None
        flat_tol = 1e-14 * (1.0 + abs(E))
        for _ in range(60):
            u_new = np.maximum(u + t * d, lb)
            step = u_new - u
            dec = float(np.sum(r * step))
            E_new = asm.energy(u_new, eps, 0.0, dlt)
            if dec < 0 and E_new < E and E_new <= E + config.ls_slope * dec:
                g_next = None
                accepted = True
                break
            if dec < 0 and E_new <= E + flat_tol:
                E_new, g_next = asm.energy_grad(u_new, eps, 0.0, dlt)
                r_new = _reduced_gradient(u_new, g_next, lb)
                if abs(float(np.sum(r_new * step))) <= 0.9 * abs(dec):
                    accepted = True
                    break
            t *= config.ls_shrink
        if not accepted:
            return u, it - 1, rnorm <= config.grad_tol
        if g_next is None:
            E_new, g_next = asm.energy_grad(u_new, eps, 0.0, dlt)
            r_new = _reduced_gradient(u_new, g_next, lb)
        s = u_new - u
        y = r_new - r
        sy = float(np.sum(s * y))
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            mem_s.append(s)
            mem_y.append(y)
            mem_rho.append(1.0 / sy)
            if len(mem_s) > config.lbfgs_memory:
                mem_s.pop(0)
                mem_y.pop(0)
                mem_rho.pop(0)
        u, E, g, r = u_new, E_new, g_next, r_new
        rnorm = float(np.linalg.norm(r))
        history.append((E, rnorm, t))
    return u, config.max_iters, rnorm <= config.grad_tol


def _reduced_gradient(u, g, lb):
    r = g.copy()
    active = u <= lb
    r[active] = np.minimum(r[active], 0.0)
    return r


def _reduced_norm(u, g, psi):
    r = g.copy()
    active = u <= psi
    r[active] = np.minimum(r[active], 0.0)
    return float(np.linalg.norm(r))


def _oracle_result(problem, u, history, converged, iters):
    res = _result(problem, u, history, converged, iters)
    res.ladder_trace = [RungRecord(
        epsilon=0.0, delta=0.0, kappa=0.0, energy=history[-1][0],
        violation=_penalty.violation(res.u, problem.psi),
        w1q_norm=_diag.w1q_norm(res.u, problem.integrand.params.q),
    )]
    return res
