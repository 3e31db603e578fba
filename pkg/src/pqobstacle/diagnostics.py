"""Diagnostics: the V-function change of variables and its equivalence
constants, Nikolskii/Besov difference-quotient seminorms, W^{1,q} norms, the
optimal radial cutoff functional, growth-gap checks, and a mollification
probe for energy gaps between Sobolev classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid as _grid
from . import penalty as _penalty

__all__ = [
    "v_function",
    "v_function_batch",
    "v_gradient",
    "v_equivalence_check",
    "VEquivalenceReport",
    "default_offsets",
    "nikolskii_offset_table",
    "nikolskii_seminorm",
    "cutoff_functional",
    "CutoffReport",
    "cutoff_competitor_value",
    "brute_force_cutoff_min",
    "mollify_field",
    "lavrentiev_probe",
    "LavrentievReport",
    "gap_check",
    "GapReport",
    "w1q_norm",
    "v_l2",
    "contact_mask",
    "DiagnosticsReport",
    "compute_report",
]


# -- V-function ---------------------------------------------------------------

def v_function(z, mu, t):
    """(mu^2 + |z|^2)^((t-2)/4) * z, the degenerate-elliptic change of
    variables; the zero matrix maps to zero for every t > 1."""
    if t <= 1:
        raise ValueError("t must be > 1")
    z = np.asarray(z, dtype=float)
    s = mu * mu + float(np.sum(z * z))
    if s == 0.0:
        return np.zeros_like(z)
    return s ** ((t - 2.0) / 4.0) * z


def v_function_batch(zs, mu, t):
    """v_function over stacked matrices zs (..., N, n)."""
    if t <= 1:
        raise ValueError("t must be > 1")
    zs = np.asarray(zs, dtype=float)
    s = mu * mu + np.sum(zs * zs, axis=(-2, -1))
    fac = np.where(s > 0, s, 1.0) ** ((t - 2.0) / 4.0)
    fac = np.where(s > 0, fac, 0.0)
    return fac[..., None, None] * zs


def v_gradient(u: _grid.Field, mu, t) -> _grid.TriGradient:
    """V applied to the per-triangle gradients of u."""
    tg = _grid.gradient(u)
    return _grid.TriGradient(tg.grid, v_function_batch(tg.values, mu, t))


@dataclass
class VEquivalenceReport:
    ratio_min: float
    ratio_max: float
    samples: int

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min


def v_equivalence_check(mu, t, samples, rng_seed, dim=4) -> VEquivalenceReport:
    """Sampled extremes of

        R = |V(z1) - V(z2)|^2 / [(mu^2+|z1|^2+|z2|^2)^((t-2)/2) |z1-z2|^2],

    which the equivalence asserts is pinched between dimension-free constants
    (empirically within a factor 10 for t in [2, 6])."""
    rng = np.random.default_rng(rng_seed)
    z1 = _log_uniform_vectors(rng, samples, dim)
    z2 = _log_uniform_vectors(rng, samples, dim)
    dz2 = np.sum((z1 - z2) ** 2, axis=1)
    base = mu * mu + np.sum(z1 * z1, axis=1) + np.sum(z2 * z2, axis=1)
    ok = (dz2 > 0) & (base > 0)
    z1, z2, dz2, base = z1[ok], z2[ok], dz2[ok], base[ok]
    v1 = v_function_batch(z1[:, None, :], mu, t)[:, 0, :]
    v2 = v_function_batch(z2[:, None, :], mu, t)[:, 0, :]
    num = np.sum((v1 - v2) ** 2, axis=1)
    R = num / (base ** ((t - 2.0) / 2.0) * dz2)
    return VEquivalenceReport(ratio_min=float(R.min()), ratio_max=float(R.max()),
                              samples=int(R.size))


def _log_uniform_vectors(rng, count, dim):
    v = rng.standard_normal((count, dim))
    v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
    radii = 10.0 ** rng.uniform(-2, 2, size=(count, 1))
    return v * radii


# -- Nikolskii seminorm -------------------------------------------------------

def default_offsets(grid: _grid.Grid):
    """Axis-aligned and diagonal lattice offsets with |h| from 2 lattice
    spacings up to diam(Omega)/4."""
    sizes = [m - 1 for m in grid.shape]
    cap = grid.diameter / 4.0
    ks = []
    k = 2
    while k <= max(sizes):
        ks.append(k)
        k = k + 1 if k < 4 else int(np.ceil(k * 1.5))
    offsets = []
    if grid.n == 1:
        for k in ks:
            if k <= sizes[0] - 1 and k * grid.h[0] <= cap:
                offsets.append((k,))
        return offsets
    dirs = [(1, 0), (0, 1), (1, 1), (1, -1)]
    h1, h2 = grid.h
    for dx, dy in dirs:
        for k in ks:
            k1, k2 = k * dx, k * dy
            if abs(k1) > max(sizes[0] - 1, 0) or abs(k2) > max(sizes[1] - 1, 0):
                continue
            habs = np.hypot(k1 * h1, k2 * h2)
            if habs <= cap:
                offsets.append((k1, k2))
    return offsets


def nikolskii_offset_table(obj, s, t, offsets=None):
    """Per-offset rows (offset, |h|, ||v(.+h)-v||_{L^t(Omega_h)}, |h|^{-s}
    scaled value); the seminorm is the max of the last column. Accepts a
    nodal Field or a per-triangle TriGradient."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    if t < 1:
        raise ValueError("t must be >= 1")
    if isinstance(obj, _grid.Field):
        rows = _offset_rows_nodal(obj, t, offsets)
    elif isinstance(obj, _grid.TriGradient):
        rows = _offset_rows_tri(obj, t, offsets)
    else:
        raise TypeError("expected a Field or TriGradient")
    if not rows:
        raise ValueError("no admissible offsets (domain too small)")
    return [(off, habs, lt, habs ** (-s) * lt) for off, habs, lt in rows]


def nikolskii_seminorm(obj, s, t, offsets=None) -> float:
    """sup over offsets h of |h|^(-s) ||v(.+h) - v||_{L^t(Omega_h)} computed
    from nodal shifts restricted to Omega_h = {x : x, x+h in Omega}."""
    table = nikolskii_offset_table(obj, s, t, offsets)
    return float(max(row[3] for row in table))


def _offset_rows_nodal(fld: _grid.Field, t, offsets):
    g = fld.grid
    v = fld.grid_view()
    offsets = offsets if offsets is not None else default_offsets(g)
    rows = []
    for off in offsets:
        off = tuple(int(k) for k in off)
        if all(k == 0 for k in off):
            continue
        if any(abs(k) > m - 2 for k, m in zip(off, g.shape)):
            continue
        if g.n == 1:
            (k,) = off
            d = v[abs(k):] - v[:-abs(k)]
            w = _overlap_weights(g.shape[0] - abs(k), g.h[0])
            mag2 = np.sum(d * d, axis=-1)
            val = np.sum(w * mag2 ** (t / 2.0))
            habs = abs(k) * g.h[0]
        else:
            k1, k2 = off
            sl = lambda k, m: (slice(max(0, k), m - max(0, -k)),
                               slice(max(0, -k), m - max(0, k)))
            (src1, dst1) = sl(k1, g.shape[0])
            (src2, dst2) = sl(k2, g.shape[1])
            d = v[src1, src2] - v[dst1, dst2]
            w1 = _overlap_weights(g.shape[0] - abs(k1), g.h[0])
            w2 = _overlap_weights(g.shape[1] - abs(k2), g.h[1])
            mag2 = np.sum(d * d, axis=-1)
            val = float(w1 @ mag2 ** (t / 2.0) @ w2)
            habs = np.hypot(k1 * g.h[0], k2 * g.h[1])
        rows.append((off, float(habs), float(val ** (1.0 / t))))
    return rows


def _overlap_weights(m, h):
    w = np.full(m, h)
    w[0] = w[-1] = h / 2.0
    return w


def _offset_rows_tri(tg: _grid.TriGradient, t, offsets):
    g = tg.grid
    v = tg.values
    area = g.triangle_area
    cells = tuple(m - 1 for m in g.shape)
    offsets = offsets if offsets is not None else default_offsets(g)
    rows = []
    for off in offsets:
        off = tuple(int(k) for k in off)
        if all(k == 0 for k in off):
            continue
        if any(abs(k) > c - 1 for k, c in zip(off, cells)):
            continue
        if g.n == 1:
            (k,) = off
            d = v[abs(k):] - v[:-abs(k)]
            val = area * np.sum(np.sum(d * d, axis=(-2, -1)) ** (t / 2.0))
            habs = abs(k) * g.h[0]
        else:
            k1, k2 = off
            sl = lambda k, m: (slice(max(0, k), m - max(0, -k)),
                               slice(max(0, -k), m - max(0, k)))
            (src1, dst1) = sl(k1, cells[0])
            (src2, dst2) = sl(k2, cells[1])
            d = v[:, src1, src2] - v[:, dst1, dst2]
            val = area * np.sum(np.sum(d * d, axis=(-2, -1)) ** (t / 2.0))
            habs = np.hypot(k1 * g.h[0], k2 * g.h[1])
        rows.append((off, float(habs), float(val ** (1.0 / t))))
    return rows


# -- optimal radial cutoff ----------------------------------------------------

@dataclass
class CutoffReport:
    J_optimal: float
    J_bound: float
    r: np.ndarray
    profile: np.ndarray


def cutoff_functional(b, rho, sigma, t, delta, samples=1024) -> CutoffReport:
    """Optimal radial cutoff for the weighted functional
    J(phi) = int_rho^sigma (|phi'| + |phi'|^t) b(r) dr over profiles with
    phi(rho) = 1, phi(sigma) = 0.

    The constructed profile spreads |phi'| proportionally to 1/b:
    phi(r) = 1 - (int_rho^sigma 1/b)^(-1) int_rho^r 1/b. Returns its value
    J_optimal together with the closed-form upper bound
    (sigma-rho)^(-t-1/delta) * (int_rho^sigma b^delta)^(1/delta).
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("b must be a 1D profile with at least 2 samples")
    if np.any(b <= 0):
        raise ValueError("b must be strictly positive")
    if not 0 < rho < sigma:
        raise ValueError("need 0 < rho < sigma")
    if sigma - rho >= 1:
        raise ValueError("need sigma - rho < 1")
    if t <= 1:
        raise ValueError("t must be > 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    m = max(int(samples), b.size)
    r0 = np.linspace(rho, sigma, b.size)
    r = np.linspace(rho, sigma, m)
    bb = np.interp(r, r0, b)
    dr = r[1] - r[0]
    binv = 1.0 / bb
    inc = 0.5 * (binv[1:] + binv[:-1]) * dr
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    total = cum[-1]
    profile = 1.0 - cum / total
    dphi = binv / total  # |phi'|, analytic for the constructed profile
    integrand = (dphi + dphi**t) * bb
    J_opt = float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * dr))
    bd = bb**delta
    J_bound = float((sigma - rho) ** (-t - 1.0 / delta)
                    * np.sum(0.5 * (bd[1:] + bd[:-1]) * dr) ** (1.0 / delta))
    return CutoffReport(J_optimal=J_opt, J_bound=J_bound, r=r, profile=profile)


def cutoff_competitor_value(b, r, t, phi) -> float:
    """J of a piecewise-linear profile phi sampled on the radial grid r
    (segment-exact in phi, trapezoid in b)."""
    b = np.asarray(b, dtype=float)
    phi = np.asarray(phi, dtype=float)
    dr = np.diff(r)
    dphi = np.abs(np.diff(phi) / dr)
    bseg = 0.5 * (b[1:] + b[:-1])
    return float(np.sum((dphi + dphi**t) * bseg * dr))


def brute_force_cutoff_min(b, rho, sigma, t, trials, rng_seed,
                           samples=1024) -> float:
    """Minimum of J over random monotone piecewise-linear admissible cutoffs
    on the same radial grid."""
    b = np.asarray(b, dtype=float)
    m = max(int(samples), b.size)
    r0 = np.linspace(rho, sigma, b.size)
    r = np.linspace(rho, sigma, m)
    bb = np.interp(r, r0, b)
    rng = np.random.default_rng(rng_seed)
    best = np.inf
    for _ in range(trials):
        y = np.sort(rng.random(m))[::-1]
        phi = (y - y[-1]) / (y[0] - y[-1])
        best = min(best, cutoff_competitor_value(bb, r, t, phi))
    return float(best)


# -- mollification probe ------------------------------------------------------

def mollify_field(fld: _grid.Field, radius: float) -> _grid.Field:
    """Separable triangular (linear B-spline) kernel of unit mass, truncated
    and renormalized at the boundary. A radius below one grid spacing is the
    identity."""
    g = fld.grid
    out = fld.grid_view().astype(float).copy()
    for axis in range(g.n):
        k = int(np.floor(radius / g.h[axis] + 1e-12))
        if k >= g.shape[axis]:
            raise ValueError("mollifier radius exceeds the domain")
        out = _axis_smooth(out, axis, k)
    return _grid.Field(g, out.reshape(g.num_nodes, fld.N))


def _axis_smooth(arr, axis, k):
    if k == 0:
        return arr
    arr = np.moveaxis(arr, axis, 0)
    m = arr.shape[0]
    num = np.zeros_like(arr)
    den = np.zeros((m,) + (1,) * (arr.ndim - 1))
    for j in range(-k, k + 1):
        w = float(k + 1 - abs(j))
        dst = slice(max(0, -j), m - max(0, j))
        src = slice(max(0, j), m + min(0, j))
        num[dst] += w * arr[src]
        den[dst] += w
    return np.moveaxis(num / den, 0, axis)


@dataclass
class LavrentievReport:
    radii: list
    energies: list
    base_energy: float
    gap_estimate: float
    feasible: bool


def lavrentiev_probe(problem, u: _grid.Field, eta_width: float | None,
                     mollifier_radii, feas_tol: float = 1e-3) -> LavrentievReport:
    """Energy trace of the mollified competitor sequence

        u_r = eta * (u*phi_r - psi*phi_r + psi) + (1 - eta) * u,

    with eta a smooth cutoff equal to 1 at distance >= eta_width from the
    boundary and 0 on it (eta_width=None means eta == 1, which changes the
    boundary values and is meant for unconstrained smooth probes). Each u_r
    is feasible whenever u is, since mollification preserves u >= psi.

    The gap estimate is the final competitor energy minus the energy of u,
    both for the plain (eps=0, kappa=0) functional. It is an estimate with
    its radius trace, never a verdict.
    """
    from .kernels import EnergyAssembler

    viol = _penalty.violation(u, problem.psi)
    if viol > feas_tol:
        raise ValueError(f"u violates the obstacle by {viol:g} > {feas_tol:g}")
    radii = [float(r) for r in mollifier_radii]
    if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("mollifier radii must decrease")
    if eta_width is not None and radii and radii[0] >= eta_width:
        raise ValueError("mollifier radii must stay below eta_width")

    asm = EnergyAssembler.for_problem(problem)
    uw = np.maximum(u.values, problem.psi.values)
    base = asm.energy(uw, 0.0, 0.0, 1e-4)
    eta = _eta_cutoff(problem.grid, eta_width)[:, None]
    psi = problem.psi.values
    energies = []
    feasible = True
    for r in radii:
        usm = mollify_field(_grid.Field(problem.grid, uw), r).values
        psm = mollify_field(problem.psi, r).values
        ur = eta * (usm - psm + psi) + (1.0 - eta) * uw
        feasible = feasible and bool(np.min(ur - psi) >= -1e-10)
        energies.append(asm.energy(ur, 0.0, 0.0, 1e-4))
    gap = (energies[-1] - base) if energies else 0.0
    return LavrentievReport(radii=radii, energies=energies, base_energy=base,
                            gap_estimate=gap, feasible=feasible)


def _eta_cutoff(g: _grid.Grid, eta_width):
    if eta_width is None:
        return np.ones(g.num_nodes)
    pts = g.nodes()
    dist = np.full(g.num_nodes, np.inf)
    for axis, (a, b) in enumerate(g.extents):
        dist = np.minimum(dist, pts[:, axis] - a)
        dist = np.minimum(dist, b - pts[:, axis])
    s = np.clip(dist / eta_width, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)  # cubic smoothstep


# -- growth gap and norms -----------------------------------------------------

@dataclass
class GapReport:
    q_max_autonomous: float
    q_max_nonautonomous: float | None
    autonomous: bool
    bound: float | None
    satisfied: bool


def gap_check(params, n: int, autonomous: bool) -> GapReport:
    """Admissible upper bounds on q: min(n*p/(n-1), p+1) for autonomous
    densities, (n+alpha)*p/n for x-dependent ones (strict inequality)."""
    p, q = params.p, params.q
    aut = min(n * p / (n - 1), p + 1) if n > 1 else p + 1
    non = None if params.alpha is None else (n + params.alpha) * p / n
    bound = aut if autonomous else non
    satisfied = bound is not None and q < bound
    return GapReport(q_max_autonomous=aut, q_max_nonautonomous=non,
                     autonomous=autonomous, bound=bound, satisfied=satisfied)


def w1q_norm(u: _grid.Field, q: float) -> float:
    """||u||_{L^q} + ||Du||_{L^q} with the grid quadrature rules."""
    return _grid.lp_norm(u, q) + _grid.lp_norm(_grid.gradient(u), q)


def v_l2(u: _grid.Field, mu: float, p: float) -> float:
    """||V_{mu,p}(Du)||_{L^2}."""
    return _grid.lp_norm(v_gradient(u, mu, p), 2.0)


def contact_mask(u: _grid.Field, psi: _grid.Field, tol: float) -> np.ndarray:
    """Nodes where some component of u sits within tol of the obstacle."""
    return np.any(u.values - psi.values <= tol, axis=1)


# -- aggregate report ---------------------------------------------------------

@dataclass
class DiagnosticsReport:
    w1q_norm: float
    v_l2: float
    nikolskii: dict
    violation: float
    gap_condition: GapReport
    lavrentiev: LavrentievReport | None = None


def compute_report(problem, u: _grid.Field, seminorm_pairs=((0.45, 2.0),),
                   offsets=None, lavrentiev_radii=None,
                   eta_width=None) -> DiagnosticsReport:
    pr = problem.integrand.params
    semi = {}
    for s, t in seminorm_pairs:
        vg = v_gradient(u, pr.mu, pr.p)
        semi[(s, t)] = nikolskii_seminorm(vg, s, t, offsets)
    lav = None
    if lavrentiev_radii:
        lav = lavrentiev_probe(problem, u, eta_width, lavrentiev_radii)
    return DiagnosticsReport(
        w1q_norm=w1q_norm(u, pr.q),
        v_l2=v_l2(u, pr.mu, pr.p),
        nikolskii=semi,
        violation=_penalty.violation(u, problem.psi),
        gap_condition=gap_check(pr, problem.grid.n, problem.integrand.autonomous),
        lavrentiev=lav,
    )
