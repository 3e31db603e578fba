"""Energy densities F(x, z) with (p,q)-growth and samplers that probe their
structural hypotheses (convexity below the p-power, upper growth, Hölder
continuity in x, quasi-monotonicity, and the common-minimizer condition used
for non-autonomous densities).

Built-in densities are all of the two-power form

    F(x, z) = c1(x) * (mu^2 + |z|^2)^(p/2) + c2(x) * (mu^2 + |z|^2)^(q/2),

which covers the plain p-power (c1=1, c2=0, mu=0), its regularized variant
(mu>0), the double-phase density (c2 = a(x) >= 0), and the Hölder-modulated
p-power (c1 = 1 + a(x)). User-supplied densities with an explicit z-gradient
are accepted programmatically; they miss the fast assembly path but support
every check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid as _grid

__all__ = [
    "GrowthParams",
    "Integrand",
    "p_power",
    "p_power_regularized",
    "double_phase",
    "holder_modulated",
    "user_density",
    "check_h1_convexity",
    "check_h3_holder",
    "check_h4_monotonicity",
    "check_h6",
    "check_growth",
]

KINDS = (
    "p-power",
    "p-power-regularized",
    "double-phase",
    "holder-modulated",
    "user",
)


@dataclass(frozen=True)
class GrowthParams:
    """Growth metadata: exponents 2 <= p <= q, ellipticity shift mu >= 0,
    lower/upper constants lambda, Lambda, and the x-Hölder exponent alpha
    (non-autonomous densities only)."""

    p: float
    q: float
    mu: float = 0.0
    lam: float = 1.0
    Lam: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if not 2.0 <= self.p <= self.q:
            raise ValueError(f"need 2 <= p <= q, got p={self.p}, q={self.q}")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.lam <= 0 or self.Lam <= 0:
            raise ValueError("lambda and Lambda must be > 0")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")


def _as_coeff(a):
    """Normalize a coefficient: float -> constant, Field -> PL interpolant,
    callable -> itself. Returns (callable over (...,n) points, is_constant)."""
    if a is None:
        return None, True
    if isinstance(a, (int, float)):
        c = float(a)
        return (lambda pts: np.full(np.asarray(pts).shape[:-1], c)), True
    if isinstance(a, _grid.Field):
        if a.N != 1:
            raise ValueError("coefficient fields must be scalar")

        def ev(pts, _f=a):
            pts = np.asarray(pts, dtype=float)
            lead = pts.shape[:-1]
            flat = pts.reshape(-1, pts.shape[-1])
            return _grid.evaluate(_f, flat)[:, 0].reshape(lead)

        return ev, False
    if callable(a):
        return a, False
    raise TypeError("coefficient must be a number, Field, or callable")


class Integrand:
    """An energy density F(x, z) for z of shape (N, n)."""

    def __init__(self, params: GrowthParams, kind: str, c1=None, c2=None,
                 density=None, density_grad=None, autonomous=None):
        if kind not in KINDS:
            raise ValueError(f"unknown integrand kind {kind!r}")
        self.params = params
        self.kind = kind
        self._c1, c1_const = _as_coeff(c1 if c1 is not None else 1.0)
        self._c2, c2_const = _as_coeff(c2)
        self._density = density
        self._density_grad = density_grad
        if kind == "user":
            if density is None or density_grad is None:
                raise ValueError("user integrands need density and gradient")
            self.autonomous = bool(autonomous)
        else:
            self.autonomous = c1_const and c2_const if autonomous is None else bool(autonomous)

    # -- pointwise ---------------------------------------------------------

    def eval(self, x, z) -> float:
        """F(x, z); x may be None for autonomous densities."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError("non-finite gradient argument")
        if self.kind == "user":
            return float(self._density(x, z))
        s = self.params.mu**2 + float(np.sum(z * z))
        c1, c2 = self._coeffs_at(x)
        val = c1 * s ** (self.params.p / 2)
        if c2:
            val += c2 * s ** (self.params.q / 2)
        return float(val)

    def grad_z(self, x, z) -> np.ndarray:
        """dF/dz at (x, z); agrees with central differences of eval."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError("non-finite gradient argument")
        if self.kind == "user":
            return np.asarray(self._density_grad(x, z), dtype=float)
        p, q, mu = self.params.p, self.params.q, self.params.mu
        s = mu**2 + float(np.sum(z * z))
        c1, c2 = self._coeffs_at(x)
        # s == 0 only with mu = 0; exponent (p-2)/2 >= 0 so 0**0 = 1 covers p = 2
        fac = p * c1 * s ** ((p - 2) / 2)
        if c2:
            fac += q * c2 * s ** ((q - 2) / 2)
        return fac * z

    def _coeffs_at(self, x):
        if x is None:
            if not self.autonomous:
                raise ValueError("x-dependent density evaluated without x")
            x = np.zeros(2)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c1 = float(self._c1(x[None, :])[0])
        c2 = float(self._c2(x[None, :])[0]) if self._c2 is not None else 0.0
        return c1, c2

    # -- vectorized --------------------------------------------------------

    def eval_batch(self, xs, zs) -> np.ndarray:
        """F over stacked points xs (...,n) (or None) and gradients zs (...,N,n)."""
        zs = np.asarray(zs, dtype=float)
        if self.kind == "user":
            lead = zs.shape[:-2]
            flat_z = zs.reshape((-1,) + zs.shape[-2:])
            flat_x = (
                None if xs is None
                else np.asarray(xs, float).reshape(-1, np.asarray(xs).shape[-1])
            )
            out = np.array([
                self._density(None if flat_x is None else flat_x[k], flat_z[k])
                for k in range(flat_z.shape[0])
            ])
            return out.reshape(lead)
        p, q, mu = self.params.p, self.params.q, self.params.mu
        s = mu**2 + np.sum(zs * zs, axis=(-2, -1))
        c1, c2 = self._coeff_arrays(xs, s.shape)
        val = c1 * s ** (p / 2)
        if c2 is not None:
            val = val + c2 * s ** (q / 2)
        return val

    def grad_batch(self, xs, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=float)
        if self.kind == "user":
            lead = zs.shape[:-2]
            flat_z = zs.reshape((-1,) + zs.shape[-2:])
            flat_x = (
                None if xs is None
                else np.asarray(xs, float).reshape(-1, np.asarray(xs).shape[-1])
            )
            out = np.stack([
                np.asarray(self._density_grad(
                    None if flat_x is None else flat_x[k], flat_z[k]), dtype=float)
                for k in range(flat_z.shape[0])
            ])
            return out.reshape(lead + zs.shape[-2:])
        p, q, mu = self.params.p, self.params.q, self.params.mu
        s = mu**2 + np.sum(zs * zs, axis=(-2, -1))
        c1, c2 = self._coeff_arrays(xs, s.shape)
        fac = p * c1 * s ** ((p - 2) / 2)
        if c2 is not None:
            fac = fac + q * c2 * s ** ((q - 2) / 2)
        return fac[..., None, None] * zs

    def _coeff_arrays(self, xs, shape):
        if xs is None:
            if not self.autonomous:
                raise ValueError("x-dependent density evaluated without x")
            xs = np.zeros(shape + (2,))
        xs = np.asarray(xs, dtype=float)
        c1 = np.broadcast_to(self._c1(xs), shape)
        c2 = np.broadcast_to(self._c2(xs), shape) if self._c2 is not None else None
        return c1, c2

    def centroid_coeffs(self, xs):
        """Two-power coefficients (c1, c2) at quadrature points, or None for
        user densities (which take the generic assembly path)."""
        if self.kind == "user":
            return None
        xs = np.asarray(xs, dtype=float)
        shape = xs.shape[:-1]
        c1, c2 = self._coeff_arrays(xs, shape)
        if c2 is None:
            c2 = np.zeros(shape)
        # owned copies: _coeff_arrays may hand out read-only broadcast views
        return (np.array(c1, dtype=float, order="C"),
                np.array(c2, dtype=float, order="C"))

    def __repr__(self):
        return f"Integrand(kind={self.kind!r}, params={self.params})"


# -- constructors -----------------------------------------------------------

def _default_Lam(p, q, mu, amax):
    # safe upper constant for (1+amax)*(mu^2+|z|^2)^(q/2) <= Lam*(1+|z|^q)
    return (1.0 + amax) * max(1.0, mu) ** q * 2 ** (q / 2)


def p_power(p: float, lam: float = 1.0) -> Integrand:
    """F(z) = |z|^p."""
    params = GrowthParams(p=p, q=p, mu=0.0, lam=lam, Lam=_default_Lam(p, p, 0.0, 0.0))
    return Integrand(params, "p-power")


def p_power_regularized(p: float, mu: float = 1.0, lam: float = 1.0) -> Integrand:
    """F(z) = (mu^2 + |z|^2)^(p/2) with mu > 0."""
    if mu <= 0:
        raise ValueError("regularized p-power needs mu > 0")
    params = GrowthParams(p=p, q=p, mu=mu, lam=lam, Lam=_default_Lam(p, p, mu, 0.0))
    return Integrand(params, "p-power-regularized")


def double_phase(p: float, q: float, a, mu: float = 0.0, lam: float = 1.0,
                 alpha: float | None = None, Lam: float | None = None) -> Integrand:
    """F(x, z) = (mu^2+|z|^2)^(p/2) + a(x) * (mu^2+|z|^2)^(q/2), a >= 0."""
    amax = float(a) if isinstance(a, (int, float)) else (
        float(np.max(a.values)) if isinstance(a, _grid.Field) else 1.0
    )
    if Lam is None:
        Lam = _default_Lam(p, q, mu, amax)
    params = GrowthParams(p=p, q=q, mu=mu, lam=lam, Lam=Lam, alpha=alpha)
    return Integrand(params, "double-phase", c1=1.0, c2=a)


def holder_modulated(p: float, a, alpha: float, mu: float = 0.0,
                     lam: float = 1.0, Lam: float | None = None,
                     q: float | None = None) -> Integrand:
    """F(x, z) = (1 + a(x)) * (mu^2+|z|^2)^(p/2), a >= 0 Hölder with exponent alpha."""
    coeff, const = _as_coeff(a)
    if q is None:
        q = p
    if Lam is None:
        Lam = _default_Lam(p, q, mu, 1.0)
    params = GrowthParams(p=p, q=q, mu=mu, lam=lam, Lam=Lam, alpha=alpha)

    def one_plus(pts, _c=coeff):
        return 1.0 + _c(pts)

    return Integrand(params, "holder-modulated", c1=one_plus, autonomous=const)


def user_density(density, density_grad, params: GrowthParams,
                 autonomous: bool = False) -> Integrand:
    """Wrap a user density F(x, z) -> float with its z-gradient."""
    return Integrand(params, "user", density=density, density_grad=density_grad,
                     autonomous=autonomous)


# -- hypothesis samplers -----------------------------------------------------

@dataclass
class ConvexityReport:
    samples: int
    violations: int
    worst_gap: float


@dataclass
class HolderReport:
    applicable: bool
    max_ratio: float = 0.0

    @property
    def passed(self) -> bool:
        return self.applicable and self.max_ratio <= 1.0 + 1e-9


@dataclass
class H6Report:
    holds: bool
    worst_point: tuple | None = None
    margin: float = np.inf


@dataclass
class MonotonicityReport:
    c_fit: float
    samples: int


@dataclass
class GrowthReport:
    c_lower: float
    upper_ratio: float
    samples: int


def _sample_points(rng, count, extents):
    lo = np.array([a for a, _ in extents])
    hi = np.array([b for _, b in extents])
    return lo + rng.random((count, len(extents))) * (hi - lo)


def _sample_mats(rng, count, radius, N, n):
    z = rng.standard_normal((count, N, n))
    norms = np.sqrt(np.sum(z * z, axis=(1, 2), keepdims=True))
    radii = radius * rng.random((count, 1, 1)) ** (1.0 / (N * n))
    return z / np.maximum(norms, 1e-300) * radii


def check_h1_convexity(integrand: Integrand, samples: int, radius: float,
                       rng_seed: int, n: int = 2, N: int = 1,
                       extents=None) -> ConvexityReport:
    """Midpoint-convexity test of G(z) = F(x,z) - lambda*(mu^2+|z|^2)^(p/2)
    at random (x, z1, z2)."""
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    extents = extents or tuple((0.0, 1.0) for _ in range(n))
    xs = _sample_points(rng, samples, extents)
    z1 = _sample_mats(rng, samples, radius, N, n)
    z2 = _sample_mats(rng, samples, radius, N, n)
    zm = 0.5 * (z1 + z2)
    pr = integrand.params

    def G(z):
        s = pr.mu**2 + np.sum(z * z, axis=(-2, -1))
        return integrand.eval_batch(xs, z) - pr.lam * s ** (pr.p / 2)

    g1, g2, gm = G(z1), G(z2), G(zm)
    gap = gm - 0.5 * (g1 + g2)
    scale = 1.0 + np.abs(g1) + np.abs(g2)
    bad = gap > 1e-10 * scale
    return ConvexityReport(samples=samples, violations=int(np.sum(bad)),
                           worst_gap=float(np.max(gap / scale)))


def check_h3_holder(integrand: Integrand, samples: int, radius: float,
                    rng_seed: int, n: int = 2, N: int = 1,
                    extents=None) -> HolderReport:
    """Max over samples of |F(x,z)-F(y,z)| / (Lam*|x-y|^alpha*(1+|z|^2)^(q/2))."""
    if integrand.autonomous:
        return HolderReport(applicable=False)
    pr = integrand.params
    if pr.alpha is None:
        raise ValueError("non-autonomous integrand without declared alpha")
    rng = np.random.default_rng(rng_seed)
    extents = extents or tuple((0.0, 1.0) for _ in range(n))
    xs = _sample_points(rng, samples, extents)
    ys = _sample_points(rng, samples, extents)
    zs = _sample_mats(rng, samples, radius, N, n)
    num = np.abs(integrand.eval_batch(xs, zs) - integrand.eval_batch(ys, zs))
    dist = np.sqrt(np.sum((xs - ys) ** 2, axis=1))
    sz = 1.0 + np.sum(zs * zs, axis=(1, 2))
    den = pr.Lam * dist**pr.alpha * sz ** (pr.q / 2)
    ok = den > 0
    return HolderReport(applicable=True,
                        max_ratio=float(np.max(num[ok] / den[ok])))


def check_h4_monotonicity(integrand: Integrand, samples: int, radius: float,
                          rng_seed: int, n: int = 2, N: int = 1,
                          extents=None) -> MonotonicityReport:
    """Fit the best constant c in
    F(x,z)-F(x,w)-<dF(x,w), z-w> >= c*(mu^2+|z|^2+|w|^2)^((p-2)/2)*|z-w|^2."""
    rng = np.random.default_rng(rng_seed)
    extents = extents or tuple((0.0, 1.0) for _ in range(n))
    xs = _sample_points(rng, samples, extents)
    z = _sample_mats(rng, samples, radius, N, n)
    w = _sample_mats(rng, samples, radius, N, n)
    pr = integrand.params
    lhs = (integrand.eval_batch(xs, z) - integrand.eval_batch(xs, w)
           - np.sum(integrand.grad_batch(xs, w) * (z - w), axis=(1, 2)))
    sz = pr.mu**2 + np.sum(z * z, axis=(1, 2)) + np.sum(w * w, axis=(1, 2))
    dz = np.sum((z - w) ** 2, axis=(1, 2))
    ok = (sz > 0) & (dz > 1e-24)
    ratio = lhs[ok] / (sz[ok] ** ((pr.p - 2) / 2) * dz[ok])
    return MonotonicityReport(c_fit=float(np.min(ratio)), samples=int(np.sum(ok)))


def check_growth(integrand: Integrand, samples: int, radius: float,
                 rng_seed: int, n: int = 2, N: int = 1,
                 extents=None) -> GrowthReport:
    """Fitted constants of the two-sided growth bound
    lam*(mu^2+|z|^2)^(p/2) - C <= F(x,z) <= Lam*(1+|z|^q)."""
    rng = np.random.default_rng(rng_seed)
    extents = extents or tuple((0.0, 1.0) for _ in range(n))
    xs = _sample_points(rng, samples, extents)
    zs = _sample_mats(rng, samples, radius, N, n)
    pr = integrand.params
    vals = integrand.eval_batch(xs, zs)
    s = pr.mu**2 + np.sum(zs * zs, axis=(1, 2))
    zq = np.sum(zs * zs, axis=(1, 2)) ** (pr.q / 2)
    c_lower = float(np.max(pr.lam * s ** (pr.p / 2) - vals, initial=0.0))
    upper_ratio = float(np.max(vals / (pr.Lam * (1.0 + zq))))
    return GrowthReport(c_lower=c_lower, upper_ratio=upper_ratio, samples=samples)


def check_h6(integrand: Integrand, eps0: float, x_samples: int,
             z_samples: int, rng_seed: int, n: int = 2, N: int = 1,
             extents=None, candidates: int = 24) -> H6Report:
    """Sampling test of the common-minimizer condition: around each sampled x
    and radius eps <= eps0 there should be one point y_hat of the closed
    ball-intersection with F(y_hat, z) <= F(y, z) for all sampled y, z.
    Sound when it reports failure; heuristic when it reports success."""
    if integrand.autonomous:
        return H6Report(holds=True, worst_point=None)
    rng = np.random.default_rng(rng_seed)
    extents = extents or tuple((0.0, 1.0) for _ in range(n))
    lo = np.array([a for a, _ in extents])
    hi = np.array([b for _, b in extents])
    xs = _sample_points(rng, x_samples, extents)
    zs = _sample_mats(rng, z_samples, 10.0, N, n)
    holds = True
    worst = None
    worst_margin = np.inf
    for x in xs:
        for eps in (eps0, eps0 / 2, eps0 / 4):
            offs = rng.standard_normal((candidates, n))
            offs /= np.maximum(np.sqrt(np.sum(offs**2, axis=1, keepdims=True)), 1e-300)
            offs *= eps * rng.random((candidates, 1)) ** (1.0 / n)
            ys = np.clip(x + offs, lo, hi)
            ys = np.vstack([ys, x])
            # table[c, k] = F(ys[c], zs[k])
            table = integrand.eval_batch(
                np.repeat(ys[:, None, :], z_samples, axis=1),
                np.broadcast_to(zs, (len(ys),) + zs.shape),
            )
            tol = 1e-12 * (1.0 + np.abs(table).max())
            # margin of candidate c: how far it is from minimizing every column
            margins = np.max(table - table.min(axis=0, keepdims=True), axis=1)
            best = float(margins.min())
            if best <= tol:
                continue
            holds = False
            if best < worst_margin or worst is None:
                worst_margin = best
                worst = (tuple(x), eps)
    return H6Report(holds=holds, worst_point=worst,
                    margin=float(worst_margin if not holds else 0.0))
