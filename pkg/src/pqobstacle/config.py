"""Experiment configuration: a flat, sectioned key-value text file (INI
syntax) with sections [problem], [penalty], [solver], [diagnostics], and
[output]. See README.md for the full schema and the expression catalog.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from . import expressions as _expr
from . import grid as _grid
from . import integrand as _integrand
from . import penalty as _penalty
from . import solver as _solver

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "build_problem"]


class ConfigError(Exception):
    """Invalid or unparsable experiment configuration."""


@dataclass
class ExperimentConfig:
    path: str
    dim: int
    extents: tuple
    resolution: tuple
    components: int
    integrand_kind: str
    integrand_params: dict
    coefficient: str | None
    psi_spec: str
    g_spec: str
    solve: _solver.SolveConfig
    reports: tuple
    seminorm_s: tuple
    seminorm_t: tuple
    lavrentiev_radii: tuple
    eta_width: float | None
    output_dir: str
    formats: tuple
    resolved: list = field(default_factory=list)  # (section, key, value) rows

    def header_lines(self):
        """Provenance block embedded in every artifact."""
        lines = [f"# config: {os.path.basename(self.path)}"]
        lines += [f"# {sec}.{key} = {val}" for sec, key, val in self.resolved]
        return lines


def _get(cp, section, key, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    if required:
        raise ConfigError(f"missing required key [{section}] {key}")
    return default


def _floats(text):
    try:
        return tuple(float(t) for t in text.split())
    except ValueError as err:
        raise ConfigError(f"expected numbers, got {text!r}") from err


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")

    dim = int(_get(cp, "problem", "dim", "2"))
    if dim not in (1, 2):
        raise ConfigError("dim must be 1 or 2")
    ex = [_floats(_get(cp, "problem", "extent_x", "0 1"))]
    if dim == 2:
        ex.append(_floats(_get(cp, "problem", "extent_y", "0 1")))
    for e in ex:
        if len(e) != 2 or e[1] <= e[0]:
            raise ConfigError(f"bad extent {e}")
    res = tuple(int(v) for v in _get(cp, "problem", "resolution", required=True).split())
    if len(res) != dim or any(m < 3 for m in res):
        raise ConfigError("resolution needs >= 3 nodes per axis")
    components = int(_get(cp, "problem", "components", "1"))
    if components < 1:
        raise ConfigError("components must be >= 1")

    kind = _get(cp, "problem", "integrand", "p-power")
    params = {}
    for key in ("p", "q", "mu", "lambda", "Lambda", "alpha"):
        raw = _get(cp, "problem", key)
        if raw is not None:
            params[key] = float(raw)
    coefficient = _get(cp, "problem", "coefficient")
    psi_spec = _get(cp, "problem", "psi", required=True)
    g_spec = _get(cp, "problem", "g", required=True)

    try:
        pen = _penalty.PenaltyParams(
            kappa=_parse_kappa(_get(cp, "penalty", "kappa", "auto")),
            delta=float(_get(cp, "penalty", "delta", "1e-4")),
            safety=float(_get(cp, "penalty", "safety", "2.0")),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    epsilon = float(_get(cp, "solver", "epsilon", "0"))
    ladder_raw = _get(cp, "solver", "ladder", "auto")
    ladder = _parse_ladder(ladder_raw, epsilon, pen.delta)
    try:
        solve = _solver.SolveConfig(
            epsilon=epsilon,
            penalty=pen,
            ladder=ladder,
            grad_tol=float(_get(cp, "solver", "grad_tol", "1e-8")),
            energy_tol=float(_get(cp, "solver", "energy_tol", "0")),
            max_iters=int(_get(cp, "solver", "max_iters", "20000")),
            ls_shrink=float(_get(cp, "solver", "ls_shrink", "0.5")),
            ls_slope=float(_get(cp, "solver", "ls_slope", "1e-4")),
            method=_get(cp, "solver", "method", "lbfgs"),
            deterministic=_get(cp, "solver", "deterministic", "true").lower()
            in ("1", "true", "yes", "on"),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    reports = tuple(_get(cp, "diagnostics", "reports", "norms violation gap").split())
    known_reports = {"norms", "violation", "gap", "seminorm", "lavrentiev"}
    unknown = set(reports) - known_reports
    if unknown:
        raise ConfigError(f"unknown diagnostics reports: {sorted(unknown)}")
    seminorm_s = _floats(_get(cp, "diagnostics", "seminorm_s", "0.45"))
    seminorm_t = _floats(_get(cp, "diagnostics", "seminorm_t", "2"))
    lav = _get(cp, "diagnostics", "lavrentiev_radii", "")
    lavrentiev_radii = _floats(lav) if lav else ()
    etaw = _get(cp, "diagnostics", "eta_width")
    eta_width = float(etaw) if etaw is not None else None

    out_dir = os.environ.get(
        "PQOBSTACLE_OUTDIR", _get(cp, "output", "directory", "out"))
    formats = tuple(_get(cp, "output", "formats", "field csv").split())

    cfg = ExperimentConfig(
        path=str(path), dim=dim, extents=tuple(ex), resolution=res,
        components=components, integrand_kind=kind, integrand_params=params,
        coefficient=coefficient, psi_spec=psi_spec, g_spec=g_spec,
        solve=solve, reports=reports, seminorm_s=seminorm_s,
        seminorm_t=seminorm_t, lavrentiev_radii=lavrentiev_radii,
        eta_width=eta_width, output_dir=out_dir, formats=formats,
    )
    cfg.resolved = [
        (sec, key, cp.get(sec, key)) for sec in cp.sections()
        for key in sorted(cp.options(sec))
    ]
    _validate_specs(cfg)
    return cfg


def _parse_kappa(text):
    if text.lower() == "auto":
        return None
    return float(text)


def _parse_ladder(text, epsilon, delta):
    """Ladder syntax: 'eps:delta eps:delta ...' or 'auto' (decades from 1e-1
    down to the target delta, with eps following epsilon geometrically, or
    held at 0 when epsilon is 0)."""
    if text.lower() != "auto":
        rungs = []
        for tok in text.split():
            try:
                e, d = tok.split(":")
                rungs.append((float(e), float(d)))
            except ValueError as err:
                raise ConfigError(f"bad ladder entry {tok!r}") from err
        return tuple(rungs)
    k_end = max(1, int(round(-np.log10(delta))))
    deltas = [10.0 ** (-k) for k in range(1, k_end)] + [delta]
    if epsilon <= 0:
        eps = [0.0] * len(deltas)
    else:
        k_eps = max(1, int(round(-np.log10(epsilon))))
        eps = [10.0 ** (-k) for k in range(1, k_eps)] + [epsilon]
        while len(eps) < len(deltas):
            eps.append(epsilon)
        eps = eps[: len(deltas) - 1] + [epsilon]
    return tuple(zip(eps, deltas))


def _validate_specs(cfg):
    for name, spec in (("psi", cfg.psi_spec), ("g", cfg.g_spec)):
        if spec.startswith("file "):
            continue
        try:
            comps = _expr.parse_components(spec, cfg.dim)
        except ValueError as err:
            raise ConfigError(f"{name}: {err}") from err
        if len(comps) not in (1, cfg.components):
            raise ConfigError(f"{name}: {len(comps)} expressions for "
                              f"{cfg.components} components")
    if cfg.coefficient is not None:
        try:
            _expr.parse_expression(cfg.coefficient, cfg.dim)
        except ValueError as err:
            raise ConfigError(f"coefficient: {err}") from err


def _build_field(cfg, spec, grid):
    if spec.startswith("file "):
        path = spec[5:].strip()
        if not os.path.isabs(path):
            path = os.path.join(os.path.dirname(cfg.path), path)
        fld = _grid.read_field(path)
        if fld.grid != grid:
            raise ConfigError(f"field file {path} does not match the grid")
        if fld.N != cfg.components:
            raise ConfigError(f"field file {path} has {fld.N} components")
        return fld
    comps = _expr.parse_components(spec, cfg.dim)
    if len(comps) == 1 and cfg.components > 1:
        comps = comps * cfg.components
    return _grid.sample(grid, comps)


def build_integrand(cfg) -> _integrand.Integrand:
    p = cfg.integrand_params.get("p", 2.0)
    q = cfg.integrand_params.get("q", p)
    mu = cfg.integrand_params.get("mu", 0.0)
    lam = cfg.integrand_params.get("lambda", 1.0)
    Lam = cfg.integrand_params.get("Lambda")
    alpha = cfg.integrand_params.get("alpha")
    if cfg.coefficient is None:
        coeff = None
    else:
        # a literal constant keeps the density autonomous
        coeff = _expr.try_constant(cfg.coefficient)
        if coeff is None:
            coeff = _expr.parse_expression(cfg.coefficient, cfg.dim)
    kind = cfg.integrand_kind
    try:
        if kind == "p-power":
            return _integrand.p_power(p, lam=lam)
        if kind == "p-power-regularized":
            return _integrand.p_power_regularized(p, mu=mu if mu > 0 else 1.0,
                                                  lam=lam)
        if kind == "double-phase":
            a = coeff if coeff is not None else 1.0
            # constant-only coefficient keeps the density autonomous
            return _integrand.double_phase(p, q, a, mu=mu, lam=lam,
                                           alpha=alpha, Lam=Lam)
        if kind == "holder-modulated":
            if coeff is None:
                raise ConfigError("holder-modulated needs a coefficient")
            if alpha is None:
                raise ConfigError("holder-modulated needs alpha")
            return _integrand.holder_modulated(p, coeff, alpha, mu=mu,
                                               lam=lam, Lam=Lam, q=q)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    raise ConfigError(f"unknown integrand kind {cfg.integrand_kind!r} "
                      "(user densities are programmatic-API only)")


def build_problem(cfg) -> _solver.ObstacleProblem:
    grid = _grid.Grid(cfg.extents, cfg.resolution)
    psi = _build_field(cfg, cfg.psi_spec, grid)
    g = _build_field(cfg, cfg.g_spec, grid)
    integrand = build_integrand(cfg)
    try:
        return _solver.ObstacleProblem(grid, integrand, psi, g)
    except ValueError as err:
        raise ConfigError(str(err)) from err
