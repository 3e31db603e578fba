"""Experiment runner.

    pqobstacle solve <config>
    pqobstacle sweep <config> --axis {kappa,delta,epsilon,resolution,q} [--values ...]
    pqobstacle diagnose <config> <field-file>

Artifacts (solution fields, ladder traces, sweep tables, diagnostics) are
written as flat files under the configured output directory; the environment
variable PQOBSTACLE_OUTDIR overrides it. Every artifact embeds the resolved
configuration as comment lines. Exit codes: 0 success, 2 configuration
error, 3 solver stagnation (partial artifacts are kept).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import config as _config
from . import diagnostics as _diag
from . import grid as _grid
from . import penalty as _penalty
from . import solver as _solver

__all__ = ["main"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pqobstacle",
        description="Obstacle-problem solver and diagnostics for (p,q)-growth energies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the continuation ladder")
    p_solve.add_argument("config")

    p_sweep = sub.add_parser("sweep", help="one-axis parameter sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True,
                         choices=["kappa", "delta", "epsilon", "resolution", "q"])
    p_sweep.add_argument("--values", nargs="*", default=None,
                         help="sweep values; kappa accepts k0-multiples like 2k0")

    p_diag = sub.add_parser("diagnose", help="diagnostics for a stored field")
    p_diag.add_argument("config")
    p_diag.add_argument("field")

    args = parser.parse_args(argv)
    try:
        cfg = _config.load_config(args.config)
        problem = _config.build_problem(cfg)
    except _config.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    os.makedirs(cfg.output_dir, exist_ok=True)
    if args.command == "solve":
        return _cmd_solve(cfg, problem)
    if args.command == "sweep":
        return _cmd_sweep(cfg, problem, args.axis, args.values)
    return _cmd_diagnose(cfg, problem, args.field)


# -- solve --------------------------------------------------------------------

def _cmd_solve(cfg, problem) -> int:
    kappa0_base = _penalty.compute_kappa0(problem, epsilon=0.0)
    eps_max = max(e for e, _ in cfg.solve.ladder)
    kappa0_eps = (_penalty.compute_kappa0(problem, epsilon=eps_max)
                  if eps_max > 0 else kappa0_base)
    auto = cfg.solve.penalty.kappa is None
    stagnated = False
    try:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = _solver.solve_ladder(problem, cfg.solve)
    except _solver.StagnationError as err:
        result = err.best
        stagnated = True

    _write_solution(cfg, result)
    _write_ladder_trace(cfg, result)
    kappa = result.ladder_trace[-1].kappa if result.ladder_trace else \
        _solver.resolve_kappa(problem, cfg.solve)
    summary = _solve_summary(cfg, problem, result, kappa0_base, kappa0_eps,
                             kappa, auto, stagnated)
    _write_text(os.path.join(cfg.output_dir, "summary.txt"), summary)
    print("\n".join(summary))
    if stagnated:
        return 3
    final_delta = result.ladder_trace[-1].delta if result.ladder_trace else \
        cfg.solve.penalty.delta
    viol = _penalty.violation(result.u, problem.psi)
    ok = result.converged and (not auto or viol <= 100.0 * final_delta)
    return 0 if ok else 3


def _solve_summary(cfg, problem, result, k0_base, k0_eps, kappa, auto, stagnated):
    pr = problem.integrand.params
    gap = _diag.gap_check(pr, problem.grid.n, problem.integrand.autonomous)
    viol = _penalty.violation(result.u, problem.psi)
    res = "x".join(str(m) for m in cfg.resolution)
    lines = [
        f"problem: dim={cfg.dim} resolution={res} N={cfg.components} "
        f"integrand={cfg.integrand_kind} p={pr.p} q={pr.q} mu={pr.mu}",
        f"kappa0 (eps=0): {k0_base!r}",
        f"kappa0 (eps={max(e for e, _ in cfg.solve.ladder)!r}): {k0_eps!r}",
        f"kappa used: {kappa!r} ({'auto' if auto else 'fixed'}, "
        f"safety={cfg.solve.penalty.safety!r})",
    ]
    if gap.satisfied:
        lines.append(f"gap condition: satisfied (q={pr.q} < bound {gap.bound!r})")
    else:
        lines.append(f"WARNING: gap condition violated (q={pr.q}, bound={gap.bound!r})")
    lines += [
        f"converged: {str(result.converged).lower()} "
        f"(iterations={result.iterations}{', stagnated' if stagnated else ''})",
        f"final energy: {result.history[-1][0]!r}",
        f"violation: {viol!r}",
        f"w1q_norm: {_diag.w1q_norm(result.u, pr.q)!r}",
    ]
    final_delta = (result.ladder_trace[-1].delta if result.ladder_trace
                   else cfg.solve.penalty.delta)
    mask = _diag.contact_mask(result.u, problem.psi, 2.0 * final_delta)
    count = int(np.sum(mask))
    if problem.grid.n == 1 and count:
        xs = problem.grid.nodes()[mask, 0]
        lines.append(f"contact nodes: {count} in [{float(xs.min())!r}, {float(xs.max())!r}]")
    else:
        lines.append(f"contact nodes: {count}")
    return lines


def _write_solution(cfg, result):
    if "field" in cfg.formats:
        _grid.write_field(result.u, os.path.join(cfg.output_dir, "solution.field"))
    if "csv" in cfg.formats:
        _grid.write_field_csv(result.u, os.path.join(cfg.output_dir, "solution.csv"))


def _write_ladder_trace(cfg, result):
    path = os.path.join(cfg.output_dir, "ladder_trace.csv")
    rows = ["rung,epsilon,delta,kappa,energy,violation,w1q_norm"]
    for k, r in enumerate(result.ladder_trace):
        rows.append(f"{k},{r.epsilon!r},{r.delta!r},{r.kappa!r},"
                    f"{r.energy!r},{r.violation!r},{r.w1q_norm!r}")
    _write_text(path, cfg.header_lines() + rows)


def _write_text(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- sweep --------------------------------------------------------------------

def _decades_down_to(target, start=1e-1):
    vals = []
    v = start
    while v > target * (1 + 1e-12):
        vals.append(v)
        v /= 10.0
    vals.append(target)
    return vals


def _sweep_values(axis, values, cfg, problem):
    if values:
        if axis == "kappa":
            k0 = _penalty.compute_kappa0(problem, epsilon=cfg.solve.epsilon)
            out = []
            for tok in values:
                if tok.endswith("k0"):
                    out.append(float(tok[:-2] or 1.0) * k0)
                else:
                    out.append(float(tok))
            return out
        if axis == "resolution":
            return [int(v) for v in values]
        return [float(v) for v in values]
    pr = problem.integrand.params
    if axis == "kappa":
        k0 = _penalty.compute_kappa0(problem, epsilon=cfg.solve.epsilon)
        return [k0 / 4, k0 / 2, k0, 2 * k0, 4 * k0]
    if axis == "delta":
        return [1e-1, 1e-2, 1e-3, 1e-4]
    if axis == "epsilon":
        return [1e-1, 1e-2, 1e-3, 1e-4]
    if axis == "resolution":
        m = cfg.resolution[0]
        return [(m - 1) * 2**k + 1 for k in range(3)]
    return [pr.p, pr.p + 0.25, pr.p + 0.5]  # q


def _is_monotone(vals):
    return (all(a <= b for a, b in zip(vals, vals[1:]))
            or all(a >= b for a, b in zip(vals, vals[1:])))


def _sweep_point(cfg, problem, axis, value, prev_u):
    """Build the per-point problem/config pair and a warm-start iterate."""
    import dataclasses

    pen = cfg.solve.penalty
    sc = cfg.solve
    if axis == "kappa":
        pen2 = _penalty.PenaltyParams(kappa=value, delta=pen.delta, safety=pen.safety)
        sc2 = dataclasses.replace(sc, penalty=pen2)
        return problem, sc2, prev_u
    if axis == "delta":
        pen2 = _penalty.PenaltyParams(kappa=pen.kappa, delta=value, safety=pen.safety)
        ladder = tuple((sc.epsilon, d) for d in _decades_down_to(value))
        sc2 = dataclasses.replace(sc, penalty=pen2, ladder=ladder)
        return problem, sc2, prev_u
    if axis == "epsilon":
        ladder = tuple((e, pen.delta) for e in _decades_down_to(value))
        sc2 = dataclasses.replace(sc, epsilon=value, ladder=ladder)
        return problem, sc2, prev_u
    if axis == "resolution":
        grid = _grid.Grid(cfg.extents, (value,) * cfg.dim)
        cfg2 = dataclasses.replace(cfg, resolution=(value,) * cfg.dim)
        problem2 = _config.build_problem(cfg2)
        init = _grid.resample(prev_u, grid) if prev_u is not None else None
        return problem2, sc, init
    # axis == "q"
    cfg2 = dataclasses.replace(
        cfg, integrand_params=dict(cfg.integrand_params, q=value))
    problem2 = _config.build_problem(cfg2)
    return problem2, sc, prev_u


def _cmd_sweep(cfg, problem, axis, raw_values) -> int:
    import warnings

    try:
        values = _sweep_values(axis, raw_values, cfg, problem)
    except ValueError as err:
        print(f"config error: bad sweep values ({err})", file=sys.stderr)
        return 2
    warm = _is_monotone(values)
    rows = ["parameter,energy,violation,w1q_norm,seminorm,iterations,wall_time,status"]
    want_semi = "seminorm" in cfg.reports
    s0 = cfg.seminorm_s[0]
    t0 = cfg.seminorm_t[0]
    prev_u = None
    for value in values:
        t_start = time.perf_counter()
        status = "ok"
        try:
            problem2, sc2, init = _sweep_point(cfg, problem, axis, value, prev_u)
        except (_config.ConfigError, ValueError) as err:
            rows.append(f"{value!r},,,,,0,0.0,config_error")
            print(f"sweep point {value!r} skipped: {err}", file=sys.stderr)
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = _solver.solve_ladder(problem2, sc2, initial=init)
            if not result.converged:
                status = "max_iters"
        except _solver.StagnationError as err:
            result = err.best
            status = "stagnation"
        elapsed = 0.0 if sc2.deterministic else time.perf_counter() - t_start
        prev_u = result.u if warm else None
        pr2 = problem2.integrand.params
        semi = ""
        if want_semi:
            vg = _diag.v_gradient(result.u, pr2.mu, pr2.p)
            semi = repr(_diag.nikolskii_seminorm(vg, s0, t0))
        viol = _penalty.violation(result.u, problem2.psi)
        rows.append(
            f"{value!r},{result.history[-1][0]!r},{viol!r},"
            f"{_diag.w1q_norm(result.u, pr2.q)!r},{semi},"
            f"{result.iterations},{elapsed!r},{status}")
    path = os.path.join(cfg.output_dir, f"sweep_{axis}.csv")
    _write_text(path, cfg.header_lines() + rows)
    print(f"wrote {path} ({len(values)} points)")
    return 0


# -- diagnose -----------------------------------------------------------------

def _cmd_diagnose(cfg, problem, field_path) -> int:
    try:
        fld = _grid.read_field(field_path)
    except (OSError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if fld.grid != problem.grid or fld.N != problem.psi.N:
        print("config error: field file does not match the configured grid",
              file=sys.stderr)
        return 2

    pr = problem.integrand.params
    lines = []
    if "norms" in cfg.reports:
        lines.append(f"w1q_norm: {_diag.w1q_norm(fld, pr.q)!r}")
        lines.append(f"v_l2: {_diag.v_l2(fld, pr.mu, pr.p)!r}")
    if "violation" in cfg.reports:
        lines.append(f"violation: {_penalty.violation(fld, problem.psi)!r}")
    if "gap" in cfg.reports:
        gap = _diag.gap_check(pr, problem.grid.n, problem.integrand.autonomous)
        verdict = "satisfied" if gap.satisfied else "violated"
        lines.append(f"gap condition: {verdict} (bound={gap.bound!r})")
    if "seminorm" in cfg.reports:
        rows = ["s,t,offset,habs,lt_norm,scaled"]
        for s in cfg.seminorm_s:
            for t in cfg.seminorm_t:
                vg = _diag.v_gradient(fld, pr.mu, pr.p)
                table = _diag.nikolskii_offset_table(vg, s, t)
                best = max(r[3] for r in table)
                lines.append(f"seminorm(s={s!r}, t={t!r}): {best!r}")
                for off, habs, lt, scaled in table:
                    off_s = " ".join(str(k) for k in off)
                    rows.append(f"{s!r},{t!r},{off_s},{habs!r},{lt!r},{scaled!r}")
        _write_text(os.path.join(cfg.output_dir, "seminorm.csv"),
                    cfg.header_lines() + rows)
    if "lavrentiev" in cfg.reports and cfg.lavrentiev_radii:
        rep = _diag.lavrentiev_probe(problem, fld, cfg.eta_width,
                                     cfg.lavrentiev_radii)
        rows = ["radius,energy"]
        rows += [f"{r!r},{e!r}" for r, e in zip(rep.radii, rep.energies)]
        rows.append(f"base,{rep.base_energy!r}")
        _write_text(os.path.join(cfg.output_dir, "lavrentiev.csv"),
                    cfg.header_lines() + rows)
        lines.append(f"lavrentiev gap estimate: {rep.gap_estimate!r} "
                     f"(feasible={rep.feasible})")
    _write_text(os.path.join(cfg.output_dir, "diagnostics_summary.txt"), lines)
    print("\n".join(lines))
    return 0


if __name__ == "__main__":
    sys.exit(main())
