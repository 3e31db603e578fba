"""Closed-form expression catalog for configuration files.

Each entry maps a name plus numeric arguments to a vectorized callable over
point arrays of shape (..., n). Keeping the catalog fixed keeps config
parsing trivial and runs reproducible; arbitrary densities remain available
through the programmatic API.

    constant c                ->  c
    affine c a1 [a2]          ->  c + a1*x [+ a2*y]
    parabolic-cap h c x0 [y0] ->  h - c*((x-x0)^2 [+ (y-y0)^2])
    radial-bump A r0 x0 [y0]  ->  A * max(0, 1 - |x-x0|^2/r0^2)^2
    abs-power A beta [axis]   ->  A * |x_axis|^beta
    ramp A x0 [axis]          ->  A * max(0, x_axis - x0)
    sine-bump A k1 [k2]       ->  A * sin(pi*k1*x) [* sin(pi*k2*y)]
"""

from __future__ import annotations

import numpy as np

__all__ = ["CATALOG", "parse_expression", "parse_components"]


def _constant(args, n):
    (c,) = args
    return lambda pts: np.full(np.asarray(pts).shape[:-1], c)


def _affine(args, n):
    c, *lin = args
    if len(lin) != n:
        raise ValueError(f"affine needs 1 + {n} arguments in {n}D")
    a = np.asarray(lin)
    return lambda pts: c + np.asarray(pts) @ a


def _parabolic_cap(args, n):
    h, c, *center = args
    if len(center) != n:
        raise ValueError(f"parabolic-cap needs 2 + {n} arguments in {n}D")
    x0 = np.asarray(center)
    return lambda pts: h - c * np.sum((np.asarray(pts) - x0) ** 2, axis=-1)


def _radial_bump(args, n):
    A, r0, *center = args
    if len(center) != n:
        raise ValueError(f"radial-bump needs 2 + {n} arguments in {n}D")
    if r0 <= 0:
        raise ValueError("radial-bump needs r0 > 0")
    x0 = np.asarray(center)

    def f(pts):
        r2 = np.sum((np.asarray(pts) - x0) ** 2, axis=-1)
        return A * np.maximum(0.0, 1.0 - r2 / r0**2) ** 2

    return f


def _abs_power(args, n):
    if len(args) == 2:
        A, beta, axis = *args, 0
    elif len(args) == 3:
        A, beta, axis = args
    else:
        raise ValueError("abs-power takes 2 or 3 arguments")
    axis = int(axis)
    if not 0 <= axis < n:
        raise ValueError("abs-power axis out of range")
    return lambda pts: A * np.abs(np.asarray(pts)[..., axis]) ** beta


def _ramp(args, n):
    if len(args) == 2:
        A, x0, axis = *args, 0
    elif len(args) == 3:
        A, x0, axis = args
    else:
        raise ValueError("ramp takes 2 or 3 arguments")
    axis = int(axis)
    if not 0 <= axis < n:
        raise ValueError("ramp axis out of range")
    return lambda pts: A * np.maximum(0.0, np.asarray(pts)[..., axis] - x0)


def _sine_bump(args, n):
    A, *ks = args
    if len(ks) != n:
        raise ValueError(f"sine-bump needs 1 + {n} arguments in {n}D")

    def f(pts):
        pts = np.asarray(pts)
        out = np.full(pts.shape[:-1], A)
        for axis, k in enumerate(ks):
            out = out * np.sin(np.pi * k * pts[..., axis])
        return out

    return f


CATALOG = {
    "constant": _constant,
    "affine": _affine,
    "parabolic-cap": _parabolic_cap,
    "radial-bump": _radial_bump,
    "abs-power": _abs_power,
    "ramp": _ramp,
    "sine-bump": _sine_bump,
}


def parse_expression(text: str, n: int):
    """'name a b c' -> vectorized callable over (..., n) points."""
    parts = text.split()
    if not parts:
        raise ValueError("empty expression")
    name, args = parts[0], parts[1:]
    if name not in CATALOG:
        known = ", ".join(sorted(CATALOG))
        raise ValueError(f"unknown expression {name!r} (catalog: {known})")
    try:
        vals = [float(a) for a in args]
    except ValueError as err:
        raise ValueError(f"non-numeric argument in {text!r}") from err
    return CATALOG[name](vals, n)


def parse_components(text: str, n: int):
    """Semicolon-separated expressions, one per field component."""
    return [parse_expression(part.strip(), n) for part in text.split(";")]


def try_constant(text: str):
    """The value of a `constant c` expression, or None for anything else.
    Constant coefficients keep built-in densities autonomous."""
    parts = text.split()
    if len(parts) == 2 and parts[0] == "constant":
        try:
            return float(parts[1])
        except ValueError:
            return None
    return None
