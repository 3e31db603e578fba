"""Numpy implementation of the hot assembly kernels.

Mirrors the compiled module `_kernels` exactly; the backend is picked once at
import time in `kernels`. The generic per-triangle loops for user-supplied
densities live only here (they call back into Python anyway).

Triangle convention per cell (i, j) with spacings h1, h2:
    lower (A, B, C) = ((i,j), (i+1,j), (i+1,j+1)):  gx=(B-A)/h1, gy=(C-B)/h2
    upper (A, C, D) = ((i,j), (i+1,j+1), (i,j+1)):  gx=(C-D)/h1, gy=(D-A)/h2
Densities are the two-power form
    c1*(mu^2+s)^(p/2) + c2*(mu^2+s)^(q/2) + eps*s^(q/2),  s = |grad u|^2.
"""

from __future__ import annotations

import numpy as np


def _density(s, c1, c2, mu2, p, q, eps):
    val = c1 * (mu2 + s) ** (0.5 * p)
    if c2 is not None:
        val = val + c2 * (mu2 + s) ** (0.5 * q)
    if eps:
        val = val + eps * s ** (0.5 * q)
    return val


def _dfactor(s, c1, c2, mu2, p, q, eps):
    fac = p * c1 * (mu2 + s) ** (0.5 * p - 1.0)
    if c2 is not None:
        fac = fac + q * c2 * (mu2 + s) ** (0.5 * q - 1.0)
    if eps:
        fac = fac + eps * q * s ** (0.5 * q - 1.0)
    return fac


def _grads_1d(u, h):
    return (u[1:] - u[:-1]) / h  # (m-1, N)


def energy_1d(u, h, c1, c2, mu, p, q, eps):
    g = _grads_1d(u, h)
    s = np.sum(g * g, axis=1)
    return float(h * np.sum(_density(s, c1, c2, mu * mu, p, q, eps)))


def energy_grad_1d(u, h, c1, c2, mu, p, q, eps, grad):
    g = _grads_1d(u, h)
    s = np.sum(g * g, axis=1)
    dens = _density(s, c1, c2, mu * mu, p, q, eps)
    fac = _dfactor(s, c1, c2, mu * mu, p, q, eps)
    contrib = fac[:, None] * g  # d(h*F)/du_{k+1}
    grad[1:] += contrib
    grad[:-1] -= contrib
    return float(h * np.sum(dens))


def _grads_2d(u, h1, h2):
    gx0 = (u[1:, :-1] - u[:-1, :-1]) / h1
    gy0 = (u[1:, 1:] - u[1:, :-1]) / h2
    gx1 = (u[1:, 1:] - u[:-1, 1:]) / h1
    gy1 = (u[:-1, 1:] - u[:-1, :-1]) / h2
    return gx0, gy0, gx1, gy1


def energy_2d(u, h1, h2, c1, c2, mu, p, q, eps):
    gx0, gy0, gx1, gy1 = _grads_2d(u, h1, h2)
    mu2 = mu * mu
    area = 0.5 * h1 * h2
    s0 = np.sum(gx0 * gx0 + gy0 * gy0, axis=2)
    s1 = np.sum(gx1 * gx1 + gy1 * gy1, axis=2)
    c2_0 = None if c2 is None else c2[0]
    c2_1 = None if c2 is None else c2[1]
    total = np.sum(_density(s0, c1[0], c2_0, mu2, p, q, eps))
    total += np.sum(_density(s1, c1[1], c2_1, mu2, p, q, eps))
    return float(area * total)


def energy_grad_2d(u, h1, h2, c1, c2, mu, p, q, eps, grad):
    gx0, gy0, gx1, gy1 = _grads_2d(u, h1, h2)
    mu2 = mu * mu
    area = 0.5 * h1 * h2
    s0 = np.sum(gx0 * gx0 + gy0 * gy0, axis=2)
    s1 = np.sum(gx1 * gx1 + gy1 * gy1, axis=2)
    c2_0 = None if c2 is None else c2[0]
    c2_1 = None if c2 is None else c2[1]
    total = np.sum(_density(s0, c1[0], c2_0, mu2, p, q, eps))
    total += np.sum(_density(s1, c1[1], c2_1, mu2, p, q, eps))
    f0 = _dfactor(s0, c1[0], c2_0, mu2, p, q, eps)[:, :, None]
    f1 = _dfactor(s1, c1[1], c2_1, mu2, p, q, eps)[:, :, None]
    px0 = area / h1 * f0 * gx0
    qy0 = area / h2 * f0 * gy0
    px1 = area / h1 * f1 * gx1
    qy1 = area / h2 * f1 * gy1
    # lower triangle: A -= PX; B += PX - QY; C += QY
    grad[:-1, :-1] -= px0
    grad[1:, :-1] += px0 - qy0
    grad[1:, 1:] += qy0
    # upper triangle: A -= QY; C += PX; D += QY - PX
    grad[:-1, :-1] -= qy1
    grad[1:, 1:] += px1
    grad[:-1, 1:] += qy1 - px1
    return float(area * total)


# -- generic path for user-supplied densities --------------------------------

def generic_energy_1d(u, h, xc, integrand, eps):
    g = _grads_1d(u, h)[:, :, None]
    vals = integrand.eval_batch(xc, g)
    if eps:
        s = np.sum(g * g, axis=(1, 2))
        vals = vals + eps * s ** (0.5 * integrand.params.q)
    return float(h * np.sum(vals))


def generic_energy_grad_1d(u, h, xc, integrand, eps, grad):
    g = _grads_1d(u, h)[:, :, None]
    vals = integrand.eval_batch(xc, g)
    dmat = integrand.grad_batch(xc, g)
    if eps:
        q = integrand.params.q
        s = np.sum(g * g, axis=(1, 2))
        vals = vals + eps * s ** (0.5 * q)
        dmat = dmat + eps * q * s[:, None, None] ** (0.5 * q - 1.0) * g
    contrib = dmat[:, :, 0]
    grad[1:] += contrib
    grad[:-1] -= contrib
    return float(h * np.sum(vals))


def generic_energy_2d(u, h1, h2, xc, integrand, eps):
    gx0, gy0, gx1, gy1 = _grads_2d(u, h1, h2)
    area = 0.5 * h1 * h2
    total = 0.0
    for tri, (gx, gy) in enumerate([(gx0, gy0), (gx1, gy1)]):
        g = np.stack([gx, gy], axis=-1)  # (mc1, mc2, N, 2)
        vals = integrand.eval_batch(xc[tri], g)
        if eps:
            s = np.sum(g * g, axis=(-2, -1))
            vals = vals + eps * s ** (0.5 * integrand.params.q)
        total += np.sum(vals)
    return float(area * total)


def generic_energy_grad_2d(u, h1, h2, xc, integrand, eps, grad):
    gx0, gy0, gx1, gy1 = _grads_2d(u, h1, h2)
    area = 0.5 * h1 * h2
    q = integrand.params.q
    total = 0.0
    for tri, (gx, gy) in enumerate([(gx0, gy0), (gx1, gy1)]):
        g = np.stack([gx, gy], axis=-1)
        vals = integrand.eval_batch(xc[tri], g)
        dmat = integrand.grad_batch(xc[tri], g)
        if eps:
            s = np.sum(g * g, axis=(-2, -1))
            vals = vals + eps * s ** (0.5 * q)
            dmat = dmat + eps * q * s[..., None, None] ** (0.5 * q - 1.0) * g
        total += np.sum(vals)
        px = area / h1 * dmat[..., 0]
        qy = area / h2 * dmat[..., 1]
        if tri == 0:
            grad[:-1, :-1] -= px
            grad[1:, :-1] += px - qy
            grad[1:, 1:] += qy
        else:
            grad[:-1, :-1] -= qy
            grad[1:, 1:] += px
            grad[:-1, 1:] += qy - px
    return float(area * total)
