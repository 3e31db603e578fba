# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled assembly kernels for the two-power densities.

Same contract as `_kernels_py` (which holds the reference implementation and
the generic path for user densities). Loops run in a fixed order, so results
are deterministic; they differ from the numpy backend only by summation
rounding.
"""

from libc.math cimport pow, sqrt


cdef inline double _powq(double s, double e) nogil:
    # quarter-integer exponents (the common p, q cases) as sqrt chains;
    # everything else falls back to pow
    cdef double e4 = 4.0 * e
    cdef int k = <int> e4
    cdef double r, out
    cdef int i
    if e4 == k and 0 <= k <= 16:
        if k == 0:
            return 1.0
        if s == 0.0:
            return 0.0
        if k % 4 == 0:
            r = s
            k = k // 4
        elif k % 2 == 0:
            r = sqrt(s)
            k = k // 2
        else:
            r = sqrt(sqrt(s))
        out = r
        for i in range(k - 1):
            out *= r
        return out
    return pow(s, e)


cdef inline double _dens(double s, double a1, double a2, double mu2,
                         double p, double q, double eps) nogil:
    cdef double val = a1 * _powq(mu2 + s, 0.5 * p)
    if a2 != 0.0:
        val += a2 * _powq(mu2 + s, 0.5 * q)
    if eps != 0.0:
        val += eps * _powq(s, 0.5 * q)
    return val


cdef inline double _dfac(double s, double a1, double a2, double mu2,
                         double p, double q, double eps) nogil:
    cdef double fac = p * a1 * _powq(mu2 + s, 0.5 * p - 1.0)
    if a2 != 0.0:
        fac += q * a2 * _powq(mu2 + s, 0.5 * q - 1.0)
    if eps != 0.0:
        fac += eps * q * _powq(s, 0.5 * q - 1.0)
    return fac


def energy_1d(const double[:, ::1] u, double h, const double[::1] c1, c2,
              double mu, double p, double q, double eps):
    cdef const double[::1] a2v
    cdef bint has2 = c2 is not None
    if has2:
        a2v = c2
    cdef Py_ssize_t m = u.shape[0], N = u.shape[1], k, comp
    cdef double mu2 = mu * mu, s, g, total = 0.0, a2 = 0.0
    for k in range(m - 1):
        s = 0.0
        for comp in range(N):
            g = (u[k + 1, comp] - u[k, comp]) / h
            s += g * g
        if has2:
            a2 = a2v[k]
        total += _dens(s, c1[k], a2, mu2, p, q, eps)
    return h * total


def energy_grad_1d(const double[:, ::1] u, double h, const double[::1] c1, c2,
                   double mu, double p, double q, double eps,
                   double[:, ::1] grad):
    cdef const double[::1] a2v
    cdef bint has2 = c2 is not None
    if has2:
        a2v = c2
    cdef Py_ssize_t m = u.shape[0], N = u.shape[1], k, comp
    cdef double mu2 = mu * mu, s, g, fac, c, total = 0.0, a2 = 0.0
    for k in range(m - 1):
        s = 0.0
        for comp in range(N):
            g = (u[k + 1, comp] - u[k, comp]) / h
            s += g * g
        if has2:
            a2 = a2v[k]
        total += _dens(s, c1[k], a2, mu2, p, q, eps)
        fac = _dfac(s, c1[k], a2, mu2, p, q, eps)
        for comp in range(N):
            g = (u[k + 1, comp] - u[k, comp]) / h
            c = fac * g
            grad[k + 1, comp] += c
            grad[k, comp] -= c
    return h * total


def energy_2d(const double[:, :, ::1] u, double h1, double h2,
              const double[:, :, ::1] c1, c2,
              double mu, double p, double q, double eps):
    cdef const double[:, :, ::1] a2v
    cdef bint has2 = c2 is not None
    if has2:
        a2v = c2
    cdef Py_ssize_t m1 = u.shape[0], m2 = u.shape[1], N = u.shape[2]
    cdef Py_ssize_t i, j, comp
    cdef double mu2 = mu * mu, area = 0.5 * h1 * h2
    cdef double gx, gy, s, total = 0.0, a2 = 0.0
    for i in range(m1 - 1):
        for j in range(m2 - 1):
            s = 0.0
            for comp in range(N):
                gx = (u[i + 1, j, comp] - u[i, j, comp]) / h1
                gy = (u[i + 1, j + 1, comp] - u[i + 1, j, comp]) / h2
                s += gx * gx + gy * gy
            if has2:
                a2 = a2v[0, i, j]
            total += _dens(s, c1[0, i, j], a2, mu2, p, q, eps)
            s = 0.0
            for comp in range(N):
                gx = (u[i + 1, j + 1, comp] - u[i, j + 1, comp]) / h1
                gy = (u[i, j + 1, comp] - u[i, j, comp]) / h2
                s += gx * gx + gy * gy
            if has2:
                a2 = a2v[1, i, j]
            total += _dens(s, c1[1, i, j], a2, mu2, p, q, eps)
    return area * total


def energy_grad_2d(const double[:, :, ::1] u, double h1, double h2,
                   const double[:, :, ::1] c1, c2,
                   double mu, double p, double q, double eps,
                   double[:, :, ::1] grad):
    cdef const double[:, :, ::1] a2v
    cdef bint has2 = c2 is not None
    if has2:
        a2v = c2
    cdef Py_ssize_t m1 = u.shape[0], m2 = u.shape[1], N = u.shape[2]
    cdef Py_ssize_t i, j, comp
    cdef double mu2 = mu * mu, area = 0.5 * h1 * h2
    cdef double gx, gy, s, fac, px, qy, total = 0.0, a2 = 0.0
    for i in range(m1 - 1):
        for j in range(m2 - 1):
            # lower triangle
            s = 0.0
            for comp in range(N):
                gx = (u[i + 1, j, comp] - u[i, j, comp]) / h1
                gy = (u[i + 1, j + 1, comp] - u[i + 1, j, comp]) / h2
                s += gx * gx + gy * gy
            if has2:
                a2 = a2v[0, i, j]
            total += _dens(s, c1[0, i, j], a2, mu2, p, q, eps)
            fac = _dfac(s, c1[0, i, j], a2, mu2, p, q, eps)
            for comp in range(N):
                gx = (u[i + 1, j, comp] - u[i, j, comp]) / h1
                gy = (u[i + 1, j + 1, comp] - u[i + 1, j, comp]) / h2
                px = area / h1 * fac * gx
                qy = area / h2 * fac * gy
                grad[i, j, comp] -= px
                grad[i + 1, j, comp] += px - qy
                grad[i + 1, j + 1, comp] += qy
            # upper triangle
            s = 0.0
            for comp in range(N):
                gx = (u[i + 1, j + 1, comp] - u[i, j + 1, comp]) / h1
                gy = (u[i, j + 1, comp] - u[i, j, comp]) / h2
                s += gx * gx + gy * gy
            if has2:
                a2 = a2v[1, i, j]
            total += _dens(s, c1[1, i, j], a2, mu2, p, q, eps)
            fac = _dfac(s, c1[1, i, j], a2, mu2, p, q, eps)
            for comp in range(N):
                gx = (u[i + 1, j + 1, comp] - u[i, j + 1, comp]) / h1
                gy = (u[i, j + 1, comp] - u[i, j, comp]) / h2
                px = area / h1 * fac * gx
                qy = area / h2 * fac * gy
                grad[i, j, comp] -= qy
                grad[i + 1, j + 1, comp] += px
                grad[i, j + 1, comp] += qy - px
    return area * total
