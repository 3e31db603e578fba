"""Rectangular grids, nodal fields, piecewise-linear gradients and quadrature.

The domain is an axis-aligned box in 1 or 2 dimensions. In 2D every cell is
split into two triangles along the (lower-left, upper-right) diagonal, so the
gradient of the piecewise-linear interpolant is constant per triangle and
exact for affine data. Gradient-type integrals use one-point (centroid)
quadrature per triangle; zero-order terms use mass-lumped nodal weights.

Nodes are ordered row-major: in 2D node (i, j) has flat index i*m2 + j, with
axis 0 the x-axis. Vector-valued fields store their N components interleaved
per node, shape (num_nodes, N).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "TriGradient",
    "sample",
    "gradient",
    "nodal_gradient",
    "lp_norm",
    "integrate_energy",
    "resample",
    "restrict",
    "prolong",
    "evaluate",
    "write_field",
    "read_field",
    "write_field_csv",
]


class Grid:
    """An axis-aligned box [a1,b1] (x [a2,b2]) with m_i nodes per axis."""

    def __init__(self, extents, shape):
        extents = tuple((float(a), float(b)) for a, b in extents)
        shape = tuple(int(m) for m in shape)
        if len(extents) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(shape) != len(extents):
            raise ValueError("extents and resolution dimension mismatch")
        for (a, b), m in zip(extents, shape):
            if not (b > a):
                raise ValueError(f"degenerate extent [{a}, {b}]")
            if m < 2:
                raise ValueError("need at least 2 nodes per axis")
        self.extents = extents
        self.shape = shape
        self.n = len(shape)
        self.h = tuple((b - a) / (m - 1) for (a, b), m in zip(extents, shape))
        self.num_nodes = int(np.prod(shape))
        self._axes = tuple(
            np.linspace(a, b, m) for (a, b), m in zip(extents, shape)
        )

    def __repr__(self):
        return f"Grid(extents={self.extents}, shape={self.shape})"

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.extents == other.extents
            and self.shape == other.shape
        )

    def __hash__(self):
        return hash((self.extents, self.shape))

    @property
    def axis_coords(self):
        return self._axes

    def nodes(self):
        """Node coordinates, shape (num_nodes, n), row-major."""
        if self.n == 1:
            return self._axes[0][:, None].copy()
        X, Y = np.meshgrid(self._axes[0], self._axes[1], indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def boundary_mask(self):
        """Boolean per node, true exactly on the faces of the box."""
        if self.n == 1:
            mask = np.zeros(self.shape[0], dtype=bool)
            mask[0] = mask[-1] = True
            return mask
        m1, m2 = self.shape
        mask = np.zeros((m1, m2), dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask.ravel()

    def node_weights(self):
        """Mass-lumped quadrature weights (product trapezoid); sums to |Omega|."""
        ws = []
        for h, m in zip(self.h, self.shape):
            w = np.full(m, h)
            w[0] = w[-1] = h / 2.0
            ws.append(w)
        if self.n == 1:
            return ws[0].copy()
        return np.outer(ws[0], ws[1]).ravel()

    @property
    def num_cells(self):
        return int(np.prod([m - 1 for m in self.shape]))

    @property
    def num_triangles(self):
        return self.num_cells * (2 if self.n == 2 else 1)

    @property
    def triangle_area(self):
        if self.n == 1:
            return self.h[0]
        return 0.5 * self.h[0] * self.h[1]

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.extents]))

    @property
    def diameter(self):
        return float(np.sqrt(sum((b - a) ** 2 for a, b in self.extents)))

    def centroids(self):
        """Quadrature points of the gradient terms.

        1D: interval midpoints, shape (m-1, 1). 2D: triangle centroids,
        shape (2, m1-1, m2-1, 2) with index 0 the lower/upper triangle.
        """
        if self.n == 1:
            x = self._axes[0]
            return (0.5 * (x[:-1] + x[1:]))[:, None]
        h1, h2 = self.h
        x = self._axes[0][:-1]
        y = self._axes[1][:-1]
        X, Y = np.meshgrid(x, y, indexing="ij")
        lower = np.stack([X + 2 * h1 / 3, Y + h2 / 3], axis=-1)
        upper = np.stack([X + h1 / 3, Y + 2 * h2 / 3], axis=-1)
        return np.stack([lower, upper], axis=0)


class Field:
    """Nodal values on a grid; N components interleaved per node."""

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != grid.num_nodes:
            raise ValueError(
                f"values shape {values.shape} does not match grid with "
                f"{grid.num_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @property
    def N(self):
        return self.values.shape[1]

    def grid_view(self):
        """View shaped (m1[, m2], N)."""
        return self.values.reshape(self.grid.shape + (self.values.shape[1],))

    def copy(self):
        return Field(self.grid, self.values.copy())

    def __repr__(self):
        return f"Field(grid={self.grid!r}, N={self.N})"


class TriGradient:
    """Per-triangle constant gradients of a piecewise-linear field.

    values shape: 2D (2, m1-1, m2-1, N, 2); 1D (m-1, N, 1).
    """

    def __init__(self, grid: Grid, values):
        self.grid = grid
        self.values = np.asarray(values, dtype=float)


def sample(grid: Grid, expr, components=None) -> Field:
    """Evaluate a closed-form expression (or a list of them, one per
    component) at the grid nodes."""
    pts = grid.nodes()
    if components is None and not callable(expr):
        components = list(expr)
    if components is not None:
        cols = [np.broadcast_to(np.asarray(f(pts), dtype=float), (grid.num_nodes,))
                for f in components]
        return Field(grid, np.stack(cols, axis=1))
    vals = np.asarray(expr(pts), dtype=float)
    if vals.ndim == 0:
        vals = np.full(grid.num_nodes, float(vals))
    return Field(grid, vals)


def gradient(field: Field) -> TriGradient:
    """Exact constant gradient of the piecewise-linear interpolant on each
    triangle (1D: per-interval slope)."""
    g = field.grid
    u = field.grid_view()
    if g.n == 1:
        h = g.h[0]
        slopes = (u[1:] - u[:-1]) / h
        return TriGradient(g, slopes[:, :, None])
    h1, h2 = g.h
    # lower triangle (A, B, C) = ((i,j), (i+1,j), (i+1,j+1))
    gx0 = (u[1:, :-1] - u[:-1, :-1]) / h1
    gy0 = (u[1:, 1:] - u[1:, :-1]) / h2
    # upper triangle (A, C, D) = ((i,j), (i+1,j+1), (i,j+1))
    gx1 = (u[1:, 1:] - u[:-1, 1:]) / h1
    gy1 = (u[:-1, 1:] - u[:-1, :-1]) / h2
    lower = np.stack([gx0, gy0], axis=-1)
    upper = np.stack([gx1, gy1], axis=-1)
    return TriGradient(g, np.stack([lower, upper], axis=0))


def nodal_gradient(field: Field):
    """Average the per-triangle gradients to the nodes (simple mean over
    adjacent triangles). Shape (num_nodes, N, n)."""
    g = field.grid
    tg = gradient(field).values
    if g.n == 1:
        m = g.shape[0]
        acc = np.zeros((m,) + tg.shape[1:])
        cnt = np.zeros(m)
        acc[:-1] += tg
        acc[1:] += tg
        cnt[:-1] += 1
        cnt[1:] += 1
        out = acc / cnt[:, None, None]
        return out
    m1, m2 = g.shape
    N = tg.shape[3]
    acc = np.zeros((m1, m2, N, 2))
    cnt = np.zeros((m1, m2))
    for tri, nodes in enumerate(
        [((0, 0), (1, 0), (1, 1)), ((0, 0), (1, 1), (0, 1))]
    ):
        for di, dj in nodes:
            si = slice(di, m1 - 1 + di)
            sj = slice(dj, m2 - 1 + dj)
            acc[si, sj] += tg[tri]
            cnt[si, sj] += 1
    out = acc / cnt[:, :, None, None]
    return out.reshape(g.num_nodes, N, 2)


def lp_norm(obj, t: float) -> float:
    """Discrete L^t norm of a nodal field (mass-lumped) or of a per-triangle
    gradient (one point per triangle)."""
    if t < 1:
        raise ValueError("exponent must be >= 1")
    if isinstance(obj, Field):
        w = obj.grid.node_weights()
        mag = np.sqrt(np.sum(obj.values**2, axis=1))
        return float(np.sum(w * mag**t) ** (1.0 / t))
    if isinstance(obj, TriGradient):
        area = obj.grid.triangle_area
        axes = tuple(range(obj.values.ndim - 2, obj.values.ndim))
        mag = np.sqrt(np.sum(obj.values**2, axis=axes))
        return float((area * np.sum(mag**t)) ** (1.0 / t))
    raise TypeError("expected a Field or TriGradient")


def integrate_energy(problem, field: Field, config) -> float:
    """Discrete total energy

        sum_T area * [F(x_c, grad u) + eps*|grad u|^q]
        + sum_nodes w * kappa * sum_i H_delta(H_delta(psi_i - u_i)),

    with the Dirichlet data of the problem enforced on the boundary nodes
    (the boundary rows of `field` are ignored). Setting eps = kappa = 0
    yields the plain discrete energy of the integrand.
    """
    from .kernels import EnergyAssembler

    if field.grid != problem.grid:
        raise ValueError("field grid does not match problem grid")
    if field.N != problem.psi.N:
        raise ValueError("component count mismatch between field and problem")
    asm = EnergyAssembler.for_problem(problem)
    kappa = getattr(config.penalty, "kappa", 0.0) or 0.0
    return asm.energy(field.values, config.epsilon, kappa, config.penalty.delta)


def _locate(axis, h, x):
    idx = np.floor((x - axis[0]) / h).astype(int)
    idx = np.clip(idx, 0, len(axis) - 2)
    frac = (x - axis[idx]) / h
    return idx, np.clip(frac, 0.0, 1.0)


def evaluate(field: Field, points) -> np.ndarray:
    """Evaluate the piecewise-linear interpolant at arbitrary points,
    shape (k, n) -> (k, N)."""
    g = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u = field.grid_view()
    if g.n == 1:
        i, xi = _locate(g.axis_coords[0], g.h[0], pts[:, 0])
        return (1 - xi)[:, None] * u[i] + xi[:, None] * u[i + 1]
    i, xi = _locate(g.axis_coords[0], g.h[0], pts[:, 0])
    j, eta = _locate(g.axis_coords[1], g.h[1], pts[:, 1])
    uA = u[i, j]
    uB = u[i + 1, j]
    uC = u[i + 1, j + 1]
    uD = u[i, j + 1]
    lower = eta <= xi
    out = np.empty_like(uA)
    # lower triangle: u = uA + (uB-uA)*xi + (uC-uB)*eta
    lo = uA + (uB - uA) * xi[:, None] + (uC - uB) * eta[:, None]
    # upper triangle: u = uA + (uC-uD)*xi + (uD-uA)*eta
    hi = uA + (uC - uD) * xi[:, None] + (uD - uA) * eta[:, None]
    out[lower] = lo[lower]
    out[~lower] = hi[~lower]
    return out


def resample(field: Field, target: Grid) -> Field:
    """Piecewise-linear interpolation onto another grid over the same box."""
    if target.extents != field.grid.extents:
        raise ValueError("resample requires grids over the same box")
    return Field(target, evaluate(field, target.nodes()))


def prolong(field: Field, fine: Grid) -> Field:
    """Interpolate onto a finer grid."""
    return resample(field, fine)


def restrict(field: Field, coarse: Grid) -> Field:
    """Restrict onto a coarser grid (injection at coincident nodes)."""
    return resample(field, coarse)


# ---------------------------------------------------------------------------
# plain-text field format: header "pqfield n m1 [m2] N", then one line per
# node with coordinates and N values, row-major.

def write_field(field: Field, path):
    g = field.grid
    pts = g.nodes()
    with open(path, "w") as fh:
        dims = " ".join(str(m) for m in g.shape)
        fh.write(f"pqfield {g.n} {dims} {field.N}\n")
        for x, v in zip(pts, field.values):
            coords = " ".join(repr(float(c)) for c in x)
            vals = " ".join(repr(float(c)) for c in v)
            fh.write(f"{coords} {vals}\n")


def read_field(path) -> Field:
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "pqfield":
            raise ValueError(f"{path}: not a pqfield file")
        n = int(header[1])
        shape = tuple(int(t) for t in header[2 : 2 + n])
        N = int(header[2 + n])
        data = np.loadtxt(fh, ndmin=2)
    num = int(np.prod(shape))
    if data.shape != (num, n + N):
        raise ValueError(f"{path}: expected {num} rows of {n + N} columns")
    coords = data[:, :n]
    extents = tuple((coords[:, k].min(), coords[:, k].max()) for k in range(n))
    grid = Grid(extents, shape)
    if not np.allclose(coords, grid.nodes(), atol=1e-12, rtol=0):
        raise ValueError(f"{path}: nodes are not a row-major uniform grid")
    return Field(grid, data[:, n:])


def write_field_csv(field: Field, path):
    g = field.grid
    pts = g.nodes()
    cols = ["x", "y"][: g.n] + [f"v{k+1}" for k in range(field.N)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for x, v in zip(pts, field.values):
            row = [repr(float(c)) for c in x] + [repr(float(c)) for c in v]
            fh.write(",".join(row) + "\n")
